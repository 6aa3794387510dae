#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace gencov {

using Rational = boost::multiprecision::cpp_rational;

/// Dense matrix over exact rationals. Row-major, minimal surface: just what
/// the cochain-complex computations need (multiply, rank, nullspace).
class RationalMatrix {
public:
    RationalMatrix() = default;
    RationalMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    Rational& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const Rational& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    bool is_zero() const {
        for (const auto& x : data_)
            if (x != 0) return false;
        return true;
    }

    RationalMatrix operator*(const RationalMatrix& other) const {
        if (cols_ != other.rows_) throw std::invalid_argument("matrix dimension mismatch");
        RationalMatrix out(rows_, other.cols_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t k = 0; k < cols_; ++k) {
                const Rational& a = (*this)(i, k);
                if (a == 0) continue;
                for (std::size_t j = 0; j < other.cols_; ++j) {
                    const Rational& b = other(k, j);
                    if (b != 0) out(i, j) += a * b;
                }
            }
        return out;
    }

    /// Reduced row echelon form in place; returns the rank. If `pivot_cols`
    /// is given it receives the pivot column indices in order.
    std::size_t row_reduce(std::vector<std::size_t>* pivot_cols = nullptr) {
        std::size_t rank = 0;
        for (std::size_t col = 0; col < cols_ && rank < rows_; ++col) {
            std::size_t pivot = rank;
            while (pivot < rows_ && (*this)(pivot, col) == 0) ++pivot;
            if (pivot == rows_) continue;
            if (pivot != rank)
                for (std::size_t j = 0; j < cols_; ++j)
                    std::swap((*this)(pivot, j), (*this)(rank, j));
            Rational inv = Rational(1) / (*this)(rank, col);
            for (std::size_t j = col; j < cols_; ++j) (*this)(rank, j) *= inv;
            for (std::size_t i = 0; i < rows_; ++i) {
                if (i == rank) continue;
                Rational f = (*this)(i, col);
                if (f == 0) continue;
                for (std::size_t j = col; j < cols_; ++j)
                    (*this)(i, j) -= f * (*this)(rank, j);
            }
            if (pivot_cols) pivot_cols->push_back(col);
            ++rank;
        }
        return rank;
    }

    std::size_t rank() const {
        RationalMatrix copy = *this;
        return copy.row_reduce();
    }

    /// Basis of the right nullspace, one vector (length cols) per entry.
    std::vector<std::vector<Rational>> nullspace() const {
        RationalMatrix rref = *this;
        std::vector<std::size_t> pivots;
        rref.row_reduce(&pivots);
        std::vector<long> pivot_of_col(cols_, -1);
        for (std::size_t r = 0; r < pivots.size(); ++r)
            pivot_of_col[pivots[r]] = static_cast<long>(r);
        std::vector<std::vector<Rational>> basis;
        for (std::size_t c = 0; c < cols_; ++c) {
            if (pivot_of_col[c] != -1) continue;
            std::vector<Rational> v(cols_);
            v[c] = 1;
            for (std::size_t cc = 0; cc < cols_; ++cc)
                if (pivot_of_col[cc] != -1)
                    v[cc] = -rref(static_cast<std::size_t>(pivot_of_col[cc]), c);
            basis.push_back(std::move(v));
        }
        return basis;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<Rational> data_;
};

}  // namespace gencov
