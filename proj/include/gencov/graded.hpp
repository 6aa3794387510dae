#pragma once

#include <gencov/rational.hpp>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gencov {

/// Monomial key: a set of odd (degree-1) generators as a bitmask, stored with
/// strictly increasing indices, plus an exponent vector for the even
/// (degree-0) generators.
struct Monomial {
    std::uint32_t odd_mask = 0;
    std::vector<std::uint16_t> even_exp;

    int odd_degree() const { return std::popcount(odd_mask); }
    int even_degree() const {
        return std::accumulate(even_exp.begin(), even_exp.end(), 0);
    }
    auto operator<=>(const Monomial&) const = default;
};

/// Koszul sign for merging two increasing odd index sets: (-1)^inversions.
inline int merge_sign(std::uint32_t a, std::uint32_t b) {
    int inv = 0;
    for (std::uint32_t bb = b; bb; bb &= bb - 1) {
        int j = std::countr_zero(bb);
        // generators of a strictly above position j must hop over b's j
        inv += std::popcount(a >> (j + 1));
    }
    return (inv % 2 == 0) ? 1 : -1;
}

/// Element of the graded-commutative polynomial algebra with `num_odd` odd
/// generators a1..am (degree 1, a*a = 0) and `num_even` even generators
/// x1..xn (degree 0), truncated by total even degree. Coefficients are exact
/// rationals; values are immutable in spirit (all operations return copies).
class TruncatedGradedElement {
public:
    TruncatedGradedElement() = default;
    TruncatedGradedElement(int num_odd, int num_even, int even_truncation)
        : num_odd_(num_odd), num_even_(num_even), trunc_(even_truncation) {
        if (num_odd < 0 || num_odd > 32) throw std::invalid_argument("odd generator count out of range");
        if (num_even < 0) throw std::invalid_argument("negative even generator count");
        if (even_truncation < 0) throw std::invalid_argument("negative truncation degree");
    }

    int num_odd() const { return num_odd_; }
    int num_even() const { return num_even_; }
    int truncation() const { return trunc_; }
    const std::map<Monomial, Rational>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    static TruncatedGradedElement zero(int m, int n, int trunc) {
        return TruncatedGradedElement(m, n, trunc);
    }
    static TruncatedGradedElement one(int m, int n, int trunc) {
        TruncatedGradedElement e(m, n, trunc);
        e.add_term(Monomial{0, std::vector<std::uint16_t>(n, 0)}, 1);
        return e;
    }
    static TruncatedGradedElement odd_gen(int i, int m, int n, int trunc) {
        TruncatedGradedElement e(m, n, trunc);
        e.add_term(Monomial{std::uint32_t{1} << i, std::vector<std::uint16_t>(n, 0)}, 1);
        return e;
    }
    static TruncatedGradedElement even_gen(int l, int m, int n, int trunc) {
        TruncatedGradedElement e(m, n, trunc);
        Monomial mo{0, std::vector<std::uint16_t>(n, 0)};
        if (trunc < 1) return e;  // x_l is already dead in this quotient
        mo.even_exp[l] = 1;
        e.add_term(mo, 1);
        return e;
    }
    static TruncatedGradedElement constant(const Rational& c, int m, int n, int trunc) {
        TruncatedGradedElement e(m, n, trunc);
        e.add_term(Monomial{0, std::vector<std::uint16_t>(n, 0)}, c);
        return e;
    }

    /// Add one term, normalizing: drops zero coefficients and over-truncation
    /// monomials. `odd_mask` is assumed canonical (a bitmask has no order).
    void add_term(const Monomial& mono, const Rational& coeff) {
        if (coeff == 0) return;
        if (static_cast<int>(mono.even_exp.size()) != num_even_)
            throw std::invalid_argument("exponent vector length mismatch");
        if (mono.even_degree() > trunc_) return;
        if (mono.odd_mask >> num_odd_) throw std::invalid_argument("odd index out of range");
        auto [it, inserted] = terms_.emplace(mono, coeff);
        if (!inserted) {
            it->second += coeff;
            if (it->second == 0) terms_.erase(it);
        }
    }

    /// Build a term from an explicit (possibly unordered) odd index list;
    /// the Koszul sign of sorting is applied, repeated odd indices give 0.
    void add_term_signed(const std::vector<int>& odd_indices,
                         const std::vector<std::uint16_t>& even_exp,
                         const Rational& coeff) {
        std::uint32_t mask = 0;
        int inv = 0;
        for (std::size_t t = 0; t < odd_indices.size(); ++t) {
            int i = odd_indices[t];
            if (i < 0 || i >= num_odd_) throw std::invalid_argument("odd index out of range");
            for (std::size_t s = t + 1; s < odd_indices.size(); ++s)
                if (odd_indices[s] < i) ++inv;
            std::uint32_t bit = std::uint32_t{1} << i;
            if (mask & bit) return;  // a ∧ a = 0
            mask |= bit;
        }
        add_term(Monomial{mask, even_exp}, (inv % 2 == 0) ? coeff : -coeff);
    }

    TruncatedGradedElement operator+(const TruncatedGradedElement& o) const {
        require_compatible(o);
        TruncatedGradedElement out = *this;
        for (const auto& [mono, c] : o.terms_) out.add_term(mono, c);
        return out;
    }
    TruncatedGradedElement operator-(const TruncatedGradedElement& o) const {
        require_compatible(o);
        TruncatedGradedElement out = *this;
        for (const auto& [mono, c] : o.terms_) out.add_term(mono, -c);
        return out;
    }
    TruncatedGradedElement operator*(const Rational& s) const {
        TruncatedGradedElement out(num_odd_, num_even_, trunc_);
        if (s == 0) return out;
        for (const auto& [mono, c] : terms_) out.terms_.emplace(mono, c * s);
        return out;
    }
    TruncatedGradedElement operator-() const { return *this * Rational(-1); }

    bool operator==(const TruncatedGradedElement& o) const {
        return num_odd_ == o.num_odd_ && num_even_ == o.num_even_ &&
               trunc_ == o.trunc_ && terms_ == o.terms_;
    }

    /// Graded-commutative product; even degree above the truncation is
    /// dropped, odd repetitions annihilate, Koszul signs applied.
    TruncatedGradedElement operator*(const TruncatedGradedElement& o) const {
        require_compatible(o);
        TruncatedGradedElement out(num_odd_, num_even_, trunc_);
        for (const auto& [ma, ca] : terms_) {
            for (const auto& [mb, cb] : o.terms_) {
                if (ma.odd_mask & mb.odd_mask) continue;
                if (ma.even_degree() + mb.even_degree() > trunc_) continue;
                Monomial m{ma.odd_mask | mb.odd_mask, ma.even_exp};
                for (int l = 0; l < num_even_; ++l) m.even_exp[l] += mb.even_exp[l];
                int sign = merge_sign(ma.odd_mask, mb.odd_mask);
                Rational prod = ca * cb;
                out.add_term(m, sign > 0 ? prod : Rational(-prod));
            }
        }
        return out;
    }

    /// Same element viewed in the quotient by a different even truncation
    /// degree (terms above the new bound are dropped).
    TruncatedGradedElement with_truncation(int new_trunc) const {
        TruncatedGradedElement out(num_odd_, num_even_, new_trunc);
        for (const auto& [mono, c] : terms_)
            if (mono.even_degree() <= new_trunc) out.terms_.emplace(mono, c);
        return out;
    }

    /// Partial derivative with respect to even generator x_l.
    TruncatedGradedElement d_even(int l) const {
        TruncatedGradedElement out(num_odd_, num_even_, trunc_);
        for (const auto& [mono, c] : terms_) {
            if (mono.even_exp[l] == 0) continue;
            Monomial m = mono;
            int e = m.even_exp[l]--;
            out.add_term(m, c * e);
        }
        return out;
    }

    /// Substitute each even generator x_l by the (even-only) element
    /// `images[l]`. Odd generators are left alone.
    TruncatedGradedElement substitute_even(const std::vector<TruncatedGradedElement>& images) const {
        if (static_cast<int>(images.size()) != num_even_)
            throw std::invalid_argument("need one image per even generator");
        TruncatedGradedElement out(num_odd_, num_even_, trunc_);
        for (const auto& [mono, c] : terms_) {
            TruncatedGradedElement term(num_odd_, num_even_, trunc_);
            term.add_term(Monomial{mono.odd_mask, std::vector<std::uint16_t>(num_even_, 0)}, c);
            for (int l = 0; l < num_even_ && !term.is_zero(); ++l)
                for (int k = 0; k < mono.even_exp[l]; ++k) term = term * images[l];
            out = out + term;
        }
        return out;
    }

    /// Evaluate at a rational point (only valid for purely even elements).
    Rational evaluate(const std::vector<Rational>& point) const {
        if (static_cast<int>(point.size()) != num_even_)
            throw std::invalid_argument("point dimension mismatch");
        Rational total = 0;
        for (const auto& [mono, c] : terms_) {
            if (mono.odd_mask != 0) throw std::invalid_argument("cannot evaluate odd part");
            Rational v = c;
            for (int l = 0; l < num_even_; ++l)
                for (int k = 0; k < mono.even_exp[l]; ++k) v *= point[l];
            total += v;
        }
        return total;
    }

    /// One monomial per line, `coeff * a{i}... x{l}^{e}...`, sorted keys.
    std::string to_string() const {
        if (terms_.empty()) return "0\n";
        std::ostringstream os;
        for (const auto& [mono, c] : terms_) {
            os << c << " *";
            bool any = false;
            for (int i = 0; i < num_odd_; ++i)
                if (mono.odd_mask & (std::uint32_t{1} << i)) { os << " a" << (i + 1); any = true; }
            for (int l = 0; l < num_even_; ++l) {
                if (mono.even_exp[l] == 0) continue;
                os << " x" << (l + 1);
                if (mono.even_exp[l] > 1) os << "^" << mono.even_exp[l];
                any = true;
            }
            if (!any) os << " 1";
            os << "\n";
        }
        return os.str();
    }

private:
    void require_compatible(const TruncatedGradedElement& o) const {
        if (num_odd_ != o.num_odd_ || num_even_ != o.num_even_)
            throw std::invalid_argument("generator count mismatch");
        if (trunc_ != o.trunc_)
            throw std::invalid_argument("truncation degree mismatch");
    }

    int num_odd_ = 0, num_even_ = 0, trunc_ = 0;
    std::map<Monomial, Rational> terms_;
};

/// A graded derivation, given by its degree and one image per generator,
/// extended to the whole algebra by the graded Leibniz rule.
struct Derivation {
    int degree = 1;
    std::vector<TruncatedGradedElement> odd_images;   // one per odd generator
    std::vector<TruncatedGradedElement> even_images;  // one per even generator

    TruncatedGradedElement apply(const TruncatedGradedElement& a) const {
        const int m = a.num_odd(), n = a.num_even(), tr = a.truncation();
        if (static_cast<int>(odd_images.size()) != m || static_cast<int>(even_images.size()) != n)
            throw std::invalid_argument("derivation needs one image per generator");
        for (const auto& img : odd_images) check_image_degree(img, 1);
        for (const auto& img : even_images) check_image_degree(img, 0);
        TruncatedGradedElement out(m, n, tr);
        for (const auto& [mono, c] : a.terms()) {
            std::vector<int> odd;
            for (int i = 0; i < m; ++i)
                if (mono.odd_mask & (std::uint32_t{1} << i)) odd.push_back(i);
            const int q = static_cast<int>(odd.size());
            // d(w1...wq x^E) = sum_t ±w1..d(wt)..wq x^E  +  ±w1..wq d(x^E)
            for (int t = 0; t < q; ++t) {
                std::uint32_t prefix = 0, suffix = 0;
                for (int s = 0; s < t; ++s) prefix |= std::uint32_t{1} << odd[s];
                for (int s = t + 1; s < q; ++s) suffix |= std::uint32_t{1} << odd[s];
                TruncatedGradedElement left(m, n, tr);
                left.add_term(Monomial{prefix, std::vector<std::uint16_t>(n, 0)},
                              (degree * t) % 2 == 0 ? c : -c);
                TruncatedGradedElement rest(m, n, tr);
                rest.add_term(Monomial{suffix, mono.even_exp}, 1);
                out = out + left * odd_images[odd[t]].with_truncation(tr) * rest;
            }
            for (int l = 0; l < n; ++l) {
                if (mono.even_exp[l] == 0) continue;
                Monomial rest = mono;
                int e = rest.even_exp[l]--;
                TruncatedGradedElement head(m, n, tr);
                Rational ce = c * e;
                head.add_term(rest, (degree * q) % 2 == 0 ? ce : Rational(-ce));
                out = out + head * even_images[l].with_truncation(tr);
            }
        }
        return out;
    }

private:
    void check_image_degree(const TruncatedGradedElement& img, int gen_degree) const {
        for (const auto& [mono, c] : img.terms()) {
            (void)c;
            if (mono.odd_degree() != gen_degree + degree)
                throw std::invalid_argument("derivation image has inconsistent degree");
        }
    }
};

}  // namespace gencov
