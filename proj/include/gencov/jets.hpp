#pragma once

#include <gencov/covariance.hpp>
#include <gencov/graded.hpp>
#include <gencov/rational.hpp>

#include <Eigen/Dense>

#include <bit>
#include <cstdint>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gencov {

/// Truncated power series in a formal small parameter whose coefficients are
/// linear operators. Multiplication is operator composition with the Cauchy
/// product rule, truncated at the smaller of the two orders.
template <class Op>
struct EpsilonJet {
    std::vector<Op> coeff;  // coeff[j] multiplies the j-th power

    int order() const { return static_cast<int>(coeff.size()); }

    EpsilonJet operator+(const EpsilonJet& o) const {
        std::size_t k = std::min(coeff.size(), o.coeff.size());
        EpsilonJet out;
        out.coeff.reserve(k);
        for (std::size_t j = 0; j < k; ++j) out.coeff.push_back(coeff[j] + o.coeff[j]);
        return out;
    }

    EpsilonJet operator*(const EpsilonJet& o) const {
        std::size_t k = std::min(coeff.size(), o.coeff.size());
        EpsilonJet out;
        for (std::size_t j = 0; j < k; ++j) {
            Op acc = coeff[0] * o.coeff[j];
            for (std::size_t a = 1; a <= j; ++a) acc = acc + coeff[a] * o.coeff[j - a];
            out.coeff.push_back(acc);
        }
        return out;
    }
};

using DenseOp = Eigen::MatrixXd;

namespace detail {
inline void require_square_pair(const DenseOp& L, const DenseOp& Q) {
    if (L.rows() != L.cols() || Q.rows() != Q.cols() || L.rows() != Q.rows())
        throw std::invalid_argument("operators must be square and of equal size");
}
}  // namespace detail

/// First-order perturbation operator: the commutator [L, Q].
inline DenseOp d1(const DenseOp& L, const DenseOp& Q) {
    detail::require_square_pair(L, Q);
    return L * Q - Q * L;
}

/// Second-order perturbation operator, (1/2)[L^2, Q] - [L, Q] L.
inline DenseOp d2(const DenseOp& L, const DenseOp& Q) {
    detail::require_square_pair(L, Q);
    DenseOp L2 = L * L;
    return 0.5 * (L2 * Q - Q * L2) - (L * Q - Q * L) * L;
}

/// Solve the per-order coefficient equations of the commuting square by
/// forward substitution: with D_0 = Q, order j demands
///   (1/j!) L^j Q = sum_{a+b=j} D_a (1/b!) L^b.
/// Returns D_0 .. D_{k_max-1}.
inline std::vector<DenseOp> solve_dk(const DenseOp& L, const DenseOp& Q, int k_max) {
    detail::require_square_pair(L, Q);
    if (k_max < 2) throw std::invalid_argument("need order at least 2");
    const auto n = L.rows();
    std::vector<DenseOp> D{Q};
    std::vector<DenseOp> Lpow{DenseOp::Identity(n, n)};
    double fact = 1.0;
    for (int j = 1; j < k_max; ++j) {
        Lpow.push_back(Lpow.back() * L);
        fact *= j;
        DenseOp rhs = (1.0 / fact) * (Lpow[j] * Q);
        double bfact = 1.0;
        for (int a = j - 1; a >= 0; --a) {
            // b = j - a runs 1..j; keep b! incrementally
            bfact *= (j - a);
            rhs -= (1.0 / bfact) * (D[a] * Lpow[j - a]);
        }
        D.push_back(rhs);
    }
    return D;
}

struct JetSquareCheck {
    std::vector<double> residuals;  // one per power of the parameter
    double max_relative = 0.0;
};

/// Residual of the commuting square at truncation order k: compose the
/// exponential-style isomorphism E = sum_{j<k} (1/j!) L^j eps^j with Q on one
/// side and with the solved jet Q + sum eps^j D_j on the other, and compare
/// coefficient by coefficient. The identity is algebraic, so every residual
/// should sit at roundoff regardless of the operators.
inline JetSquareCheck check_jet_square(const DenseOp& L, const DenseOp& Q, int k) {
    detail::require_square_pair(L, Q);
    if (k < 2) throw std::invalid_argument("need order at least 2");
    const auto n = L.rows();

    EpsilonJet<DenseOp> E;
    DenseOp pw = DenseOp::Identity(n, n);
    double fact = 1.0;
    for (int j = 0; j < k; ++j) {
        if (j > 0) {
            pw = pw * L;
            fact *= j;
        }
        E.coeff.push_back((1.0 / fact) * pw);
    }

    EpsilonJet<DenseOp> Qjet;
    Qjet.coeff.assign(static_cast<std::size_t>(k), DenseOp::Zero(n, n));
    Qjet.coeff[0] = Q;

    EpsilonJet<DenseOp> Djet;
    Djet.coeff = solve_dk(L, Q, k);

    EpsilonJet<DenseOp> lhs = E * Qjet;
    EpsilonJet<DenseOp> rhs = Djet * E;

    JetSquareCheck out;
    for (int j = 0; j < k; ++j) {
        double diff = (lhs.coeff[j] - rhs.coeff[j]).lpNorm<Eigen::Infinity>();
        double scale = lhs.coeff[j].lpNorm<Eigen::Infinity>() +
                       rhs.coeff[j].lpNorm<Eigen::Infinity>() + 1e-300;
        double rel = diff / scale;
        out.residuals.push_back(rel);
        out.max_relative = std::max(out.max_relative, rel);
    }
    return out;
}

inline void write_jet_binary(const EpsilonJet<DenseOp>& jet, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    os.write("GCFB", 4);
    std::uint32_t hdr[3] = {static_cast<std::uint32_t>(jet.order()),
                            static_cast<std::uint32_t>(jet.coeff.empty() ? 0 : jet.coeff[0].rows()),
                            static_cast<std::uint32_t>(jet.coeff.empty() ? 0 : jet.coeff[0].cols())};
    os.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
    for (const auto& m : jet.coeff)
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                double x = m(r, c);
                os.write(reinterpret_cast<const char*>(&x), sizeof x);
            }
}

inline EpsilonJet<DenseOp> read_jet_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::string(magic, 4) != "GCFB") throw std::runtime_error("bad magic in " + path);
    std::uint32_t hdr[3];
    is.read(reinterpret_cast<char*>(hdr), sizeof hdr);
    EpsilonJet<DenseOp> jet;
    for (std::uint32_t o = 0; o < hdr[0]; ++o) {
        DenseOp m(hdr[1], hdr[2]);
        for (std::uint32_t r = 0; r < hdr[1]; ++r)
            for (std::uint32_t c = 0; c < hdr[2]; ++c) {
                double x;
                is.read(reinterpret_cast<char*>(&x), sizeof x);
                m(r, c) = x;
            }
        jet.coeff.push_back(std::move(m));
    }
    if (!is) throw std::runtime_error("truncated file " + path);
    return jet;
}

/// Mesh-operator backend for the same jet arithmetic: a scalar-field
/// endomorphism with composition as product and pointwise sum.
struct MeshOp {
    std::function<ScalarField(const ScalarField&)> fn;

    ScalarField operator()(const ScalarField& x) const { return fn(x); }

    MeshOp operator*(const MeshOp& o) const {
        return {[a = fn, b = o.fn](const ScalarField& x) { return a(b(x)); }};
    }
    MeshOp operator+(const MeshOp& o) const {
        return {[a = fn, b = o.fn](const ScalarField& x) {
            ScalarField u = a(x), v = b(x);
            for (std::size_t i = 0; i < u.v.size(); ++i) u.v[i] += v.v[i];
            return u;
        }};
    }
};

inline MeshOp lie_op(const MeshVectorField& V) {
    return {[V](const ScalarField& phi) { return lie_derivative_scalar(V, phi); }};
}

inline MeshOp laplace_op(const MetricField& g) {
    return {[g](const ScalarField& phi) { return laplace_beltrami(g, phi); }};
}

/// The metric deformation formula along a flow direction against the discrete
/// operator commutator: the derivative of the Laplacian in the flow parameter
/// should be [L_V, Delta_g], so the two discretizations agree up to stencil
/// error, decaying at second order under refinement while each side stays
/// O(1).
inline CheckReport geometric_consistency(const AnalyticMetric& gg, const AnalyticVector& vg,
                                         const AnalyticScalar& pg, const std::vector<int>& grids) {
    CheckReport rep;
    rep.name = "jet_geometric_consistency";
    rep.anchor = "equivariantfunctional";
    rep.grids = grids;
    for (int N : grids) {
        TorusMesh mesh(gg.dim, N);
        auto g = sample_metric(mesh, gg);
        auto V = sample_vector(mesh, vg);
        auto phi = sample_scalar(mesh, pg);
        auto lhs = laplacian_deformation(g, lie_derivative_metric(V, g), phi);
        auto a = lie_derivative_scalar(V, laplace_beltrami(g, phi));
        auto b = laplace_beltrami(g, lie_derivative_scalar(V, phi));
        double res = 0, mag = 0;
        for (std::size_t i = 0; i < lhs.v.size(); ++i) {
            double rhs = a.v[i] - b.v[i];
            res = std::max(res, std::abs(lhs.v[i] - rhs));
            mag = std::max(mag, std::abs(rhs));
        }
        rep.residuals.push_back(res);
        rep.scale = std::max(rep.scale, mag);
    }
    rep.order = fit_order(rep.grids, rep.residuals);
    // the commutator itself does not refine away, only the disagreement does,
    // so the verdict is about the decay rate rather than an absolute floor
    rep.passed = rep.order >= TolerancePolicy{}.min_order &&
                 rep.residuals.back() < 0.1 * std::max(rep.scale, 1e-300);
    rep.details["commutator_sup"] = rep.scale;
    return rep;
}

// ---------------------------------------------------------------------------
// Induced map on the truncated symmetric algebra of a finite complex.

using ElemJet = std::vector<TruncatedGradedElement>;
using GenMapJet = std::vector<RationalMatrix>;  // column j holds the image of generator j

/// A finite two-term complex presented by generators: ids [0, n_even) are the
/// degree-0 generators, ids [n_even, n_even + n_odd) the degree-1 ones. The
/// symmetric algebra is truncated by total word length in the generators.
struct SymComplex {
    int n_even = 0;
    int n_odd = 0;
    int sym_degree = 0;

    int n() const { return n_even + n_odd; }

    TruncatedGradedElement zero() const {
        return TruncatedGradedElement::zero(n_odd, n_even, sym_degree);
    }
    TruncatedGradedElement gen(int i) const {
        if (i < n_even)
            return TruncatedGradedElement::even_gen(i, n_odd, n_even, sym_degree);
        return TruncatedGradedElement::odd_gen(i - n_even, n_odd, n_even, sym_degree);
    }

    std::vector<Monomial> basis() const {
        std::vector<Monomial> out;
        std::vector<std::uint16_t> exp(static_cast<std::size_t>(n_even), 0);
        for (std::uint32_t mask = 0; mask < (1u << n_odd); ++mask) {
            int room = sym_degree - std::popcount(mask);
            if (room < 0) continue;
            std::function<void(int, int)> rec = [&](int pos, int left) {
                if (pos == n_even) {
                    out.push_back(Monomial{mask, exp});
                    return;
                }
                for (int e = 0; e <= left; ++e) {
                    exp[pos] = static_cast<std::uint16_t>(e);
                    rec(pos + 1, left - e);
                }
                exp[pos] = 0;
            };
            rec(0, room);
        }
        return out;
    }
};

namespace detail {

inline TruncatedGradedElement project_word_length(const TruncatedGradedElement& e, int d) {
    TruncatedGradedElement out(e.num_odd(), e.num_even(), e.truncation());
    for (const auto& [m, c] : e.terms())
        if (m.even_degree() + m.odd_degree() <= d) out.add_term(m, c);
    return out;
}

inline TruncatedGradedElement monomial_elem(const SymComplex& sc, const Monomial& m) {
    auto e = sc.zero();
    e.add_term(m, Rational(1));
    return e;
}

inline std::vector<TruncatedGradedElement> column_images(const SymComplex& sc,
                                                         const RationalMatrix& M) {
    if (M.rows() != static_cast<std::size_t>(sc.n()) || M.cols() != M.rows())
        throw std::invalid_argument("generator map must be square of the generator count");
    std::vector<TruncatedGradedElement> img;
    for (int j = 0; j < sc.n(); ++j) {
        auto e = sc.zero();
        for (int i = 0; i < sc.n(); ++i)
            if (M(i, j) != 0) e = e + sc.gen(i) * M(i, j);
        img.push_back(std::move(e));
    }
    return img;
}

/// Graded Leibniz expansion of a generator map across one monomial. Images may
/// mix parities; the sign bookkeeping reduces to a parity flip per odd
/// generator skipped, with the rest absorbed by the graded product.
inline TruncatedGradedElement leibniz_monomial(const SymComplex& sc,
                                               const std::vector<TruncatedGradedElement>& images,
                                               const Monomial& m) {
    auto out = sc.zero();
    for (int l = 0; l < sc.n_even; ++l) {
        if (m.even_exp[l] == 0) continue;
        Monomial r = m;
        r.even_exp[l]--;
        out = out + project_word_length(images[l] * monomial_elem(sc, r), sc.sym_degree) *
                        Rational(m.even_exp[l]);
    }
    for (int o = 0; o < sc.n_odd; ++o) {
        if (!(m.odd_mask & (1u << o))) continue;
        int skipped = std::popcount(m.odd_mask & ((1u << o) - 1));
        Monomial r = m;
        r.odd_mask &= ~(1u << o);
        auto term = project_word_length(images[sc.n_even + o] * monomial_elem(sc, r), sc.sym_degree);
        out = (skipped % 2 == 0) ? out + term : out - term;
    }
    return out;
}

inline TruncatedGradedElement leibniz_elem(const SymComplex& sc,
                                           const std::vector<TruncatedGradedElement>& images,
                                           const TruncatedGradedElement& x) {
    auto out = sc.zero();
    for (const auto& [m, c] : x.terms()) out = out + leibniz_monomial(sc, images, m) * c;
    return out;
}

}  // namespace detail

/// Invert a jet of generator maps whose leading coefficient is the identity.
inline GenMapJet gen_map_inverse(const GenMapJet& a) {
    if (a.empty()) throw std::invalid_argument("empty jet");
    const std::size_t n = a[0].rows();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (a[0](i, j) != (i == j ? Rational(1) : Rational(0)))
                throw std::invalid_argument("leading coefficient must be the identity");
    GenMapJet b;
    RationalMatrix id(n, n);
    for (std::size_t i = 0; i < n; ++i) id(i, i) = 1;
    b.push_back(id);
    for (std::size_t j = 1; j < a.size(); ++j) {
        RationalMatrix acc(n, n);
        for (std::size_t k = 1; k <= j; ++k) {
            RationalMatrix p = a[k] * b[j - k];
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t c = 0; c < n; ++c) acc(i, c) -= p(i, c);
        }
        b.push_back(std::move(acc));
    }
    return b;
}

/// Multiplicative extension of a jet of generator maps to one monomial: the
/// product of the generator images in the monomial's canonical order,
/// truncated by word length.
inline ElemJet sym_map_monomial(const SymComplex& sc, const GenMapJet& a, const Monomial& m) {
    const std::size_t k = a.size();
    std::vector<std::vector<TruncatedGradedElement>> img(k);
    for (std::size_t o = 0; o < k; ++o) img[o] = detail::column_images(sc, a[o]);

    ElemJet acc(k, sc.zero());
    acc[0] = TruncatedGradedElement::one(sc.n_odd, sc.n_even, sc.sym_degree);
    auto mul_in = [&](int gen_id) {
        ElemJet next(k, sc.zero());
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; i + j < k; ++j)
                next[i + j] = next[i + j] +
                              detail::project_word_length(acc[i] * img[j][gen_id], sc.sym_degree);
        acc = std::move(next);
    };
    for (int l = 0; l < sc.n_even; ++l)
        for (int e = 0; e < m.even_exp[l]; ++e) mul_in(l);
    for (int o = 0; o < sc.n_odd; ++o)
        if (m.odd_mask & (1u << o)) mul_in(sc.n_even + o);
    return acc;
}

inline ElemJet sym_map_elem(const SymComplex& sc, const GenMapJet& a,
                            const TruncatedGradedElement& x) {
    ElemJet out(a.size(), sc.zero());
    for (const auto& [m, c] : x.terms()) {
        ElemJet t = sym_map_monomial(sc, a, m);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = out[j] + t[j] * c;
    }
    return out;
}

struct SymIsomorphism {
    std::vector<RationalMatrix> matrix;  // per jet order, acting on the word basis
    std::vector<Monomial> basis;
    bool intertwines = false;  // exact identity against the conjugated differential
};

/// Extend an invertible jet of generator maps to the truncated symmetric
/// algebra and verify, exactly in rational arithmetic, that the extension
/// intertwines the derivation extension of the source differential with that
/// of its conjugate by the jet.
inline SymIsomorphism induced_sym_isomorphism(const SymComplex& sc, const GenMapJet& alpha,
                                              const RationalMatrix& q) {
    const std::size_t k = alpha.size();
    GenMapJet alpha_inv = gen_map_inverse(alpha);

    // conjugated differential per jet order
    GenMapJet qprime;
    for (std::size_t j = 0; j < k; ++j) {
        RationalMatrix acc(static_cast<std::size_t>(sc.n()), static_cast<std::size_t>(sc.n()));
        for (std::size_t a = 0; a <= j; ++a) {
            RationalMatrix p = alpha[a] * q * alpha_inv[j - a];
            for (std::size_t r = 0; r < acc.rows(); ++r)
                for (std::size_t c = 0; c < acc.cols(); ++c) acc(r, c) += p(r, c);
        }
        qprime.push_back(std::move(acc));
    }
    auto q_img = detail::column_images(sc, q);
    std::vector<std::vector<TruncatedGradedElement>> qp_img;
    for (const auto& mm : qprime) qp_img.push_back(detail::column_images(sc, mm));

    SymIsomorphism out;
    out.basis = sc.basis();
    std::map<Monomial, std::size_t> index;
    for (std::size_t i = 0; i < out.basis.size(); ++i) index[out.basis[i]] = i;
    out.matrix.assign(k, RationalMatrix(out.basis.size(), out.basis.size()));

    bool ok = true;
    for (std::size_t col = 0; col < out.basis.size(); ++col) {
        const Monomial& m = out.basis[col];
        ElemJet am = sym_map_monomial(sc, alpha, m);
        for (std::size_t j = 0; j < k; ++j)
            for (const auto& [mono, c] : am[j].terms()) out.matrix[j](index.at(mono), col) = c;

        ElemJet lhs = sym_map_elem(sc, alpha, detail::leibniz_monomial(sc, q_img, m));
        for (std::size_t j = 0; j < k; ++j) {
            auto rhs = sc.zero();
            for (std::size_t a = 0; a <= j; ++a)
                rhs = rhs + detail::leibniz_elem(sc, qp_img[a], am[j - a]);
            if (!(lhs[j] - rhs).is_zero()) ok = false;
        }
    }
    out.intertwines = ok;
    return out;
}

}  // namespace gencov
