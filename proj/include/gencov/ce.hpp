#pragma once

#include <gencov/graded.hpp>
#include <gencov/rational.hpp>

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace gencov {

/// A finite-dimensional Lie algebra with structure constants c[i][j][k]
/// ([a_i, a_j] = sum_k c[i][j][k] a_k) acting on coordinate space R^n by
/// polynomial vector fields: vector_fields[i][l] is the (even-only)
/// polynomial image of x_l under the derivation rho(a_i).
struct ActionLieData {
    int dim_g = 0;  // m
    int dim_base = 0;  // n
    std::vector<std::vector<std::vector<Rational>>> structure_constants;
    std::vector<std::vector<TruncatedGradedElement>> vector_fields;

    const Rational& c(int i, int j, int k) const { return structure_constants[i][j][k]; }
};

struct TangentComplex {
    std::vector<Rational> base_point;                // p in R^n
    std::vector<std::vector<Rational>> anchor;       // n x m, column j = rho(a_j)(p)
};

struct CEComplexLevel {
    int degree = 0;
    std::vector<Monomial> basis;      // odd part has size == degree
    RationalMatrix differential;      // to the next level: rows = next basis
};

namespace detail {

inline void enumerate_exponents(int n, int max_total, std::vector<std::uint16_t>& cur,
                                int pos, int used, std::vector<std::vector<std::uint16_t>>& out) {
    if (pos == n) { out.push_back(cur); return; }
    for (int e = 0; e + used <= max_total; ++e) {
        cur[pos] = static_cast<std::uint16_t>(e);
        enumerate_exponents(n, max_total, cur, pos + 1, used + e, out);
    }
    cur[pos] = 0;
}

inline std::vector<std::vector<std::uint16_t>> all_exponents(int n, int max_total) {
    std::vector<std::vector<std::uint16_t>> out;
    std::vector<std::uint16_t> cur(n, 0);
    enumerate_exponents(n, max_total, cur, 0, 0, out);
    return out;
}

}  // namespace detail

/// Eager structural validation: antisymmetry, the Jacobi identity, and the
/// Lie-map property of the action, all in exact arithmetic.
inline void validate_action(const ActionLieData& action) {
    const int m = action.dim_g, n = action.dim_base;
    if (static_cast<int>(action.structure_constants.size()) != m)
        throw std::invalid_argument("structure constant tensor has wrong size");
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k)
                if (action.c(i, j, k) != -action.c(j, i, k))
                    throw std::invalid_argument("structure constants not antisymmetric");
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k)
                for (int mm = 0; mm < m; ++mm) {
                    Rational s = 0;
                    for (int l = 0; l < m; ++l)
                        s += action.c(i, j, l) * action.c(l, k, mm)
                           + action.c(j, k, l) * action.c(l, i, mm)
                           + action.c(k, i, l) * action.c(l, j, mm);
                    if (s != 0) throw std::invalid_argument("Jacobi identity fails");
                }

    if (static_cast<int>(action.vector_fields.size()) != m)
        throw std::invalid_argument("need one vector field per Lie algebra basis element");
    int maxdeg = 1;
    for (const auto& vf : action.vector_fields) {
        if (static_cast<int>(vf.size()) != n)
            throw std::invalid_argument("vector field needs one component per coordinate");
        for (const auto& comp : vf)
            for (const auto& [mono, c] : comp.terms()) {
                (void)c;
                if (mono.odd_mask) throw std::invalid_argument("vector field component has odd part");
                maxdeg = std::max(maxdeg, mono.even_degree());
            }
    }

    // [rho_i, rho_j] = sum_k c_ij^k rho_k, checked on each coordinate at a
    // working degree large enough that no truncation can hide a mismatch.
    const int work = 2 * maxdeg + 1;
    auto vf_at = [&](int i, int l) { return action.vector_fields[i][l].with_truncation(work); };
    auto apply_vf = [&](int i, const TruncatedGradedElement& p) {
        TruncatedGradedElement out(p.num_odd(), p.num_even(), p.truncation());
        for (int l = 0; l < n; ++l) out = out + vf_at(i, l) * p.d_even(l);
        return out;
    };
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            for (int l = 0; l < n; ++l) {
                TruncatedGradedElement lhs =
                    apply_vf(i, vf_at(j, l)) - apply_vf(j, vf_at(i, l));
                TruncatedGradedElement rhs(lhs.num_odd(), lhs.num_even(), lhs.truncation());
                for (int k = 0; k < m; ++k) rhs = rhs + vf_at(k, l) * action.c(i, j, k);
                if (!(lhs == rhs)) throw std::invalid_argument("action is not a Lie algebra map");
            }
}

inline TangentComplex build_tangent_complex(const ActionLieData& action,
                                            const std::vector<Rational>& p) {
    validate_action(action);
    if (static_cast<int>(p.size()) != action.dim_base)
        throw std::invalid_argument("base point dimension mismatch");
    TangentComplex tc;
    tc.base_point = p;
    tc.anchor.assign(action.dim_base, std::vector<Rational>(action.dim_g));
    for (int j = 0; j < action.dim_g; ++j)
        for (int l = 0; l < action.dim_base; ++l)
            tc.anchor[l][j] = action.vector_fields[j][l].evaluate(p);
    return tc;
}

/// (dim H^{-1}, dim H^0) of the two-term complex g -> T_pM.
inline std::pair<int, int> cohomology_of_tangent_complex(const TangentComplex& tc) {
    const int n = static_cast<int>(tc.anchor.size());
    const int m = n ? static_cast<int>(tc.anchor[0].size()) : 0;
    RationalMatrix a(n, m);
    for (int l = 0; l < n; ++l)
        for (int j = 0; j < m; ++j) a(l, j) = tc.anchor[l][j];
    int r = static_cast<int>(a.rank());
    return {m - r, n - r};
}

/// The cochain differential: d(a^k) = -1/2 sum_ij c_ij^k a^i a^j,
/// d(x_l) = sum_i a^i * rho_i(x_l), extended by the graded Leibniz rule.
/// `extra_even_images` appends generators beyond the base coordinates
/// (coordinates on a module V^dual) together with their images.
inline Derivation ce_derivation(const ActionLieData& action, int truncation,
                                const std::vector<TruncatedGradedElement>& extra_even_images = {}) {
    const int m = action.dim_g;
    const int n = action.dim_base + static_cast<int>(extra_even_images.size());
    Derivation d;
    d.degree = 1;
    for (int k = 0; k < m; ++k) {
        TruncatedGradedElement img(m, n, truncation);
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j)
                // -1/2 c_ij^k a^i a^j over all i,j collapses to -c_ij^k for i<j
                img = img + TruncatedGradedElement::odd_gen(i, m, n, truncation) *
                              TruncatedGradedElement::odd_gen(j, m, n, truncation) *
                              (-action.c(i, j, k));
        d.odd_images.push_back(img);
    }
    for (int l = 0; l < action.dim_base; ++l) {
        TruncatedGradedElement img(m, n, truncation);
        for (int i = 0; i < m; ++i) {
            // vector field components live on dim_base generators; widen them
            TruncatedGradedElement comp(m, n, truncation);
            for (const auto& [mono, c] : action.vector_fields[i][l].terms()) {
                if (mono.even_degree() > truncation) continue;
                Monomial wide{0, std::vector<std::uint16_t>(n, 0)};
                for (int t = 0; t < action.dim_base; ++t) wide.even_exp[t] = mono.even_exp[t];
                comp.add_term(wide, c);
            }
            img = img + TruncatedGradedElement::odd_gen(i, m, n, truncation) * comp;
        }
        d.even_images.push_back(img);
    }
    for (const auto& img : extra_even_images) d.even_images.push_back(img);
    return d;
}

/// CE cochain levels 0..max_ce_degree of Lambda g^dual tensor truncated
/// polynomials, with the differential matrices between consecutive levels.
/// `num_even` defaults to the base dimension; pass a larger value together
/// with a matching derivation through build_ce_complex_with_module.
inline std::vector<CEComplexLevel> build_ce_levels(const Derivation& d, int m, int n,
                                                   int truncation, int max_ce_degree,
                                                   std::size_t basis_cap = 20000) {
    auto exps = detail::all_exponents(n, truncation);
    std::vector<std::vector<std::uint32_t>> masks_by_degree(m + 2);
    for (std::uint32_t mask = 0; mask < (std::uint32_t{1} << m); ++mask)
        masks_by_degree[std::popcount(mask)].push_back(mask);

    std::vector<CEComplexLevel> levels;
    for (int p = 0; p <= max_ce_degree && p <= m; ++p) {
        CEComplexLevel lvl;
        lvl.degree = p;
        for (auto mask : masks_by_degree[p])
            for (const auto& e : exps) lvl.basis.push_back(Monomial{mask, e});
        std::sort(lvl.basis.begin(), lvl.basis.end());
        if (lvl.basis.size() > basis_cap)
            throw std::length_error("CE basis size exceeds the configured cap");
        levels.push_back(std::move(lvl));
    }
    for (std::size_t p = 0; p + 1 < levels.size(); ++p) {
        std::map<Monomial, std::size_t> index;
        for (std::size_t r = 0; r < levels[p + 1].basis.size(); ++r)
            index[levels[p + 1].basis[r]] = r;
        RationalMatrix mat(levels[p + 1].basis.size(), levels[p].basis.size());
        for (std::size_t c = 0; c < levels[p].basis.size(); ++c) {
            TruncatedGradedElement e(m, n, truncation);
            e.add_term(levels[p].basis[c], 1);
            TruncatedGradedElement de = d.apply(e);
            for (const auto& [mono, coeff] : de.terms()) {
                auto it = index.find(mono);
                if (it == index.end()) throw std::logic_error("differential left the basis");
                mat(it->second, c) = coeff;
            }
        }
        levels[p].differential = std::move(mat);
    }
    if (!levels.empty())
        levels.back().differential = RationalMatrix(0, levels.back().basis.size());
    return levels;
}

inline std::vector<CEComplexLevel> build_ce_complex(const ActionLieData& action, int truncation,
                                                    int max_ce_degree,
                                                    std::size_t basis_cap = 20000) {
    validate_action(action);
    if (truncation < 1) throw std::invalid_argument("truncation degree must be >= 1");
    Derivation d = ce_derivation(action, truncation);
    return build_ce_levels(d, action.dim_g, action.dim_base, truncation, max_ce_degree, basis_cap);
}

/// Exact kernel basis of the degree-0 -> degree-1 differential, i.e. the
/// invariant truncated polynomials.
inline std::vector<TruncatedGradedElement> invariants_h0(const ActionLieData& action,
                                                         int truncation) {
    auto levels = build_ce_complex(action, truncation, 1);
    auto null = levels[0].differential.nullspace();
    std::vector<TruncatedGradedElement> basis;
    for (const auto& v : null) {
        TruncatedGradedElement e(action.dim_g, action.dim_base, truncation);
        for (std::size_t c = 0; c < v.size(); ++c)
            if (v[c] != 0) e.add_term(levels[0].basis[c], v[c]);
        basis.push_back(std::move(e));
    }
    return basis;
}

/// CE complex with coefficients in (truncated polynomials on the base)
/// tensor Sym(V^dual): module coordinates become extra even generators. The
/// matrices `module_action[i]` (dim_v x dim_v, rho on V) must satisfy
/// [M_i, M_j] = sum_k c_ij^k M_k; the induced derivation on coordinates is
/// -M^T, which matches the sign of the base action's Lie-map convention.
inline std::vector<CEComplexLevel> equivariant_observables_toy(
    const ActionLieData& action, const std::vector<std::vector<std::vector<Rational>>>& module_action,
    int truncation, int max_ce_degree, std::size_t basis_cap = 20000) {
    validate_action(action);
    const int m = action.dim_g;
    if (static_cast<int>(module_action.size()) != m)
        throw std::invalid_argument("need one module matrix per Lie algebra generator");
    const int v = m ? static_cast<int>(module_action[0].size()) : 0;
    auto entry = [&](int i, int r, int c) -> const Rational& { return module_action[i][r][c]; };
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int r = 0; r < v; ++r)
                for (int c2 = 0; c2 < v; ++c2) {
                    Rational comm = 0;
                    for (int s = 0; s < v; ++s)
                        comm += entry(i, r, s) * entry(j, s, c2) - entry(j, r, s) * entry(i, s, c2);
                    Rational rhs = 0;
                    for (int k = 0; k < m; ++k) rhs += action.c(i, j, k) * entry(k, r, c2);
                    if (comm != rhs)
                        throw std::invalid_argument("module action is not a representation");
                }

    const int n = action.dim_base + v;
    std::vector<TruncatedGradedElement> extra;
    for (int a = 0; a < v; ++a) {
        TruncatedGradedElement img(m, n, truncation);
        for (int i = 0; i < m; ++i)
            for (int b = 0; b < v; ++b)
                if (entry(i, b, a) != 0)
                    img = img + TruncatedGradedElement::odd_gen(i, m, n, truncation) *
                                  TruncatedGradedElement::even_gen(action.dim_base + b, m, n, truncation) *
                                  (-entry(i, b, a));
        extra.push_back(img);
    }
    Derivation d = ce_derivation(action, truncation, extra);
    return build_ce_levels(d, m, n, truncation, max_ce_degree, basis_cap);
}

/// Shift the chart origin of an action to the point p: the returned action
/// has vector fields w_i(x) = v_i(x + p), expanded exactly.
inline ActionLieData recenter_action(const ActionLieData& action, const std::vector<Rational>& p) {
    ActionLieData out = action;
    const int n = action.dim_base;
    for (auto& vf : out.vector_fields)
        for (auto& comp : vf) {
            std::vector<TruncatedGradedElement> shifted;
            for (int l = 0; l < n; ++l)
                shifted.push_back(
                    TruncatedGradedElement::even_gen(l, comp.num_odd(), n, comp.truncation()) +
                    TruncatedGradedElement::constant(p[l], comp.num_odd(), n, comp.truncation()));
            comp = comp.substitute_even(shifted);
        }
    return out;
}

namespace examples {

/// Rotations of the plane: one generator acting by y d/dx - x d/dy.
inline ActionLieData so2_r2(int truncation = 4) {
    ActionLieData a;
    a.dim_g = 1;
    a.dim_base = 2;
    a.structure_constants.assign(1, std::vector<std::vector<Rational>>(1, std::vector<Rational>(1, 0)));
    auto x = TruncatedGradedElement::even_gen(0, 0, 2, truncation);
    auto y = TruncatedGradedElement::even_gen(1, 0, 2, truncation);
    a.vector_fields = {{y, -x}};
    return a;
}

/// Rotations of 3-space with c_ij^k the Levi-Civita symbol; the generator
/// a_i acts by the field -(e_i cross x), which makes the bracket convention
/// match (linear fields compose contravariantly).
inline ActionLieData so3_r3(int truncation = 4) {
    ActionLieData a;
    a.dim_g = 3;
    a.dim_base = 3;
    a.structure_constants.assign(3, std::vector<std::vector<Rational>>(3, std::vector<Rational>(3, 0)));
    for (int i = 0; i < 3; ++i) {
        int j = (i + 1) % 3, k = (i + 2) % 3;
        a.structure_constants[i][j][k] = 1;
        a.structure_constants[j][i][k] = -1;
    }
    std::vector<TruncatedGradedElement> coord;
    for (int l = 0; l < 3; ++l) coord.push_back(TruncatedGradedElement::even_gen(l, 0, 3, truncation));
    a.vector_fields.resize(3);
    for (int i = 0; i < 3; ++i) {
        // -(e_i cross x): component j of e_i cross x is eps_{ijk} x_k
        int j = (i + 1) % 3, k = (i + 2) % 3;
        std::vector<TruncatedGradedElement> vf(3, TruncatedGradedElement::zero(0, 3, truncation));
        vf[j] = coord[k];
        vf[k] = -coord[j];
        a.vector_fields[i] = vf;
    }
    return a;
}

/// m-dimensional abelian Lie algebra acting by zero on an n-dim base.
inline ActionLieData trivial_action(int m, int n, int truncation = 4) {
    ActionLieData a;
    a.dim_g = m;
    a.dim_base = n;
    a.structure_constants.assign(m, std::vector<std::vector<Rational>>(m, std::vector<Rational>(m, 0)));
    a.vector_fields.assign(m, std::vector<TruncatedGradedElement>(n, TruncatedGradedElement::zero(0, n, truncation)));
    return a;
}

}  // namespace examples

}  // namespace gencov
