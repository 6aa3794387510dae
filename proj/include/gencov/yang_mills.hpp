#pragma once

#include <gencov/mesh.hpp>
#include <gencov/mesh_ops.hpp>
#include <gencov/report.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace gencov {

enum class LieAlgebra { u1, su2 };

inline int algebra_dim(LieAlgebra a) { return a == LieAlgebra::u1 ? 1 : 3; }

/// Bracket of coefficient vectors in the chosen basis. The one-dimensional
/// algebra is abelian; the three-dimensional one has the totally
/// antisymmetric structure constants, so the bracket is the cross product.
inline void bracket(LieAlgebra alg, const double* x, const double* y, double* out) {
    if (alg == LieAlgebra::u1) {
        out[0] = 0;
        return;
    }
    out[0] = x[1] * y[2] - x[2] * y[1];
    out[1] = x[2] * y[0] - x[0] * y[2];
    out[2] = x[0] * y[1] - x[1] * y[0];
}

namespace detail {

inline std::vector<std::vector<int>> index_combos(int n, int p) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    auto rec = [&](auto&& self, int start) -> void {
        if (static_cast<int>(cur.size()) == p) {
            out.push_back(cur);
            return;
        }
        for (int i = start; i < n; ++i) {
            cur.push_back(i);
            self(self, i + 1);
            cur.pop_back();
        }
    };
    rec(rec, 0);
    return out;
}

/// Sign of sorting the concatenation of two disjoint increasing sequences.
inline int concat_sign(const std::vector<int>& a, const std::vector<int>& b) {
    int inv = 0;
    for (int x : a)
        for (int y : b)
            if (x > y) ++inv;
    return (inv % 2 == 0) ? 1 : -1;
}

}  // namespace detail

/// Differential form with coefficients in a small matrix Lie algebra,
/// stored per node on increasing index combinations (antisymmetry is thus
/// structural) with real coordinates in a fixed algebra basis.
struct LieAlgValuedForm {
    TorusMesh mesh;
    int degree = 0;
    LieAlgebra alg = LieAlgebra::u1;
    std::vector<std::vector<int>> combos;
    GridData data;  // ncomp = ncombo * algebra_dim

    LieAlgValuedForm() = default;
    LieAlgValuedForm(const TorusMesh& m, int p, LieAlgebra a)
        : mesh(m), degree(p), alg(a), combos(detail::index_combos(m.dim, p)) {
        if (p < 0 || p > m.dim) throw std::invalid_argument("form degree out of range");
        data = GridData(m, static_cast<int>(combos.size()) * algebra_dim(a));
    }

    int adim() const { return algebra_dim(alg); }
    int ncombo() const { return static_cast<int>(combos.size()); }

    double& at(std::size_t node, int combo, int a) { return data.at(node, combo * adim() + a); }
    double at(std::size_t node, int combo, int a) const {
        return data.at(node, combo * adim() + a);
    }
    double max_abs() const { return data.max_abs(); }

    int combo_index(const std::vector<int>& c) const {
        for (int i = 0; i < ncombo(); ++i)
            if (combos[i] == c) return i;
        throw std::logic_error("unknown index combination");
    }
};

/// Centered-difference exterior derivative, componentwise on the coefficient
/// algebra.
inline LieAlgValuedForm exterior_d(const LieAlgValuedForm& w) {
    if (w.degree >= w.mesh.dim) throw std::invalid_argument("top-degree form has no differential");
    LieAlgValuedForm out(w.mesh, w.degree + 1, w.alg);
    const int ad = w.adim();
    for (int ci = 0; ci < w.ncombo(); ++ci) {
        const auto& I = w.combos[ci];
        for (int mu = 0; mu < w.mesh.dim; ++mu) {
            if (std::find(I.begin(), I.end(), mu) != I.end()) continue;
            std::vector<int> J = I;
            J.insert(std::upper_bound(J.begin(), J.end(), mu), mu);
            int pos = static_cast<int>(std::lower_bound(J.begin(), J.end(), mu) - J.begin());
            double sign = (pos % 2 == 0) ? 1.0 : -1.0;
            int cj = out.combo_index(J);
            for (int a = 0; a < ad; ++a) {
                auto d = centered_derivative(w.data, ci * ad + a, mu);
                for (std::size_t id = 0; id < w.mesh.nodes(); ++id)
                    out.at(id, cj, a) += sign * d[id];
            }
        }
    }
    return out;
}

/// Wedge of a connection-type 1-form against a p-form, with the Lie bracket
/// on coefficients and the shuffle sign of moving the 1-form index into
/// place.
inline LieAlgValuedForm wedge_bracket(const LieAlgValuedForm& A, const LieAlgValuedForm& w) {
    if (!(A.mesh == w.mesh) || A.alg != w.alg) throw std::invalid_argument("form mismatch");
    if (A.degree != 1) throw std::invalid_argument("first argument must be a 1-form");
    if (w.degree + 1 > w.mesh.dim) throw std::invalid_argument("wedge exceeds top degree");
    LieAlgValuedForm out(w.mesh, w.degree + 1, w.alg);
    const int ad = w.adim();
    double br[3];
    for (int cj = 0; cj < out.ncombo(); ++cj) {
        const auto& J = out.combos[cj];
        for (int t = 0; t < static_cast<int>(J.size()); ++t) {
            int mu = J[t];
            std::vector<int> I = J;
            I.erase(I.begin() + t);
            int ci = w.combo_index(I);
            double sign = (t % 2 == 0) ? 1.0 : -1.0;
            for (std::size_t id = 0; id < w.mesh.nodes(); ++id) {
                bracket(w.alg, &A.data.v[id * A.data.ncomp + mu * ad],
                        &w.data.v[id * w.data.ncomp + ci * ad], br);
                for (int a = 0; a < ad; ++a) out.at(id, cj, a) += sign * br[a];
            }
        }
    }
    return out;
}

/// Pointwise algebraic Hodge star for the given metric: raise all indices
/// with the inverse metric (the compound-matrix determinant on increasing
/// combinations), contract with the volume form, and land on the
/// complementary combination with the permutation sign.
inline LieAlgValuedForm hodge_star(const MetricField& g, const LieAlgValuedForm& w) {
    if (!(g.mesh == w.mesh)) throw std::invalid_argument("mesh mismatch");
    const int n = w.mesh.dim;
    const int p = w.degree;
    LieAlgValuedForm out(w.mesh, n - p, w.alg);
    const int ad = w.adim();
    auto pcombos = w.combos;
    // complement and sign are combination data, independent of the node
    std::vector<int> comp_index(pcombos.size());
    std::vector<double> comp_sign(pcombos.size());
    for (std::size_t k = 0; k < pcombos.size(); ++k) {
        std::vector<int> comp;
        for (int i = 0; i < n; ++i)
            if (std::find(pcombos[k].begin(), pcombos[k].end(), i) == pcombos[k].end())
                comp.push_back(i);
        comp_index[k] = out.combo_index(comp);
        comp_sign[k] = detail::concat_sign(pcombos[k], comp);
    }
    for (std::size_t id = 0; id < w.mesh.nodes(); ++id) {
        double gm[3][3], inv[3][3];
        g.load(id, gm);
        double dg = detail::det_sym(gm, n);
        if (dg <= 0) throw std::domain_error("metric is not positive definite");
        detail::inverse_sym(gm, n, inv);
        double sq = std::sqrt(dg);
        for (std::size_t k = 0; k < pcombos.size(); ++k) {
            for (int a = 0; a < ad; ++a) {
                // raised coefficient on combination k
                double raised = 0;
                for (std::size_t l = 0; l < pcombos.size(); ++l) {
                    double det = 1;
                    if (p == 1) {
                        det = inv[pcombos[k][0]][pcombos[l][0]];
                    } else if (p == 2) {
                        det = inv[pcombos[k][0]][pcombos[l][0]] * inv[pcombos[k][1]][pcombos[l][1]] -
                              inv[pcombos[k][0]][pcombos[l][1]] * inv[pcombos[k][1]][pcombos[l][0]];
                    } else if (p == 3) {
                        const auto& K = pcombos[k];
                        const auto& L = pcombos[l];
                        det = inv[K[0]][L[0]] *
                                  (inv[K[1]][L[1]] * inv[K[2]][L[2]] - inv[K[1]][L[2]] * inv[K[2]][L[1]]) -
                              inv[K[0]][L[1]] *
                                  (inv[K[1]][L[0]] * inv[K[2]][L[2]] - inv[K[1]][L[2]] * inv[K[2]][L[0]]) +
                              inv[K[0]][L[2]] *
                                  (inv[K[1]][L[0]] * inv[K[2]][L[1]] - inv[K[1]][L[1]] * inv[K[2]][L[0]]);
                    }
                    raised += det * w.at(id, static_cast<int>(l), a);
                }
                out.at(id, comp_index[k], a) += sq * comp_sign[k] * raised;
            }
        }
    }
    return out;
}

/// Covariant exterior derivative of the given background connection.
inline LieAlgValuedForm covariant_d(const LieAlgValuedForm& A, const LieAlgValuedForm& w) {
    LieAlgValuedForm out = exterior_d(w);
    LieAlgValuedForm wb = wedge_bracket(A, w);
    for (std::size_t i = 0; i < out.data.v.size(); ++i) out.data.v[i] += wb.data.v[i];
    return out;
}

/// The middle operator of the four-term complex on 1-forms, expanded into
/// its four summands.
inline LieAlgValuedForm ym_middle_operator(const MetricField& g, const LieAlgValuedForm& A,
                                           const LieAlgValuedForm& w) {
    if (w.degree != 1) throw std::invalid_argument("middle operator acts on 1-forms");
    auto star_dw = hodge_star(g, exterior_d(w));
    auto star_Aw = hodge_star(g, wedge_bracket(A, w));
    auto out = exterior_d(star_dw);
    auto t2 = exterior_d(star_Aw);
    auto t3 = wedge_bracket(A, star_dw);
    auto t4 = wedge_bracket(A, star_Aw);
    for (std::size_t i = 0; i < out.data.v.size(); ++i)
        out.data.v[i] += t2.data.v[i] + t3.data.v[i] + t4.data.v[i];
    return out;
}

/// Curvature of a connection 1-form.
inline LieAlgValuedForm curvature(const LieAlgValuedForm& A) {
    LieAlgValuedForm F = exterior_d(A);
    LieAlgValuedForm ww = wedge_bracket(A, A);
    for (std::size_t i = 0; i < F.data.v.size(); ++i) F.data.v[i] += 0.5 * ww.data.v[i];
    return F;
}

/// Integrated metric pairing of two equal-degree forms, with the
/// positive-definite pairing on the coefficient algebra.
inline double form_pairing(const MetricField& g, const LieAlgValuedForm& a,
                           const LieAlgValuedForm& b) {
    if (!(a.mesh == b.mesh) || a.degree != b.degree || a.alg != b.alg)
        throw std::invalid_argument("form mismatch");
    // <a, b>_g vol integrates a against the star of b in the top degree
    auto sb = hodge_star(g, b);
    // wedge on increasing combinations: a_K ^ (sb)_{comp K} with the sign
    double total = 0;
    const int n = a.mesh.dim;
    const int ad = a.adim();
    double hn = std::pow(a.mesh.h(), n);
    for (int k = 0; k < a.ncombo(); ++k) {
        std::vector<int> comp;
        for (int i = 0; i < n; ++i)
            if (std::find(a.combos[k].begin(), a.combos[k].end(), i) == a.combos[k].end())
                comp.push_back(i);
        int ck = sb.combo_index(comp);
        double sign = detail::concat_sign(a.combos[k], comp);
        for (std::size_t id = 0; id < a.mesh.nodes(); ++id)
            for (int c = 0; c < ad; ++c) total += sign * a.at(id, k, c) * sb.at(id, ck, c) * hn;
    }
    return total;
}

inline double ym_action(const MetricField& g, const LieAlgValuedForm& A) {
    auto F = curvature(A);
    return 0.5 * form_pairing(g, F, F);
}

/// Pullback of a form along a diffeomorphism: coefficients move by
/// interpolation at the image points and the index block transforms by the
/// compound determinant of the Jacobian.
inline LieAlgValuedForm pullback_form(const DiffeoTable& t, const LieAlgValuedForm& w) {
    if (!(t.mesh == w.mesh)) throw std::invalid_argument("mesh mismatch");
    const int p = w.degree;
    const int ad = w.adim();
    LieAlgValuedForm out(w.mesh, p, w.alg);
    std::vector<SpectralInterpolant> interp;
    interp.reserve(static_cast<std::size_t>(w.ncombo()) * ad);
    for (int c = 0; c < w.ncombo() * ad; ++c) {
        std::vector<double> comp(w.mesh.nodes());
        for (std::size_t id = 0; id < w.mesh.nodes(); ++id) comp[id] = w.data.at(id, c);
        interp.emplace_back(w.mesh, comp);
    }
    for (std::size_t id = 0; id < w.mesh.nodes(); ++id) {
        const auto& J = t.J[id];
        for (int ko = 0; ko < out.ncombo(); ++ko) {
            const auto& K = out.combos[ko];
            for (int ki = 0; ki < w.ncombo(); ++ki) {
                const auto& I = w.combos[ki];
                double det = 1;
                if (p == 1) {
                    det = J[I[0]][K[0]];
                } else if (p == 2) {
                    det = J[I[0]][K[0]] * J[I[1]][K[1]] - J[I[0]][K[1]] * J[I[1]][K[0]];
                } else if (p == 3) {
                    det = J[I[0]][K[0]] * (J[I[1]][K[1]] * J[I[2]][K[2]] - J[I[1]][K[2]] * J[I[2]][K[1]]) -
                          J[I[0]][K[1]] * (J[I[1]][K[0]] * J[I[2]][K[2]] - J[I[1]][K[2]] * J[I[2]][K[0]]) +
                          J[I[0]][K[2]] * (J[I[1]][K[0]] * J[I[2]][K[1]] - J[I[1]][K[1]] * J[I[2]][K[0]]);
                }
                if (det == 0) continue;
                for (int a = 0; a < ad; ++a)
                    out.at(id, ko, a) += det * interp[static_cast<std::size_t>(ki) * ad + a].value(t.y[id]);
            }
        }
    }
    return out;
}

inline LieAlgValuedForm pullback_form(const Diffeomorphism& f, const LieAlgValuedForm& w) {
    return pullback_form(DiffeoTable(f, w.mesh), w);
}

// ---------------------------------------------------------------------------
// Analytic form data for refinement studies.

struct AnalyticForm {
    int dim = 2;
    int degree = 0;
    LieAlgebra alg = LieAlgebra::u1;
    std::vector<AnalyticScalar> comp;  // combination-major, algebra coordinate minor
};

inline AnalyticForm random_form(std::uint64_t seed, int dim, int degree, LieAlgebra alg,
                                double amp = 1.0, int max_freq = 2, int nterms = 3) {
    std::mt19937_64 rng(seed);
    AnalyticForm out{dim, degree, alg, {}};
    std::size_t count =
        detail::index_combos(dim, degree).size() * static_cast<std::size_t>(algebra_dim(alg));
    for (std::size_t c = 0; c < count; ++c)
        out.comp.push_back(detail::random_trig(rng, dim, amp, max_freq, nterms));
    return out;
}

inline LieAlgValuedForm sample_form(const TorusMesh& mesh, const AnalyticForm& af) {
    if (af.dim != mesh.dim) throw std::invalid_argument("dimension mismatch");
    LieAlgValuedForm out(mesh, af.degree, af.alg);
    for (std::size_t id = 0; id < mesh.nodes(); ++id) {
        auto x = mesh.point(id);
        for (std::size_t c = 0; c < af.comp.size(); ++c)
            out.data.at(id, static_cast<int>(c)) = af.comp[c](x);
    }
    return out;
}

namespace detail {
inline double sup_diff(const LieAlgValuedForm& a, const LieAlgValuedForm& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.data.v.size(); ++i)
        m = std::max(m, std::abs(a.data.v[i] - b.data.v[i]));
    return m;
}
}  // namespace detail

/// Refinement study of the three commuting squares of the four-term complex:
/// pulling back the output of each operator along a diffeomorphism against
/// applying the operator built from the pulled-back metric and connection to
/// the pulled-back input. Reports one check per square.
inline std::array<CheckReport, 3> check_ym_equivariance(const AnalyticMetric& gg,
                                                        const AnalyticForm& Ag,
                                                        const AnalyticVector& disp,
                                                        const AnalyticForm& a0,
                                                        const AnalyticForm& w1,
                                                        const AnalyticForm& bn1,
                                                        const std::vector<int>& grids) {
    std::array<CheckReport, 3> reps;
    reps[0].name = "ym_first_square";
    reps[1].name = "ym_middle_square";
    reps[2].name = "ym_last_square";
    for (auto& r : reps) {
        r.anchor = "YMequivariance";
        r.grids = grids;
    }
    for (int N : grids) {
        TorusMesh mesh(gg.dim, N);
        auto g = sample_metric(mesh, gg);
        auto A = sample_form(mesh, Ag);
        auto alpha = sample_form(mesh, a0);
        auto omega = sample_form(mesh, w1);
        auto beta = sample_form(mesh, bn1);
        auto f = make_diffeomorphism(mesh, disp);
        DiffeoTable t(f, mesh);
        auto fg = pullback_metric(t, g);
        auto fA = pullback_form(t, A);

        auto lhs0 = pullback_form(t, covariant_d(A, alpha));
        auto rhs0 = covariant_d(fA, pullback_form(t, alpha));
        reps[0].residuals.push_back(detail::sup_diff(lhs0, rhs0));
        reps[0].scale = std::max(reps[0].scale, lhs0.max_abs());

        auto lhs1 = pullback_form(t, ym_middle_operator(g, A, omega));
        auto rhs1 = ym_middle_operator(fg, fA, pullback_form(t, omega));
        reps[1].residuals.push_back(detail::sup_diff(lhs1, rhs1));
        reps[1].scale = std::max(reps[1].scale, lhs1.max_abs());

        auto lhs2 = pullback_form(t, covariant_d(A, beta));
        auto rhs2 = covariant_d(fA, pullback_form(t, beta));
        reps[2].residuals.push_back(detail::sup_diff(lhs2, rhs2));
        reps[2].scale = std::max(reps[2].scale, lhs2.max_abs());
    }
    for (auto& r : reps) {
        // the operators themselves are O(1); only the disagreement refines
        if (r.grids.size() >= 2) {
            r.order = fit_order(r.grids, r.residuals);
            r.passed = r.order >= TolerancePolicy{}.min_order &&
                       r.residuals.back() < 0.1 * std::max(r.scale, 1e-300);
        } else {
            r.passed = r.residuals.back() < 1e-9 * std::max(r.scale, 1e-300);
        }
    }
    return reps;
}

}  // namespace gencov
