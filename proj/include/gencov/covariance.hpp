#pragma once

#include <gencov/mesh_ops.hpp>
#include <gencov/report.hpp>

#include <utility>

namespace gencov {

/// Polynomial self-interaction: finitely many lambda_n, n >= 2, entering
/// the Lagrangian as sum lambda_n phi^n / n!.
struct PotentialSpec {
    std::vector<std::pair<int, double>> coeffs;  // (power n, lambda_n)

    bool empty() const { return coeffs.empty(); }
    double value(double phi) const {
        double s = 0;
        for (auto [n, lam] : coeffs) {
            double fact = 1, p = 1;
            for (int k = 1; k <= n; ++k) {
                fact *= k;
                p *= phi;
            }
            s += lam * p / fact;
        }
        return s;
    }
    double derivative(double phi) const {
        double s = 0;
        for (auto [n, lam] : coeffs) {
            double fact = 1, p = 1;
            for (int k = 1; k <= n - 1; ++k) {
                fact *= k;
                p *= phi;
            }
            s += lam * p / fact;
        }
        return s;
    }
};

/// S(phi) = integral of (-1/2 phi Lap_g phi + V(phi)) vol_g.
inline double action_functional(const MetricField& g, const ScalarField& phi,
                                const PotentialSpec& pot = {}) {
    double s = -0.5 * pair_density_scalar(bv_differential(g, phi), phi);
    if (!pot.empty()) {
        auto sq = volume_factor(g);
        double pv = 0;
        for (std::size_t id = 0; id < g.mesh.nodes(); ++id)
            pv += pot.value(phi.at(id)) * sq.at(id);
        s += pv * std::pow(g.mesh.h(), g.mesh.dim);
    }
    return s;
}

/// Equation-of-motion density: Lap_g(phi) vol_g + V'(phi) vol_g, as the
/// coefficient of d^n x.
inline DensityField el_form(const MetricField& g, const ScalarField& phi,
                            const PotentialSpec& pot = {}) {
    DensityField q = bv_differential(g, phi);
    if (!pot.empty()) {
        auto sq = volume_factor(g);
        for (std::size_t id = 0; id < g.mesh.nodes(); ++id)
            q.at(id) += pot.derivative(phi.at(id)) * sq.at(id);
    }
    return q;
}

/// Raise both indices of a metric perturbation with the derivative sign
/// convention fixed by d/dt of (g g^{-1}) = 0: out^{mu nu} =
/// -g^{mu rho} g^{nu sigma} dg_{rho sigma}.
inline SymTensorField raise_perturbation(const MetricField& g, const SymTensorField& dg) {
    if (!(g.mesh == dg.mesh)) throw std::invalid_argument("mesh mismatch");
    const int n = g.mesh.dim;
    SymTensorField out(g.mesh);
    double m[3][3], inv[3][3];
    for (std::size_t id = 0; id < g.mesh.nodes(); ++id) {
        g.load(id, m);
        detail::inverse_sym(m, n, inv);
        for (int mu = 0; mu < n; ++mu)
            for (int nu = mu; nu < n; ++nu) {
                double s = 0;
                for (int r = 0; r < n; ++r)
                    for (int c = 0; c < n; ++c)
                        s -= inv[mu][r] * inv[nu][c] * dg.at_sym(id, r, c);
                out.at_sym(id, mu, nu) = s;
            }
    }
    return out;
}

/// First-order change of the Laplace-Beltrami operator under g -> g + dg,
/// applied to phi:
///   -1/2 Tr(g^{-1} dg) Lap_g phi
///   + (1/sqrt g) d_mu( sqrt g ( 1/2 Tr(g^{-1} dg) g^{mu nu} d_nu phi
///                               + dg^{mu nu} d_nu phi ) )
/// with dg^{mu nu} raised as in raise_perturbation.
inline ScalarField laplacian_deformation(const MetricField& g, const SymTensorField& dg,
                                         const ScalarField& phi) {
    if (!(g.mesh == dg.mesh) || !(g.mesh == phi.mesh))
        throw std::invalid_argument("mesh mismatch");
    g.require_spd();
    const TorusMesh& mesh = g.mesh;
    const int n = mesh.dim;

    std::array<std::vector<double>, 3> dphi;
    for (int a = 0; a < n; ++a) dphi[a] = centered_derivative(phi, 0, a);
    auto lap = laplace_beltrami(g, phi);
    auto up = raise_perturbation(g, dg);

    GridData flux(mesh, n);
    std::vector<double> halftrace(mesh.nodes());
    double m[3][3], inv[3][3];
    for (std::size_t id = 0; id < mesh.nodes(); ++id) {
        g.load(id, m);
        detail::inverse_sym(m, n, inv);
        double sq = std::sqrt(detail::det_sym(m, n));
        double tr = 0;
        for (int mu = 0; mu < n; ++mu)
            for (int nu = 0; nu < n; ++nu) tr += inv[mu][nu] * dg.at_sym(id, mu, nu);
        halftrace[id] = 0.5 * tr;
        for (int mu = 0; mu < n; ++mu) {
            double s = 0;
            for (int nu = 0; nu < n; ++nu)
                s += (halftrace[id] * inv[mu][nu] + up.at_sym(id, mu, nu)) * dphi[nu][id];
            flux.at(id, mu) = sq * s;
        }
    }
    ScalarField out(mesh);
    for (int mu = 0; mu < n; ++mu) {
        auto div = centered_derivative(flux, mu, mu);
        for (std::size_t id = 0; id < mesh.nodes(); ++id) out.at(id) += div[id];
    }
    auto sq = volume_factor(g);
    for (std::size_t id = 0; id < mesh.nodes(); ++id)
        out.at(id) = -halftrace[id] * lap.at(id) + out.at(id) / sq.at(id);
    return out;
}

/// The tensor density coupling to metric perturbations as displayed:
/// T_{mu nu} = -d_mu phi d_nu phi - 1/2 g_{mu nu} |d phi|^2_g.
inline SymTensorField stress_energy(const MetricField& g, const ScalarField& phi) {
    if (!(g.mesh == phi.mesh)) throw std::invalid_argument("mesh mismatch");
    const TorusMesh& mesh = g.mesh;
    const int n = mesh.dim;
    std::array<std::vector<double>, 3> dphi;
    for (int a = 0; a < n; ++a) dphi[a] = centered_derivative(phi, 0, a);
    SymTensorField out(mesh);
    double m[3][3], inv[3][3];
    for (std::size_t id = 0; id < mesh.nodes(); ++id) {
        g.load(id, m);
        detail::inverse_sym(m, n, inv);
        double grad2 = 0;
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) grad2 += inv[r][c] * dphi[r][id] * dphi[c][id];
        for (int mu = 0; mu < n; ++mu)
            for (int nu = mu; nu < n; ++nu)
                out.at_sym(id, mu, nu) =
                    -dphi[mu][id] * dphi[nu][id] - 0.5 * m[mu][nu] * grad2;
    }
    return out;
}

/// The tensor whose pairing against dg^{mu nu} vol_g is exactly the metric
/// derivative of the free action: T = 1/2 d_mu phi d_nu phi
/// - 1/4 g_{mu nu} |d phi|^2. Note it is not a scalar multiple of
/// stress_energy: the gradient part picks up -1/2 but the trace part keeps
/// the opposite relative sign (in two dimensions this tensor is
/// trace-free). The quadrature identities below pair against this one.
inline SymTensorField stress_energy_variational(const MetricField& g, const ScalarField& phi) {
    if (!(g.mesh == phi.mesh)) throw std::invalid_argument("mesh mismatch");
    const TorusMesh& mesh = g.mesh;
    const int n = mesh.dim;
    std::array<std::vector<double>, 3> dphi;
    for (int a = 0; a < n; ++a) dphi[a] = centered_derivative(phi, 0, a);
    SymTensorField out(mesh);
    double m[3][3], inv[3][3];
    for (std::size_t id = 0; id < mesh.nodes(); ++id) {
        g.load(id, m);
        detail::inverse_sym(m, n, inv);
        double grad2 = 0;
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) grad2 += inv[r][c] * dphi[r][id] * dphi[c][id];
        for (int mu = 0; mu < n; ++mu)
            for (int nu = mu; nu < n; ++nu)
                out.at_sym(id, mu, nu) =
                    0.5 * dphi[mu][id] * dphi[nu][id] - 0.25 * m[mu][nu] * grad2;
    }
    return out;
}

/// Quadrature of dg^{mu nu} T_{mu nu} vol_g for an already-raised dg.
inline double pair_raised_tensor(const MetricField& g, const SymTensorField& up,
                                 const SymTensorField& T) {
    const int n = g.mesh.dim;
    auto sq = volume_factor(g);
    double s = 0;
    for (std::size_t id = 0; id < g.mesh.nodes(); ++id) {
        double node = 0;
        for (int mu = 0; mu < n; ++mu)
            for (int nu = 0; nu < n; ++nu) node += up.at_sym(id, mu, nu) * T.at_sym(id, mu, nu);
        s += node * sq.at(id);
    }
    return s * std::pow(g.mesh.h(), g.mesh.dim);
}

// -------------------------------------------------------------------------
// Check drivers. Each runs over a list of grid sizes with fields rebuilt
// from the same analytic data, so residual decay measures stencil and
// interpolation error only.

inline CheckReport check_scalar_equivariance(const AnalyticMetric& gg, const AnalyticScalar& pg,
                                             const AnalyticVector& dispg,
                                             const std::vector<int>& grids,
                                             const PotentialSpec& pot = {},
                                             const TolerancePolicy& tol = {}) {
    CheckReport rep;
    rep.name = pot.empty() ? "scalar_equivariance" : "interacting_equivariance";
    rep.anchor = pot.empty() ? "scalequiv" : "GCphi4";
    rep.grids = grids;
    for (int N : grids) {
        TorusMesh m(gg.dim, N);
        auto g = sample_metric(m, gg);
        auto phi = sample_scalar(m, pg);
        auto f = make_diffeomorphism(m, dispg);
        DiffeoTable t(f, m);
        auto lhs = pullback_density(t, el_form(g, phi, pot));
        auto rhs = el_form(pullback_metric(t, g), pullback_scalar(t, phi), pot);
        double err = 0, scale = 0;
        for (std::size_t id = 0; id < m.nodes(); ++id) {
            err = std::max(err, std::abs(lhs.at(id) - rhs.at(id)));
            scale = std::max(scale, std::abs(lhs.at(id)));
        }
        rep.residuals.push_back(err);
        rep.scale = std::max(rep.scale, scale);
    }
    rep.evaluate(tol);
    return rep;
}

/// Residual of the first-order operator formula against a centered finite
/// difference in the deformation parameter, at the listed step sizes.
inline CheckReport check_laplacian_deformation(const AnalyticMetric& gg, const AnalyticScalar& pg,
                                               const AnalyticSymTensor& dgg, int N,
                                               const std::vector<double>& tsteps = {1e-2, 1e-3}) {
    CheckReport rep;
    rep.name = "laplacian_deformation";
    rep.anchor = "derlaplace";
    TorusMesh m(gg.dim, N);
    auto g = sample_metric(m, gg);
    auto phi = sample_scalar(m, pg);
    auto dg = sample_sym_tensor(m, dgg);
    auto formula = laplacian_deformation(g, dg, phi);
    rep.scale = formula.max_abs();
    std::vector<double> residuals;
    for (double t : tsteps) {
        MetricField gp = g, gm = g;
        for (std::size_t i = 0; i < g.v.size(); ++i) {
            gp.v[i] += t * dg.v[i];
            gm.v[i] -= t * dg.v[i];
        }
        auto lp = laplace_beltrami(gp, phi);
        auto lm = laplace_beltrami(gm, phi);
        double err = 0;
        for (std::size_t id = 0; id < m.nodes(); ++id)
            err = std::max(err, std::abs((lp.at(id) - lm.at(id)) / (2 * t) - formula.at(id)));
        residuals.push_back(err);
    }
    rep.residuals = residuals;
    rep.order = fit_order_steps(tsteps, residuals);
    rep.passed = rep.order >= 1.8;
    rep.details["t_steps"] = tsteps;
    return rep;
}

/// Both sides of the first-variation identity: quadrature of the coupled
/// tensor against a finite difference of the action in the perturbation
/// parameter. Residual is their gap, O(h^2 + t^2).
inline CheckReport check_variational_identity(const AnalyticMetric& gg, const AnalyticScalar& pg,
                                              const AnalyticSymTensor& dgg,
                                              const std::vector<int>& grids, double t0 = 1e-2,
                                              const TolerancePolicy& tol = {}) {
    CheckReport rep;
    rep.name = "variational_identity";
    rep.anchor = "dgT";
    rep.grids = grids;
    ordered_json lhs_list = ordered_json::array(), rhs_list = ordered_json::array();
    ordered_json t_list = ordered_json::array();
    for (int N : grids) {
        // couple the difference step to the grid so the joint h, t error
        // budget shrinks at a single observable rate
        double t = t0 * grids.front() / N;
        TorusMesh m(gg.dim, N);
        auto g = sample_metric(m, gg);
        auto phi = sample_scalar(m, pg);
        auto dg = sample_sym_tensor(m, dgg);
        double lhs = pair_raised_tensor(g, raise_perturbation(g, dg),
                                        stress_energy_variational(g, phi));
        MetricField gp = g, gm = g;
        for (std::size_t i = 0; i < g.v.size(); ++i) {
            gp.v[i] += t * dg.v[i];
            gm.v[i] -= t * dg.v[i];
        }
        double rhs = (action_functional(gp, phi) - action_functional(gm, phi)) / (2 * t);
        rep.residuals.push_back(std::abs(lhs - rhs));
        rep.scale = std::max({rep.scale, std::abs(lhs), std::abs(rhs), 1e-30});
        lhs_list.push_back(lhs);
        rhs_list.push_back(rhs);
        t_list.push_back(t);
    }
    rep.details["tensor_side"] = lhs_list;
    rep.details["finite_difference_side"] = rhs_list;
    rep.details["t_steps"] = t_list;
    rep.evaluate(tol);
    return rep;
}

struct FourTerms {
    double t1 = 0, t2 = 0, t3 = 0, t4 = 0;
    double sum() const { return t1 + t2 + t3 + t4; }
    double max_term() const {
        return std::max({std::abs(t1), std::abs(t2), std::abs(t3), std::abs(t4)});
    }
};

/// The four summands of the infinitesimal covariance identity for the free
/// action along the flow of V: derivative hitting each of the two field
/// slots, the operator, and the volume form. Their sum vanishes in the
/// continuum for arbitrary smooth phi.
inline FourTerms infinitesimal_covariance_terms(const MetricField& g, const ScalarField& phi,
                                                const MeshVectorField& V) {
    FourTerms out;
    auto lv_phi = lie_derivative_scalar(V, phi);
    auto lv_g = lie_derivative_metric(V, g);
    out.t1 = pair_density_scalar(bv_differential(g, phi), lv_phi);
    out.t2 = pair_density_scalar(bv_differential(g, lv_phi), phi);
    auto defrm = laplacian_deformation(g, lv_g, phi);
    auto sq = volume_factor(g);
    auto lap = laplace_beltrami(g, phi);
    const int n = g.mesh.dim;
    double m[3][3], inv[3][3];
    double t3 = 0, t4 = 0;
    for (std::size_t id = 0; id < g.mesh.nodes(); ++id) {
        g.load(id, m);
        detail::inverse_sym(m, n, inv);
        double tr = 0;
        for (int mu = 0; mu < n; ++mu)
            for (int nu = 0; nu < n; ++nu) tr += inv[mu][nu] * lv_g.at_sym(id, mu, nu);
        t3 += phi.at(id) * defrm.at(id) * sq.at(id);
        t4 += phi.at(id) * lap.at(id) * 0.5 * tr * sq.at(id);
    }
    out.t3 = t3 * std::pow(g.mesh.h(), n);
    out.t4 = t4 * std::pow(g.mesh.h(), n);
    return out;
}

inline CheckReport check_infinitesimal_covariance(const AnalyticMetric& gg,
                                                  const AnalyticScalar& pg,
                                                  const AnalyticVector& vg,
                                                  const std::vector<int>& grids,
                                                  const TolerancePolicy& tol = {}) {
    CheckReport rep;
    rep.name = "infinitesimal_covariance";
    rep.anchor = "infgencov";
    rep.grids = grids;
    ordered_json terms = ordered_json::array();
    for (int N : grids) {
        TorusMesh m(gg.dim, N);
        auto four = infinitesimal_covariance_terms(sample_metric(m, gg), sample_scalar(m, pg),
                                                   sample_vector(m, vg));
        rep.residuals.push_back(std::abs(four.sum()));
        rep.scale = std::max(rep.scale, four.max_term());
        terms.push_back({four.t1, four.t2, four.t3, four.t4});
    }
    rep.details["terms"] = terms;
    // the summands stay O(1) under refinement, so only the cancellation
    // rate is meaningful here, not an absolute residual floor
    rep.order = fit_order(rep.grids, rep.residuals);
    rep.passed = rep.order >= tol.min_order && rep.residuals.back() < 0.1 * rep.scale;
    return rep;
}

/// Off-shell conservation statement: the metric-side pairing against the
/// flow direction equals the equation-of-motion pairing, with the frozen
/// proportionality constant 1. On-shell both sides vanish.
inline CheckReport noether_divergence_identity(const AnalyticMetric& gg, const AnalyticScalar& pg,
                                               const AnalyticVector& vg,
                                               const std::vector<int>& grids,
                                               const TolerancePolicy& tol = {}) {
    constexpr double kFrozenConstant = 1.0;
    CheckReport rep;
    rep.name = "noether_divergence";
    rep.anchor = "dgT-noether";
    rep.grids = grids;
    ordered_json lhs_list = ordered_json::array(), rhs_list = ordered_json::array();
    for (int N : grids) {
        TorusMesh m(gg.dim, N);
        auto g = sample_metric(m, gg);
        auto phi = sample_scalar(m, pg);
        auto V = sample_vector(m, vg);
        double lhs = pair_raised_tensor(g, raise_perturbation(g, lie_derivative_metric(V, g)),
                                        stress_energy_variational(g, phi));
        double rhs = pair_density_scalar(bv_differential(g, phi), lie_derivative_scalar(V, phi));
        rep.residuals.push_back(std::abs(lhs - kFrozenConstant * rhs));
        rep.scale = std::max({rep.scale, std::abs(lhs), std::abs(rhs)});
        lhs_list.push_back(lhs);
        rhs_list.push_back(rhs);
    }
    rep.details["metric_side"] = lhs_list;
    rep.details["equation_of_motion_side"] = rhs_list;
    rep.details["constant"] = kFrozenConstant;
    // order-of-agreement check against the frozen constant
    rep.order = fit_order(rep.grids, rep.residuals);
    rep.passed = rep.order >= tol.min_order && rep.residuals.back() < 0.1 * rep.scale;
    return rep;
}

}  // namespace gencov
