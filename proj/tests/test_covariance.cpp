#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <gencov/covariance.hpp>

using namespace gencov;

namespace {

ScalarField sample_fn(const TorusMesh& m, double (*f)(const std::array<double, 3>&)) {
    ScalarField out(m);
    for (std::size_t id = 0; id < m.nodes(); ++id) out.at(id) = f(m.point(id));
    return out;
}

}  // namespace

TEST_CASE("potential evaluation") {
    PotentialSpec quartic{{{4, 6.0}}};
    CHECK(quartic.value(2.0) == doctest::Approx(6.0 * 16 / 24));
    CHECK(quartic.derivative(2.0) == doctest::Approx(6.0 * 8 / 6));
    PotentialSpec none;
    CHECK(none.empty());
}

TEST_CASE("action functional") {
    TorusMesh m(2, 64);
    MetricField flat(m);
    SUBCASE("constants are stationary for the free part") {
        auto c = sample_fn(m, [](const std::array<double, 3>&) { return 1.7; });
        CHECK(std::abs(action_functional(flat, c)) < 1e-12);
        PotentialSpec quartic{{{4, 0.6}}};
        CHECK(action_functional(flat, c, quartic) ==
              doctest::Approx(0.6 * std::pow(1.7, 4) / 24).epsilon(1e-10));
    }
    SUBCASE("free eigenfunction value") {
        auto phi = sample_fn(m, [](const std::array<double, 3>& x) { return std::sin(2 * M_PI * x[0]); });
        CHECK(std::abs(action_functional(flat, phi) - M_PI * M_PI) < 0.05);
    }
}

TEST_CASE("stress-energy tensor") {
    TorusMesh m(2, 64);
    MetricField flat(m);
    SUBCASE("constant field gives zero") {
        auto c = sample_fn(m, [](const std::array<double, 3>&) { return 4.0; });
        CHECK(stress_energy(flat, c).max_abs() == 0.0);
    }
    SUBCASE("pinned values at the crest of a plane wave") {
        auto phi = sample_fn(m, [](const std::array<double, 3>& x) { return std::sin(2 * M_PI * x[0]); });
        auto T = stress_energy(flat, phi);
        std::size_t origin = m.idx({0, 0, 0});  // cos(2 pi x) = 1 there
        double w = 4 * M_PI * M_PI;
        CHECK(std::abs(T.at_sym(origin, 0, 0) + 1.5 * w) < 0.5);
        CHECK(std::abs(T.at_sym(origin, 1, 1) + 0.5 * w) < 0.2);
        CHECK(std::abs(T.at_sym(origin, 0, 1)) < 1e-12);
    }
    SUBCASE("variational tensor: trace-free in 2d, gradient part is -1/2 of displayed") {
        auto g = sample_metric(m, random_metric(71, 2));
        auto phi = sample_scalar(m, random_scalar(72, 2));
        auto a = stress_energy(g, phi);
        auto b = stress_energy_variational(g, phi);
        double err_trace = 0, err_offdiag = 0;
        for (std::size_t id = 0; id < m.nodes(); ++id) {
            double gm[3][3], inv[3][3];
            g.load(id, gm);
            detail::inverse_sym(gm, 2, inv);
            double tr = 0;
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 2; ++c) tr += inv[r][c] * b.at_sym(id, r, c);
            err_trace = std::max(err_trace, std::abs(tr));
            // displayed + 2 * variational = -g |grad phi|^2, and the trace
            // of the displayed tensor is -2 |grad phi|^2 in two dimensions
            double tra = 0;
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 2; ++c) tra += inv[r][c] * a.at_sym(id, r, c);
            for (int r = 0; r < 2; ++r)
                for (int c = r; c < 2; ++c)
                    err_offdiag = std::max(
                        err_offdiag, std::abs(a.at_sym(id, r, c) + 2 * b.at_sym(id, r, c) -
                                              (tra / 2) * gm[r][c]));
        }
        CHECK(err_trace < 1e-12);
        CHECK(err_offdiag < 1e-12);
    }
}

TEST_CASE("laplacian deformation") {
    TorusMesh m(2, 32);
    auto g = sample_metric(m, random_metric(81, 2));
    auto phi = sample_scalar(m, random_scalar(82, 2));
    SUBCASE("zero perturbation gives zero exactly") {
        SymTensorField zero(m);
        CHECK(laplacian_deformation(g, zero, phi).max_abs() == 0.0);
    }
    SUBCASE("linear in the perturbation") {
        auto d1 = sample_sym_tensor(m, random_sym_tensor(83, 2));
        auto d2 = sample_sym_tensor(m, random_sym_tensor(84, 2));
        SymTensorField combo(m);
        for (std::size_t i = 0; i < combo.v.size(); ++i) combo.v[i] = 2.0 * d1.v[i] - 0.5 * d2.v[i];
        auto lhs = laplacian_deformation(g, combo, phi);
        auto a = laplacian_deformation(g, d1, phi);
        auto b = laplacian_deformation(g, d2, phi);
        double err = 0;
        for (std::size_t i = 0; i < lhs.v.size(); ++i)
            err = std::max(err, std::abs(lhs.v[i] - (2.0 * a.v[i] - 0.5 * b.v[i])));
        CHECK(err < 1e-10);
    }
    SUBCASE("flat Killing direction vanishes to roundoff") {
        MetricField flat(m);
        MeshVectorField constV(m);
        for (std::size_t id = 0; id < m.nodes(); ++id) constV.at(id, 0) = 0.9;
        auto lvg = lie_derivative_metric(constV, flat);
        CHECK(laplacian_deformation(flat, lvg, phi).max_abs() < 1e-13);
    }
    SUBCASE("matches the centered difference in t at second order") {
        auto rep = check_laplacian_deformation(random_metric(81, 2), random_scalar(82, 2),
                                               random_sym_tensor(85, 2), 32);
        CHECK(rep.passed);
        CHECK(rep.order == doctest::Approx(2.0).epsilon(0.15));
    }
}

TEST_CASE("variational identity") {
    SUBCASE("random data converges jointly") {
        auto rep = check_variational_identity(random_metric(91, 2), random_scalar(92, 2),
                                              random_sym_tensor(93, 2), {16, 32, 64});
        CHECK(rep.passed);
        CHECK(rep.order > 1.8);
    }
    SUBCASE("flat metric, Killing direction: both sides at roundoff") {
        TorusMesh m(2, 32);
        MetricField flat(m);
        auto phi = sample_scalar(m, random_scalar(94, 2));
        MeshVectorField constV(m);
        for (std::size_t id = 0; id < m.nodes(); ++id) constV.at(id, 1) = 0.4;
        auto dg = lie_derivative_metric(constV, flat);
        double lhs = pair_raised_tensor(flat, raise_perturbation(flat, dg),
                                        stress_energy_variational(flat, phi));
        MetricField gp = flat, gm = flat;
        for (std::size_t i = 0; i < gp.v.size(); ++i) {
            gp.v[i] += 1e-3 * dg.v[i];
            gm.v[i] -= 1e-3 * dg.v[i];
        }
        double rhs = (action_functional(gp, phi) - action_functional(gm, phi)) / 2e-3;
        double scale = std::abs(action_functional(flat, phi)) + 1;
        CHECK(std::abs(lhs) < 1e-10 * scale);
        CHECK(std::abs(rhs) < 1e-10 * scale);
    }
}

TEST_CASE("equivariance of the equation-of-motion density") {
    auto gg = random_metric(101, 2);
    auto pg = random_scalar(102, 2);
    SUBCASE("identity map gives zero residual") {
        TorusMesh m(2, 16);
        auto g = sample_metric(m, gg);
        auto phi = sample_scalar(m, pg);
        auto f = Diffeomorphism::identity(m);
        DiffeoTable t(f, m);
        auto lhs = pullback_density(t, el_form(g, phi));
        auto rhs = el_form(pullback_metric(t, g), pullback_scalar(t, phi));
        double err = 0;
        for (std::size_t id = 0; id < m.nodes(); ++id)
            err = std::max(err, std::abs(lhs.at(id) - rhs.at(id)));
        CHECK(err < 1e-9);
    }
    SUBCASE("whole-node translation on the flat metric is exact") {
        TorusMesh m(2, 16);
        MetricField flat(m);
        auto phi = sample_scalar(m, pg);
        MeshVectorField disp(m);
        for (std::size_t id = 0; id < m.nodes(); ++id) disp.at(id, 0) = 2 * m.h();
        Diffeomorphism f(m, disp);
        DiffeoTable t(f, m);
        auto lhs = pullback_density(t, el_form(flat, phi));
        auto rhs = el_form(pullback_metric(t, flat), pullback_scalar(t, phi));
        double err = 0;
        for (std::size_t id = 0; id < m.nodes(); ++id)
            err = std::max(err, std::abs(lhs.at(id) - rhs.at(id)));
        CHECK(err < 1e-9);
    }
    SUBCASE("smooth map: second-order decay, free and interacting") {
        // the residual floor at fixed N is linear in the displacement
        // amplitude, so the map has to stay close to the identity for the
        // relative tolerance to be reachable at N = 128
        auto sg = random_metric(101, 2, 0.05, 1);
        auto sp = random_scalar(202, 2, 1.0, 1);
        auto disp = random_vector(303, 2, 0.002, 1);
        auto free_rep = check_scalar_equivariance(sg, sp, disp, {32, 64, 128});
        CHECK(free_rep.passed);
        CHECK(free_rep.order == doctest::Approx(2.0).epsilon(0.2));
        PotentialSpec quartic{{{4, 1.3}}};
        auto int_rep = check_scalar_equivariance(sg, sp, disp, {32, 64, 128}, quartic);
        CHECK(int_rep.passed);
        CHECK(int_rep.name == "interacting_equivariance");
        // lambda = 0 degenerates to the free check
        auto zero_rep = check_scalar_equivariance(sg, sp, disp, {32, 64, 128}, PotentialSpec{});
        for (std::size_t i = 0; i < free_rep.residuals.size(); ++i)
            CHECK(free_rep.residuals[i] == zero_rep.residuals[i]);
    }
}

TEST_CASE("infinitesimal covariance: sum of four O(1) terms cancels at second order") {
    SUBCASE("zero vector field kills every term") {
        TorusMesh m(2, 16);
        auto four = infinitesimal_covariance_terms(sample_metric(m, random_metric(111, 2)),
                                                   sample_scalar(m, random_scalar(112, 2)),
                                                   MeshVectorField(m));
        CHECK(four.max_term() == 0.0);
    }
    SUBCASE("random smooth data") {
        auto rep = check_infinitesimal_covariance(random_metric(113, 2), random_scalar(114, 2),
                                                  random_vector(115, 2), {16, 32, 64});
        CHECK(rep.passed);
        CHECK(rep.scale > 0.05);  // the individual summands are genuinely O(1)
    }
}

TEST_CASE("off-shell conservation pairing") {
    SUBCASE("Killing field on the flat metric: metric side vanishes") {
        TorusMesh m(2, 32);
        MetricField flat(m);
        auto phi = sample_scalar(m, random_scalar(121, 2));
        MeshVectorField constV(m);
        for (std::size_t id = 0; id < m.nodes(); ++id) constV.at(id, 0) = 1.1;
        double lhs = pair_raised_tensor(
            flat, raise_perturbation(flat, lie_derivative_metric(constV, flat)),
            stress_energy_variational(flat, phi));
        CHECK(std::abs(lhs) < 1e-12);
    }
    SUBCASE("random data: both sides agree with constant 1 at second order") {
        auto rep = noether_divergence_identity(random_metric(122, 2, 0.05, 1),
                                               random_scalar(123, 2, 1.0, 1),
                                               random_vector(124, 2, 0.3, 1), {16, 32, 64});
        CHECK(rep.passed);
        double lhs = rep.details["metric_side"].back().get<double>();
        double rhs = rep.details["equation_of_motion_side"].back().get<double>();
        CHECK(std::abs(lhs) > 1e-3);  // the agreement is not vacuous
        CHECK(lhs == doctest::Approx(rhs).epsilon(0.05));
    }
}
