#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <gencov/yang_mills.hpp>

using namespace gencov;

namespace {

LieAlgValuedForm zero_like(const TorusMesh& m, int p, LieAlgebra a) {
    return LieAlgValuedForm(m, p, a);
}

}  // namespace

TEST_CASE("exterior derivative") {
    TorusMesh m(2, 64);
    SUBCASE("constant 0-form is closed") {
        LieAlgValuedForm c(m, 0, LieAlgebra::su2);
        for (std::size_t id = 0; id < m.nodes(); ++id)
            for (int a = 0; a < 3; ++a) c.at(id, 0, a) = 1.0 + a;
        CHECK(exterior_d(c).max_abs() == 0.0);
    }
    SUBCASE("plane wave 0-form differentiates along its axis") {
        LieAlgValuedForm w(m, 0, LieAlgebra::u1);
        for (std::size_t id = 0; id < m.nodes(); ++id)
            w.at(id, 0, 0) = std::sin(2 * M_PI * m.point(id)[0]);
        auto dw = exterior_d(w);
        int dx = dw.combo_index({0});
        int dy = dw.combo_index({1});
        double err = 0, erry = 0;
        for (std::size_t id = 0; id < m.nodes(); ++id) {
            double want = 2 * M_PI * std::cos(2 * M_PI * m.point(id)[0]);
            err = std::max(err, std::abs(dw.at(id, dx, 0) - want));
            erry = std::max(erry, std::abs(dw.at(id, dy, 0)));
        }
        CHECK(err < 0.02);
        CHECK(erry == 0.0);
    }
    SUBCASE("d of d vanishes because centered stencils commute") {
        for (int N : {16, 32}) {
            TorusMesh mm(2, N);
            auto w = sample_form(mm, random_form(7, 2, 0, LieAlgebra::su2));
            CHECK(exterior_d(exterior_d(w)).max_abs() < 1e-11);
        }
        TorusMesh m3(3, 16);
        auto w3 = sample_form(m3, random_form(8, 3, 1, LieAlgebra::su2));
        CHECK(exterior_d(exterior_d(w3)).max_abs() < 1e-11);
    }
    SUBCASE("top degree has no differential") {
        CHECK_THROWS_AS(exterior_d(zero_like(m, 2, LieAlgebra::u1)), std::invalid_argument);
    }
}

TEST_CASE("wedge with bracketed coefficients") {
    TorusMesh m(2, 16);
    SUBCASE("abelian coefficients kill the wedge") {
        auto A = sample_form(m, random_form(11, 2, 1, LieAlgebra::u1));
        auto w = sample_form(m, random_form(12, 2, 0, LieAlgebra::u1));
        CHECK(wedge_bracket(A, w).max_abs() == 0.0);
    }
    SUBCASE("on 0-forms it is the pointwise bracket") {
        auto A = sample_form(m, random_form(13, 2, 1, LieAlgebra::su2));
        auto al = sample_form(m, random_form(14, 2, 0, LieAlgebra::su2));
        auto out = wedge_bracket(A, al);
        std::size_t id = m.idx({3, 5, 0});
        for (int mu = 0; mu < 2; ++mu) {
            double x[3], y[3], br[3];
            for (int a = 0; a < 3; ++a) {
                x[a] = A.at(id, mu, a);
                y[a] = al.at(id, 0, a);
            }
            bracket(LieAlgebra::su2, x, y, br);
            for (int a = 0; a < 3; ++a)
                CHECK(out.at(id, out.combo_index({mu}), a) == doctest::Approx(br[a]).epsilon(1e-14));
        }
    }
    SUBCASE("bilinear in both arguments") {
        auto A = sample_form(m, random_form(15, 2, 1, LieAlgebra::su2));
        auto B = sample_form(m, random_form(16, 2, 1, LieAlgebra::su2));
        auto w = sample_form(m, random_form(17, 2, 1, LieAlgebra::su2));
        LieAlgValuedForm combo(m, 1, LieAlgebra::su2);
        for (std::size_t i = 0; i < combo.data.v.size(); ++i)
            combo.data.v[i] = 3.0 * A.data.v[i] - 2.0 * B.data.v[i];
        auto lhs = wedge_bracket(combo, w);
        auto a1 = wedge_bracket(A, w);
        auto b1 = wedge_bracket(B, w);
        double err = 0;
        for (std::size_t i = 0; i < lhs.data.v.size(); ++i)
            err = std::max(err, std::abs(lhs.data.v[i] - (3.0 * a1.data.v[i] - 2.0 * b1.data.v[i])));
        CHECK(err < 1e-12);
    }
    SUBCASE("degree overflow throws") {
        auto A = sample_form(m, random_form(18, 2, 1, LieAlgebra::su2));
        auto top = sample_form(m, random_form(19, 2, 2, LieAlgebra::su2));
        CHECK_THROWS_AS(wedge_bracket(A, top), std::invalid_argument);
    }
}

TEST_CASE("pointwise star") {
    TorusMesh m(2, 16);
    SUBCASE("flat two-torus rotates the coordinate 1-forms") {
        MetricField flat(m);
        LieAlgValuedForm dx(m, 1, LieAlgebra::u1), dy(m, 1, LieAlgebra::u1);
        for (std::size_t id = 0; id < m.nodes(); ++id) {
            dx.at(id, dx.combo_index({0}), 0) = 1.0;
            dy.at(id, dy.combo_index({1}), 0) = 1.0;
        }
        auto sdx = hodge_star(flat, dx);
        auto sdy = hodge_star(flat, dy);
        for (std::size_t id = 0; id < m.nodes(); ++id) {
            CHECK(sdx.at(id, sdx.combo_index({1}), 0) == doctest::Approx(1.0));
            CHECK(sdx.at(id, sdx.combo_index({0}), 0) == doctest::Approx(0.0));
            CHECK(sdy.at(id, sdy.combo_index({0}), 0) == doctest::Approx(-1.0));
        }
    }
    SUBCASE("anisotropic diagonal metric scales the star") {
        MetricField g(m);
        for (std::size_t id = 0; id < m.nodes(); ++id) g.at_sym(id, 0, 0) = 4.0;
        LieAlgValuedForm dx(m, 1, LieAlgebra::u1);
        for (std::size_t id = 0; id < m.nodes(); ++id) dx.at(id, dx.combo_index({0}), 0) = 1.0;
        auto s = hodge_star(g, dx);
        for (std::size_t id = 0; id < m.nodes(); ++id)
            CHECK(s.at(id, s.combo_index({1}), 0) == doctest::Approx(0.5));
    }
    SUBCASE("double star is a sign, pointwise exact") {
        auto g = sample_metric(m, random_metric(21, 2));
        for (int p : {0, 1, 2}) {
            auto w = sample_form(m, random_form(22 + p, 2, p, LieAlgebra::su2));
            auto ss = hodge_star(g, hodge_star(g, w));
            double sign = (p * (2 - p)) % 2 == 0 ? 1.0 : -1.0;
            double err = 0;
            for (std::size_t i = 0; i < w.data.v.size(); ++i)
                err = std::max(err, std::abs(ss.data.v[i] - sign * w.data.v[i]));
            CHECK(err < 1e-12);
        }
        TorusMesh m3(3, 8);
        auto g3 = sample_metric(m3, random_metric(31, 3));
        auto w3 = sample_form(m3, random_form(32, 3, 1, LieAlgebra::u1));
        auto ss3 = hodge_star(g3, hodge_star(g3, w3));
        double err3 = 0;
        for (std::size_t i = 0; i < w3.data.v.size(); ++i)
            err3 = std::max(err3, std::abs(ss3.data.v[i] - w3.data.v[i]));
        CHECK(err3 < 1e-12);
    }
    SUBCASE("star of the constant function is the volume form") {
        auto g = sample_metric(m, random_metric(33, 2));
        LieAlgValuedForm one(m, 0, LieAlgebra::u1);
        for (std::size_t id = 0; id < m.nodes(); ++id) one.at(id, 0, 0) = 1.0;
        auto vol = hodge_star(g, one);
        auto sq = volume_factor(g);
        double err = 0;
        for (std::size_t id = 0; id < m.nodes(); ++id)
            err = std::max(err, std::abs(vol.at(id, 0, 0) - sq.at(id)));
        CHECK(err < 1e-13);
    }
}

TEST_CASE("middle operator of the four-term complex") {
    TorusMesh m(2, 16);
    auto g = sample_metric(m, random_metric(41, 2));
    auto w = sample_form(m, random_form(42, 2, 1, LieAlgebra::su2));
    SUBCASE("vanishing connection leaves the free operator") {
        LieAlgValuedForm A0(m, 1, LieAlgebra::su2);
        auto out = ym_middle_operator(g, A0, w);
        auto want = exterior_d(hodge_star(g, exterior_d(w)));
        double err = 0;
        for (std::size_t i = 0; i < out.data.v.size(); ++i)
            err = std::max(err, std::abs(out.data.v[i] - want.data.v[i]));
        CHECK(err == 0.0);
    }
    SUBCASE("abelian coefficients degenerate to the free operator") {
        auto A = sample_form(m, random_form(43, 2, 1, LieAlgebra::u1));
        auto wu = sample_form(m, random_form(44, 2, 1, LieAlgebra::u1));
        auto out = ym_middle_operator(g, A, wu);
        auto want = exterior_d(hodge_star(g, exterior_d(wu)));
        double err = 0;
        for (std::size_t i = 0; i < out.data.v.size(); ++i)
            err = std::max(err, std::abs(out.data.v[i] - want.data.v[i]));
        CHECK(err == 0.0);
    }
    SUBCASE("linear in the argument") {
        auto A = sample_form(m, random_form(45, 2, 1, LieAlgebra::su2));
        auto w2 = sample_form(m, random_form(46, 2, 1, LieAlgebra::su2));
        LieAlgValuedForm combo(m, 1, LieAlgebra::su2);
        for (std::size_t i = 0; i < combo.data.v.size(); ++i)
            combo.data.v[i] = 1.5 * w.data.v[i] + 0.5 * w2.data.v[i];
        auto lhs = ym_middle_operator(g, A, combo);
        auto r1 = ym_middle_operator(g, A, w);
        auto r2 = ym_middle_operator(g, A, w2);
        double err = 0;
        for (std::size_t i = 0; i < lhs.data.v.size(); ++i)
            err = std::max(err,
                           std::abs(lhs.data.v[i] - (1.5 * r1.data.v[i] + 0.5 * r2.data.v[i])));
        CHECK(err < 1e-10);
    }
    SUBCASE("abelian free case matches the scalar flux operator") {
        auto phi = sample_scalar(m, random_scalar(47, 2));
        LieAlgValuedForm phi0(m, 0, LieAlgebra::u1);
        for (std::size_t id = 0; id < m.nodes(); ++id) phi0.at(id, 0, 0) = phi.at(id);
        auto top = exterior_d(hodge_star(g, exterior_d(phi0)));
        auto q = bv_differential(g, phi);
        double err = 0;
        for (std::size_t id = 0; id < m.nodes(); ++id)
            err = std::max(err, std::abs(top.at(id, 0, 0) - q.at(id)));
        CHECK(err < 1e-11);
    }
}

TEST_CASE("curvature and action") {
    TorusMesh m(2, 32);
    MetricField flat(m);
    SUBCASE("constant abelian connection is flat") {
        LieAlgValuedForm A(m, 1, LieAlgebra::u1);
        for (std::size_t id = 0; id < m.nodes(); ++id) A.at(id, A.combo_index({0}), 0) = 0.8;
        CHECK(curvature(A).max_abs() == 0.0);
        CHECK(ym_action(flat, A) == 0.0);
    }
    SUBCASE("abelian plane wave has the classical action value") {
        LieAlgValuedForm A(m, 1, LieAlgebra::u1);
        for (std::size_t id = 0; id < m.nodes(); ++id)
            A.at(id, A.combo_index({1}), 0) = std::sin(2 * M_PI * m.point(id)[0]);
        double S = ym_action(flat, A);
        CHECK(S == doctest::Approx(M_PI * M_PI).epsilon(0.05));
    }
    SUBCASE("the pairing is positive definite") {
        auto g = sample_metric(m, random_metric(51, 2));
        auto w = sample_form(m, random_form(52, 2, 1, LieAlgebra::su2));
        CHECK(form_pairing(g, w, w) > 0.0);
        auto F = curvature(sample_form(m, random_form(53, 2, 1, LieAlgebra::su2)));
        CHECK(0.5 * form_pairing(g, F, F) >= 0.0);
    }
}

TEST_CASE("form pullback") {
    TorusMesh m(2, 16);
    SUBCASE("identity map is exact") {
        auto w = sample_form(m, random_form(61, 2, 1, LieAlgebra::su2));
        auto back = pullback_form(Diffeomorphism::identity(m), w);
        double err = 0;
        for (std::size_t i = 0; i < w.data.v.size(); ++i)
            err = std::max(err, std::abs(back.data.v[i] - w.data.v[i]));
        CHECK(err < 1e-10);
    }
    SUBCASE("whole-node translation is exact") {
        auto w = sample_form(m, random_form(62, 2, 2, LieAlgebra::su2));
        MeshVectorField disp(m);
        for (std::size_t id = 0; id < m.nodes(); ++id) disp.at(id, 1) = 3 * m.h();
        auto back = pullback_form(Diffeomorphism(m, disp), w);
        double err = 0;
        for (std::size_t id = 0; id < m.nodes(); ++id) {
            auto I = m.coords(id);
            I[1] = (I[1] + 3) % m.N;
            std::size_t src = m.idx(I);
            for (int c = 0; c < w.data.ncomp; ++c)
                err = std::max(err, std::abs(back.data.at(id, c) - w.data.at(src, c)));
        }
        CHECK(err < 1e-9);
    }
    SUBCASE("commutes with the bracketed wedge on band-limited data") {
        TorusMesh fine(2, 32);
        auto A = sample_form(fine, random_form(63, 2, 1, LieAlgebra::su2, 1.0, 1));
        auto w = sample_form(fine, random_form(64, 2, 1, LieAlgebra::su2, 1.0, 1));
        auto f = make_diffeomorphism(fine, random_vector(65, 2, 0.05, 1));
        DiffeoTable t(f, fine);
        auto lhs = pullback_form(t, wedge_bracket(A, w));
        auto rhs = wedge_bracket(pullback_form(t, A), pullback_form(t, w));
        double err = 0;
        for (std::size_t i = 0; i < lhs.data.v.size(); ++i)
            err = std::max(err, std::abs(lhs.data.v[i] - rhs.data.v[i]));
        CHECK(err < 1e-9);
    }
}

TEST_CASE("equivariance of the four-term complex") {
    auto gg = random_metric(71, 2, 0.08, 1);
    auto Ag = random_form(72, 2, 1, LieAlgebra::su2, 0.8, 1);
    auto a0 = random_form(73, 2, 0, LieAlgebra::su2, 1.0, 1);
    auto w1 = random_form(74, 2, 1, LieAlgebra::su2, 1.0, 1);
    auto b1 = random_form(75, 2, 1, LieAlgebra::su2, 1.0, 1);
    SUBCASE("identity map gives roundoff residuals") {
        AnalyticVector none;
        none.comp.resize(2);
        auto reps = check_ym_equivariance(gg, Ag, none, a0, w1, b1, {16});
        for (const auto& r : reps) {
            CHECK(r.residuals.back() < 1e-9 * std::max(r.scale, 1.0));
        }
    }
    SUBCASE("smooth map: all three squares refine at second order") {
        auto reps = check_ym_equivariance(gg, Ag, random_vector(76, 2, 0.01, 1), a0, w1, b1,
                                          {16, 32, 64});
        for (const auto& r : reps) {
            INFO(r.name);
            CHECK(r.passed);
            CHECK(r.order == doctest::Approx(2.0).epsilon(0.2));
        }
    }
}
