#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <gencov/ce.hpp>

using namespace gencov;

namespace {

// Independent fixed-point oracle for planar rotation invariants: the exact
// rational rotation (3/5, 4/5) has infinite order, so the fixed space of the
// averaged substitution operator on truncated polynomials is exactly the
// space of rotation-invariant truncated polynomials.
std::vector<std::vector<Rational>> rotation_average_kernel(int truncation, int num_powers) {
    std::vector<Monomial> basis;
    for (int dx = 0; dx <= truncation; ++dx)
        for (int dy = 0; dy + dx <= truncation; ++dy)
            basis.push_back(Monomial{0, {static_cast<std::uint16_t>(dx), static_cast<std::uint16_t>(dy)}});
    std::map<Monomial, std::size_t> index;
    for (std::size_t i = 0; i < basis.size(); ++i) index[basis[i]] = i;

    const Rational c(3, 5), s(4, 5);
    auto x = TruncatedGradedElement::even_gen(0, 0, 2, truncation);
    auto y = TruncatedGradedElement::even_gen(1, 0, 2, truncation);
    std::vector<TruncatedGradedElement> rot = {x * c - y * s, x * s + y * c};

    RationalMatrix avg(basis.size(), basis.size());
    for (std::size_t col = 0; col < basis.size(); ++col) {
        TruncatedGradedElement e(0, 2, truncation);
        e.add_term(basis[col], 1);
        for (int k = 0; k < num_powers; ++k) {
            e = e.substitute_even(rot);
            for (const auto& [mono, coeff] : e.terms())
                avg(index.at(mono), col) += coeff / num_powers;
        }
    }
    for (std::size_t i = 0; i < basis.size(); ++i) avg(i, i) -= 1;
    return avg.nullspace();  // coordinates in the dx-major basis above
}

// Rank of the span of a set of coefficient vectors.
std::size_t span_rank(const std::vector<std::vector<Rational>>& vectors) {
    if (vectors.empty()) return 0;
    RationalMatrix m(vectors.size(), vectors[0].size());
    for (std::size_t r = 0; r < vectors.size(); ++r)
        for (std::size_t c = 0; c < vectors[r].size(); ++c) m(r, c) = vectors[r][c];
    return m.rank();
}

std::vector<Rational> coords_of(const TruncatedGradedElement& e, const std::vector<Monomial>& basis) {
    std::map<Monomial, std::size_t> index;
    for (std::size_t i = 0; i < basis.size(); ++i) index[basis[i]] = i;
    std::vector<Rational> v(basis.size(), 0);
    for (const auto& [mono, c] : e.terms()) v.at(index.at(mono)) = c;
    return v;
}

}  // namespace

TEST_CASE("action validation catches broken inputs") {
    auto bad = examples::so3_r3(3);
    bad.structure_constants[0][1][2] = 2;  // breaks both antisymmetry uses and the Lie-map check
    CHECK_THROWS_AS(validate_action(bad), std::invalid_argument);

    auto wrong_sign = examples::so3_r3(3);
    for (auto& vf : wrong_sign.vector_fields)
        for (auto& comp : vf) comp = -comp;  // +e_i cross x fails the bracket convention
    CHECK_THROWS_AS(validate_action(wrong_sign), std::invalid_argument);

    CHECK_NOTHROW(validate_action(examples::so2_r2(4)));
    CHECK_NOTHROW(validate_action(examples::so3_r3(4)));
    CHECK_NOTHROW(validate_action(examples::trivial_action(2, 3, 2)));
}

TEST_CASE("tangent complex anchors and cohomology") {
    auto so2 = examples::so2_r2(4);
    auto tc0 = build_tangent_complex(so2, {0, 0});
    CHECK(tc0.anchor[0][0] == 0);
    CHECK(tc0.anchor[1][0] == 0);
    CHECK(cohomology_of_tangent_complex(tc0) == std::pair<int, int>(1, 2));

    auto tc1 = build_tangent_complex(so2, {1, 0});
    CHECK(tc1.anchor[0][0] == 0);
    CHECK(tc1.anchor[1][0] == -1);
    CHECK(cohomology_of_tangent_complex(tc1) == std::pair<int, int>(0, 1));

    auto so3 = examples::so3_r3(4);
    auto tc3 = build_tangent_complex(so3, {0, 0, 0});
    CHECK(cohomology_of_tangent_complex(tc3) == std::pair<int, int>(3, 3));

    auto triv = examples::trivial_action(2, 2, 4);
    auto tct = build_tangent_complex(triv, {Rational(7, 3), Rational(-1)});
    CHECK(cohomology_of_tangent_complex(tct) == std::pair<int, int>(2, 2));

    // rank-nullity at scattered points
    for (auto& p : std::vector<std::vector<Rational>>{
             {Rational(1), Rational(2), Rational(3)}, {Rational(0), Rational(1, 2), Rational(0)}}) {
        auto tc = build_tangent_complex(so3, p);
        auto [hm1, h0] = cohomology_of_tangent_complex(tc);
        RationalMatrix a(3, 3);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) a(r, c) = tc.anchor[r][c];
        CHECK(hm1 + static_cast<int>(a.rank()) == so3.dim_g);
        (void)h0;
    }
}

TEST_CASE("cochain differential on generators") {
    auto so2 = examples::so2_r2(4);
    Derivation d = ce_derivation(so2, 4);
    const int m = 1, n = 2, tr = 4;
    auto a = TruncatedGradedElement::odd_gen(0, m, n, tr);
    auto x = TruncatedGradedElement::even_gen(0, m, n, tr);
    auto y = TruncatedGradedElement::even_gen(1, m, n, tr);
    CHECK(d.apply(a).is_zero());       // abelian: no quadratic ghost term
    CHECK(d.apply(x) == a * y);        // image is alpha tensor (field applied to x)
    CHECK(d.apply(y) == -(a * x));
    CHECK(d.apply(x * x + y * y).is_zero());  // the radius is invariant
}

TEST_CASE("CE differentials square to zero exactly") {
    SUBCASE("planar rotations, truncation 4") {
        auto two = build_ce_complex(examples::so2_r2(4), 4, 2);
        CHECK((two[1].differential * two[0].differential).is_zero());
    }
    SUBCASE("rotations of 3-space, truncation 3, all degrees") {
        auto levels = build_ce_complex(examples::so3_r3(3), 3, 3);
        REQUIRE(levels.size() == 4);
        for (std::size_t p = 0; p + 2 < levels.size(); ++p)
            CHECK((levels[p + 1].differential * levels[p].differential).is_zero());
    }
    SUBCASE("abelian action gives zero ghost differential") {
        auto levels = build_ce_complex(examples::trivial_action(2, 1, 2), 2, 2);
        CHECK(levels[0].differential.is_zero());
        CHECK(levels[1].differential.is_zero());
    }
}

TEST_CASE("rotation invariants at truncation 4 match the averaging oracle") {
    const int tr = 4;
    auto inv = invariants_h0(examples::so2_r2(tr), tr);
    REQUIRE(inv.size() == 3);

    // expected basis {1, x^2+y^2, (x^2+y^2)^2} up to change of basis
    auto x = TruncatedGradedElement::even_gen(0, 1, 2, tr);
    auto y = TruncatedGradedElement::even_gen(1, 1, 2, tr);
    auto r2 = x * x + y * y;
    std::vector<TruncatedGradedElement> expected = {TruncatedGradedElement::one(1, 2, tr), r2,
                                                    r2 * r2};

    std::vector<Monomial> basis;
    for (int dx = 0; dx <= tr; ++dx)
        for (int dy = 0; dy + dx <= tr; ++dy)
            basis.push_back(Monomial{0, {static_cast<std::uint16_t>(dx), static_cast<std::uint16_t>(dy)}});

    auto strip_odd = [&](const TruncatedGradedElement& e) {
        TruncatedGradedElement out(0, 2, tr);
        for (const auto& [mono, c] : e.terms()) out.add_term(Monomial{0, mono.even_exp}, c);
        return out;
    };

    std::vector<std::vector<Rational>> inv_coords, exp_coords;
    for (const auto& e : inv) inv_coords.push_back(coords_of(strip_odd(e), basis));
    for (const auto& e : expected) exp_coords.push_back(coords_of(strip_odd(e), basis));
    CHECK(span_rank(inv_coords) == 3);
    auto both = inv_coords;
    both.insert(both.end(), exp_coords.begin(), exp_coords.end());
    CHECK(span_rank(both) == 3);  // same span

    auto oracle = rotation_average_kernel(tr, 8);
    CHECK(oracle.size() == 3);
    auto with_oracle = inv_coords;
    with_oracle.insert(with_oracle.end(), oracle.begin(), oracle.end());
    CHECK(span_rank(with_oracle) == 3);
}

TEST_CASE("trivial action invariants are everything") {
    auto inv = invariants_h0(examples::trivial_action(1, 1, 2), 2);
    CHECK(inv.size() == 3);  // 1, x, x^2
}

TEST_CASE("recentered rotation action") {
    for (auto [tr, expect] : std::vector<std::pair<int, std::size_t>>{{1, 1}, {2, 2}, {4, 3}}) {
        auto shifted = recenter_action(examples::so2_r2(tr), {Rational(1), Rational(0)});
        CHECK_NOTHROW(validate_action(shifted));
        auto inv = invariants_h0(shifted, tr);
        CHECK(inv.size() == expect);
    }
    // the shifted radius function 2x + x^2 + y^2 is invariant at truncation 2
    auto shifted = recenter_action(examples::so2_r2(2), {Rational(1), Rational(0)});
    Derivation d = ce_derivation(shifted, 2);
    auto x = TruncatedGradedElement::even_gen(0, 1, 2, 2);
    auto y = TruncatedGradedElement::even_gen(1, 1, 2, 2);
    CHECK(d.apply(x * Rational(2) + x * x + y * y).is_zero());
}

TEST_CASE("module coefficients") {
    SUBCASE("zero-dimensional module reduces to the plain complex") {
        auto plain = build_ce_complex(examples::so2_r2(3), 3, 2);
        std::vector<std::vector<std::vector<Rational>>> empty_rep(1);
        auto with_mod = equivariant_observables_toy(examples::so2_r2(3), empty_rep, 3, 2);
        // a 0x0 matrix for the single generator
        REQUIRE(plain.size() == with_mod.size());
        for (std::size_t p = 0; p < plain.size(); ++p) {
            CHECK(plain[p].basis.size() == with_mod[p].basis.size());
        }
        CHECK((with_mod[1].differential * with_mod[0].differential).is_zero());
    }
    SUBCASE("nilpotent Jordan block: invariants are polynomials in the first coordinate") {
        auto base = examples::trivial_action(1, 0, 3);
        std::vector<std::vector<std::vector<Rational>>> rep = {{{0, 1}, {0, 0}}};
        auto levels = equivariant_observables_toy(base, rep, 3, 1);
        auto null = levels[0].differential.nullspace();
        CHECK(null.size() == 4);  // 1, z1, z1^2, z1^3
        // every kernel vector is supported on pure powers of the first coordinate
        for (const auto& v : null)
            for (std::size_t c = 0; c < v.size(); ++c)
                if (v[c] != 0) CHECK(levels[0].basis[c].even_exp[1] == 0);
    }
    SUBCASE("rotation base action tensor defining representation, d squared = 0") {
        std::vector<std::vector<std::vector<Rational>>> rep = {{{0, -1}, {1, 0}}};
        auto levels = equivariant_observables_toy(examples::so2_r2(3), rep, 3, 2);
        CHECK((levels[1].differential * levels[0].differential).is_zero());
        auto bad = rep;
        bad[0][0][0] = 1;  // not antisymmetric but still a rep of the abelian algebra
        CHECK_NOTHROW(equivariant_observables_toy(examples::so2_r2(3), bad, 2, 1));
        // a genuine representation failure needs a nonabelian algebra
        std::vector<std::vector<std::vector<Rational>>> broken(3,
            std::vector<std::vector<Rational>>(2, std::vector<Rational>(2, 0)));
        broken[0][0][1] = 1;  // [M2,M3]=0 but c_23^1 M1 is nonzero
        CHECK_THROWS_AS(equivariant_observables_toy(examples::so3_r3(2), broken, 2, 1),
                        std::invalid_argument);
    }
}

TEST_CASE("basis cap guard") {
    CHECK_THROWS_AS(build_ce_complex(examples::so3_r3(6), 6, 2, 10), std::length_error);
}
