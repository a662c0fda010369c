#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "support.hpp"

#include <numbers>

#include "dspec/forms.hpp"
#include "dspec/scenarios.hpp"

using namespace dspec;
using namespace testing;

namespace {

constexpr double kPi = std::numbers::pi;

// Independent evaluation: composite Simpson quadrature of |f'|^2 + q|f|^2 on each smooth piece plus the jump sum.
double quadrature_form(const OperatorSpec& s, const PiecewiseFunction& f, double* norm2 = nullptr)
{
    const int n = 2000;
    double total = 0, mass = 0;
    for (const Segment& seg : f.segments) {
        for (const Piece& pc : s.pieces()) {
            double lo = std::max(seg.a, pc.a), hi = std::min(seg.b, pc.b);
            if (!(hi > lo))
                continue;
            double h = (hi - lo) / n;
            for (int i = 0; i <= n; ++i) {
                double x = lo + i * h;
                double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
                double v = seg.value(x), d = seg.deriv(x);
                total += w * h / 3 * (d * d + (pc.c0 + pc.c1 * x) * v * v);
                mass += w * h / 3 * v * v;
            }
        }
    }
    auto value_at = [&](double x, bool right) {
        for (const Segment& seg : f.segments) {
            if (right && std::abs(seg.a - x) < 1e-12)
                return seg.value(seg.a);
            if (!right && std::abs(seg.b - x) < 1e-12)
                return seg.value(seg.b);
        }
        return 0.0;
    };
    for (int k = 1; k <= s.K(); ++k) {
        if (std::isinf(s.beta(k)))
            continue;
        double jump = value_at(s.x(k), true) - value_at(s.x(k), false);
        total += jump * jump / s.beta(k);
    }
    if (norm2)
        *norm2 = mass;
    return total;
}

OperatorSpec unit_cells(const json& betas, const json& pieces = nullptr)
{
    std::vector<double> pts;
    for (std::size_t i = 1; i <= betas.size(); ++i)
        pts.push_back(static_cast<double>(i));
    return spec_from_config(explicit_config(pts, betas, pieces));
}

}  // namespace

TEST_CASE("tent test function")
{
    OperatorSpec s = unit_cells({2, 1, 1});
    TestFunctionParams p;
    p.k = 1;
    p.width = 1;
    PiecewiseFunction f = make_test_function(s, "tent", p);
    FormBreakdown b = form_energy(s, f);
    CHECK(b.dirichlet == doctest::Approx(1).epsilon(1e-14));
    CHECK(b.norm2 == doctest::Approx(1.0 / 3).epsilon(1e-14));
    CHECK(b.jump_plus == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(b.jump_minus == 0);
    CHECK(b.potential == 0);
}

TEST_CASE("step function jump terms")
{
    OperatorSpec s = unit_cells({2, 1, -4, 1});
    TestFunctionParams p;
    p.k = 1;
    p.j = 3;
    PiecewiseFunction f = make_test_function(s, "step", p);
    FormBreakdown b = form_energy(s, f);
    CHECK(b.dirichlet == 0);
    CHECK(b.total == doctest::Approx(1.0 / 2 + 1.0 / -4).epsilon(1e-15));
    CHECK(b.jump_plus == doctest::Approx(0.5));
    CHECK(b.jump_minus == doctest::Approx(0.25));

    // step on [x_1, x_2]: jump +1 at x_1 and -1 at x_2
    p.j = 2;
    PiecewiseFunction g = make_test_function(s, "step", p);
    CHECK(g.traces[0].f_plus - g.traces[0].f_minus == 1);
    CHECK(g.traces[1].f_plus - g.traces[1].f_minus == -1);
    CHECK(g.traces[2].f_plus - g.traces[2].f_minus == 0);
}

TEST_CASE("smooth function inside one cell has no jump energy")
{
    OperatorSpec s = unit_cells({1, 1}, json::array({piece(0, 2, 0)}));
    TestFunctionParams p;
    Segment seg;
    seg.a = 0.25;
    seg.b = 0.75;
    seg.c = {0, 0.5, -1, 0};  // t (0.5 - t)
    p.segments = {seg};
    PiecewiseFunction f = make_test_function(s, "custom", p);
    FormBreakdown b = form_energy(s, f);
    CHECK(b.jump_plus == 0);
    CHECK(b.jump_minus == 0);
    CHECK(b.total == doctest::Approx(std::pow(0.5, 3) / 3).epsilon(1e-14));
}

TEST_CASE("indicator closed form")
{
    OperatorSpec a = unit_cells({1, 1, 1});
    CHECK(indicator_form_value(a, 2) == 2);

    OperatorSpec b = spec_from_config(explicit_config({1, 3}, {"inf", -1}, json::array({piece(0, 3, 3)})));
    CHECK(indicator_form_value(b, 2) == doctest::Approx(3 - 0.5).epsilon(1e-15));

    OperatorSpec c = spec_from_config(remark_2_7_config(40));
    for (int j = 1; j <= 20; ++j)
        CHECK(indicator_form_value(c, 2 * j) == doctest::Approx(-j).epsilon(1e-12));

    CHECK(error_code([&] { indicator_form_value(a, 4); }) == "IndexOutOfRange");
}

TEST_CASE("indicator test function")
{
    OperatorSpec s = spec_from_config(explicit_config({1, 2, 6}, {1, 1, 1}));
    TestFunctionParams p;
    p.k = 3;
    PiecewiseFunction f = make_test_function(s, "indicator", p);
    REQUIRE(f.segments.size() == 1);
    CHECK(f.segments[0].a == 2);
    CHECK(f.segments[0].b == 6);
    CHECK(f.segments[0].c[0] == 0.5);
    CHECK(form_energy(s, f).norm2 == doctest::Approx(1).epsilon(1e-15));
}

TEST_CASE("ramp function norms")
{
    json cfg = {{"partition", {{"generator", {{"kind", "sum_power"}, {"exponent", 0.5}, {"count", 200}}}}},
                {"strengths", {{"generator", {{"kind", "constant"}, {"value", -1.0}}}}}};
    OperatorSpec s = spec_from_config(cfg);
    TestFunctionParams p;
    double n2 = 0, d2 = 0;
    for (int k = 1; k <= 200; ++k) {
        double a = s.d(k);
        p.a.push_back(a);
        // a_k^2 (1/d_k^2) int_0^{d_k} t^2 dt = a_k^2 d_k / 3
        n2 += a * a * s.d(k) / 3;
        d2 += a * a / s.d(k);
    }
    PiecewiseFunction f = make_test_function(s, "ramp", p);
    FormBreakdown b = form_energy(s, f);
    CHECK(b.norm2 == doctest::Approx(n2).epsilon(1e-12));
    CHECK(b.dirichlet == doctest::Approx(d2).epsilon(1e-12));
}

TEST_CASE("Rayleigh quotients")
{
    OperatorSpec s = unit_cells({2, -3, 5});
    for (int k = 1; k <= 3; ++k) {
        TestFunctionParams p;
        p.k = k;
        CHECK(rayleigh_quotient(s, make_test_function(s, "indicator", p)) ==
              doctest::Approx(indicator_form_value(s, k)).epsilon(1e-14));
    }

    // cos(pi x) on one unit cell, interpolated by Hermite cubics
    OperatorSpec one = unit_cells({"inf"});
    std::vector<Segment> segs;
    const int m = 400;
    for (int i = 0; i < m; ++i) {
        double a = double(i) / m, b = double(i + 1) / m;
        segs.push_back(hermite(a, b, std::cos(kPi * a), -kPi * std::sin(kPi * a), std::cos(kPi * b),
                               -kPi * std::sin(kPi * b)));
    }
    CHECK(rayleigh_quotient(one, make_function(one, segs)) == doctest::Approx(kPi * kPi).epsilon(1e-9));

    CHECK(error_code([&] { rayleigh_quotient(s, make_function(s, {})); }) == "ZeroFunction");
    CHECK(error_code([&] { make_test_function(s, "gauss", {}); }) == "UnsupportedKind");
}

TEST_CASE("form energy matches independent quadrature on random cubics")
{
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 30; ++trial) {
        json betas = json::array(), pieces = json::array();
        std::vector<double> pts;
        double x = 0;
        for (int k = 0; k < 3; ++k) {
            double len = uniform(rng, 0.5, 2);
            double mid = x + len * uniform(rng, 0.2, 0.8);
            pieces.push_back(piece(x, mid, uniform(rng, -5, 5), uniform(rng, -2, 2)));
            pieces.push_back(piece(mid, x + len, uniform(rng, -5, 5)));
            pts.push_back(x += len);
            betas.push_back(uniform(rng, 0.2, 3) * (rng() % 2 ? 1 : -1));
        }
        OperatorSpec s = spec_from_config(explicit_config(pts, betas, pieces));
        // arbitrary cubics per cell (no interface conditions needed for the form)
        std::vector<Segment> segs;
        for (int k = 1; k <= 3; ++k)
            segs.push_back(hermite(s.x(k - 1), s.x(k), uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, -2, 2),
                                   uniform(rng, -2, 2)));
        PiecewiseFunction f = make_function(s, segs);
        double mass = 0;
        double oracle = quadrature_form(s, f, &mass);
        FormBreakdown b = form_energy(s, f);
        CHECK(b.total == doctest::Approx(oracle).epsilon(1e-6));
        CHECK(b.norm2 == doctest::Approx(mass).epsilon(1e-6));
    }
}

TEST_CASE("operator and form agree on the operator domain")
{
    OperatorSpec s = unit_cells({1, 1});
    // C^1 bump inside cell 1
    std::vector<Segment> bump{hermite(0.25, 0.5, 0, 0, 1, 0), hermite(0.5, 0.75, 1, 0, 0, 0)};
    CHECK(operator_form_identity_check(s, make_function(s, bump)) <= 1e-14);

    // one interface with beta = 2: f' = 1 on both sides, jump 2
    OperatorSpec t = unit_cells({2, "inf"});
    std::vector<Segment> segs{hermite(0, 1, 0.3, 0, -0.4, 1), hermite(1, 2, 1.6, 1, 0.2, 0)};
    PiecewiseFunction f = make_function(t, segs);
    double form = form_energy(t, f).total;
    CHECK(operator_form_identity_check(t, f) <= 1e-9 * (1 + std::abs(form)));

    // derivative mismatch at x_1
    std::vector<Segment> bad{hermite(0, 1, 0.3, 0, -0.4, 1), hermite(1, 2, 1.6, 2, 0.2, 0)};
    CHECK(error_code([&] { operator_form_identity_check(t, make_function(t, bad)); }) == "DomainViolation");
    // f'(0) != 0
    std::vector<Segment> bad0{hermite(0, 1, 0.3, 1, -0.4, 1), hermite(1, 2, 1.6, 1, 0.2, 0)};
    CHECK(error_code([&] { operator_form_identity_check(t, make_function(t, bad0)); }) == "DomainViolation");
}

TEST_CASE("a jump where beta = 0 is rejected")
{
    OperatorSpec s = unit_cells({0, 1});
    TestFunctionParams p;
    p.k = 1;
    CHECK(error_code([&] { form_energy(s, make_test_function(s, "indicator", p)); }) == "JumpAtContinuityPoint");
}

TEST_CASE("property: random domain functions satisfy the operator-form identity")
{
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        OperatorSpec s = random_small_spec(rng(), 4);
        PiecewiseFunction f = random_domain_function(s, rng);
        double t = form_energy(s, f).total;
        CHECK(operator_form_identity_check(s, f) <= 1e-9 * (1 + std::abs(t)));
    }
}

TEST_CASE("property: indicator closed form equals the form of h_k")
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        OperatorSpec s = random_small_spec(rng(), 6);
        for (int k = 1; k <= s.K(); ++k) {
            TestFunctionParams p;
            p.k = k;
            double closed = indicator_form_value(s, k);
            double energy = form_energy(s, make_test_function(s, "indicator", p)).total;
            CHECK(std::abs(closed - energy) <= 1e-12 * std::max(1.0, std::abs(closed)));
        }
    }
}

TEST_CASE("property: sign splitting, homogeneity, additivity, monotonicity")
{
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        OperatorSpec s = random_small_spec(rng(), 6);
        std::vector<Segment> segs;
        for (int k = 1; k <= s.K(); ++k)
            segs.push_back(hermite(s.x(k - 1), s.x(k), uniform(rng, -2, 2), uniform(rng, -2, 2),
                                   uniform(rng, -2, 2), uniform(rng, -2, 2)));
        PiecewiseFunction f = make_function(s, segs);
        FormBreakdown b = form_energy(s, f);
        CHECK(b.jump_plus >= 0);
        CHECK(b.jump_minus >= 0);
        CHECK(b.total == doctest::Approx(b.dirichlet + b.potential + b.jump_plus - b.jump_minus).epsilon(1e-15));

        double c = uniform(rng, -3, 3);
        std::vector<Segment> scaled = segs;
        for (Segment& g : scaled)
            for (double& coef : g.c)
                coef *= c;
        CHECK(form_energy(s, make_function(s, scaled)).total == doctest::Approx(c * c * b.total).epsilon(1e-12));

        // supports separated by at least one cell share no interface point
        if (s.K() >= 3) {
            std::vector<Segment> first{segs.front()}, last{segs.back()}, both{segs.front(), segs.back()};
            double sum = form_energy(s, make_function(s, first)).total + form_energy(s, make_function(s, last)).total;
            CHECK(form_energy(s, make_function(s, both)).total == doctest::Approx(sum).epsilon(1e-12));
        }

        // raising 1/beta_k raises the form by jump^2 times the increment
        int k = 1 + static_cast<int>(rng() % s.K());
        if (!s.is_interface(k))
            continue;
        std::vector<double> betas = s.betas();
        double inv = 1 / betas[k - 1] + 0.7;
        if (std::abs(inv) < 1e-3)
            continue;
        betas[k - 1] = 1 / inv;
        OperatorSpec s2 = with_strengths(s, betas);
        const Trace& tr = f.traces[k - 1];
        double jump = tr.f_plus - tr.f_minus;
        double t2 = form_energy(s2, make_function(s2, segs)).total;
        CHECK(t2 - b.total == doctest::Approx(0.7 * jump * jump).epsilon(1e-9));
        CHECK(t2 >= b.total - 1e-12);
    }
}
