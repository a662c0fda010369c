#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "support.hpp"

#include "dspec/criteria.hpp"
#include "dspec/scenarios.hpp"

using namespace dspec;
using namespace testing;

namespace {

json arithmetic(double step, int count)
{
    return {{"generator", {{"kind", "arithmetic"}, {"step", step}, {"count", count}}}};
}

json strengths_linear(double slope) { return {{"generator", {{"kind", "linear"}, {"slope", slope}}}}; }
json strengths_constant(const json& v) { return {{"generator", {{"kind", "constant"}, {"value", v}}}}; }
json strengths_power(double coeff, double exponent)
{
    return {{"generator", {{"kind", "power"}, {"coeff", coeff}, {"exponent", exponent}}}};
}

json periodic_potential(double c, double period = 1)
{
    return {{"pieces", json::array({piece(0, period, c)})}, {"repeat", period}};
}

// q(x) = x on [0, inf)
json linear_potential() { return {{"pieces", json::array({{{"from", 0.0}, {"to", "inf"}, {"c0", 0.0}, {"c1", 1.0}}})}}; }

OperatorSpec make(const json& partition, const json& strengths, const json& potential = nullptr,
                  const json& tail = nullptr)
{
    json cfg = {{"partition", partition}, {"strengths", strengths}};
    if (!potential.is_null())
        cfg["potential"] = potential;
    if (!tail.is_null())
        cfg["tail"] = tail;
    return spec_from_config(cfg);
}

double trend_at(const Verdict& v, double index)
{
    for (const auto& [k, x] : v.trend)
        if (k == index)
            return x;
    FAIL("index " << index << " missing from the trend");
    return 0;
}

void require_witness_if_fails(const Verdict& v)
{
    if (v.fails())
        CHECK(v.witness.has_value());
    if (v.status == Status::Inconclusive)
        CHECK(!v.reason.empty());
    for (const Verdict& p : v.parts)
        require_witness_if_fails(p);
}

}  // namespace

TEST_CASE("sup C0")
{
    Verdict pos = sup_C0(make(arithmetic(1, 50), strengths_linear(1), linear_potential()));
    CHECK(pos.holds());
    CHECK(*pos.value == 0);

    OperatorSpec wells = spec_from_config(remark_2_7_config(200));
    Verdict w = sup_C0(wells);
    CHECK(w.fails());
    REQUIRE(w.witness);
    for (int j = 1; j <= 100; ++j)
        CHECK(cell_integrals(wells, 2 * j).q_minus / wells.d(2 * j) == doctest::Approx(j).epsilon(1e-12));

    Verdict neg = sup_C0(make(arithmetic(0.7, 40), strengths_linear(1), periodic_potential(-5, 0.7)));
    CHECK(neg.holds());
    CHECK(*neg.value == doctest::Approx(5).epsilon(1e-14));
}

TEST_CASE("sup C1")
{
    Verdict pos = sup_C1(make(arithmetic(1, 50), strengths_linear(2)));
    CHECK(pos.holds());
    CHECK(*pos.value == 0);

    CHECK(sup_C1(spec_from_config(sec24_config(200))).fails());

    Verdict neg = sup_C1(make(arithmetic(1, 50), strengths_linear(-1)));
    CHECK(neg.holds());
    CHECK(*neg.value == doctest::Approx(1).epsilon(1e-14));
    CHECK(trend_at(neg, 50) == doctest::Approx(1.0 / 50).epsilon(1e-12));
}

TEST_CASE("Molchanov condition")
{
    CHECK(check_molchanov(make(arithmetic(1, 50), strengths_linear(1), linear_potential())).holds());

    Verdict zero = check_molchanov(make(arithmetic(1, 50), strengths_linear(1)));
    CHECK(zero.fails());
    REQUIRE(zero.witness);
    CHECK(zero.witness->where.find("eps=1") == 0);

    OperatorSpec ex = spec_from_config(example_4_4_config("ii", 100));
    Verdict quarter = check_molchanov(ex, {0.25});
    CHECK(quarter.fails());
    // windows of length above one half always meet the growing half-cell
    CHECK(check_molchanov(ex, {1.0, 0.75}).holds());

    CHECK(error_code([&] { check_molchanov(ex, {}); }) == "InvalidEpsilon");
    CHECK(error_code([&] { check_molchanov(ex, {-1}); }) == "InvalidEpsilon");
}

TEST_CASE("cell means of q diverge")
{
    OperatorSpec ii = spec_from_config(example_4_4_config("ii", 100));
    CHECK(check_mean_q_divergence(ii).holds());
    for (int k = 1; k <= 100; ++k)
        CHECK(cell_integrals(ii, k).q / ii.d(k) == doctest::Approx(k - 0.75).epsilon(1e-12));

    OperatorSpec i = spec_from_config(example_4_4_config("i", 100));
    Verdict vi = check_mean_q_divergence(i);
    CHECK(vi.fails());
    REQUIRE(vi.witness);
    for (int j = 1; j <= 50; ++j)
        CHECK(cell_integrals(i, 2 * j).q == 0);

    CHECK(check_mean_q_divergence(make(arithmetic(1, 50), strengths_linear(1), linear_potential())).holds());
}

TEST_CASE("combined divergence")
{
    OperatorSpec attractive = make(arithmetic(1, 50), strengths_constant(-1.0));
    Verdict a = check_combined_divergence(attractive);
    CHECK(a.fails());
    REQUIRE(a.limit);
    CHECK(*a.limit == doctest::Approx(-2));
    for (int k = 2; k <= 50; ++k)
        CHECK(indicator_form_value(attractive, k) == doctest::Approx(-2));

    OperatorSpec strong = make(arithmetic(1, 50), strengths_power(1, -1));
    CHECK(check_combined_divergence(strong).holds());
    for (int k = 2; k <= 50; ++k)
        CHECK(indicator_form_value(strong, k) == doctest::Approx(2 * k - 1).epsilon(1e-12));

    CHECK(check_combined_divergence(make(arithmetic(1, 50), strengths_constant("inf"), linear_potential())).holds());
}

TEST_CASE("coupling vanishes")
{
    CHECK(check_coupling_vanishes(make(arithmetic(1, 50), strengths_linear(1))).holds());

    Verdict unit = check_coupling_vanishes(make(arithmetic(1, 50), strengths_constant(1.0)));
    CHECK(unit.fails());
    REQUIRE(unit.limit);
    CHECK(*unit.limit == doctest::Approx(1));

    json shrinking = {{"generator", {{"kind", "sum_power"}, {"exponent", 0.5}, {"count", 200}}}};
    OperatorSpec s = make(shrinking, strengths_linear(1));
    CHECK(check_coupling_vanishes(s).holds());
    // |beta_k|^-1 / min(d_k, d_{k+1}) = sqrt(k + 1) / k
    Verdict v = check_coupling_vanishes(s);
    CHECK(trend_at(v, 199) == doctest::Approx(std::sqrt(200.0) / 199).epsilon(1e-12));
    CHECK(trend_at(v, 200) == doctest::Approx(std::sqrt(201.0) / 200).epsilon(1e-12));
}

TEST_CASE("cell means of |q| vanish")
{
    CHECK(check_q_mean_vanishes(make(arithmetic(1, 50), strengths_linear(1))).holds());

    Verdict c = check_q_mean_vanishes(make(arithmetic(1, 50), strengths_linear(1), periodic_potential(-3)));
    CHECK(c.fails());
    REQUIRE(c.limit);
    CHECK(*c.limit == doctest::Approx(3));

    // secant interpolant of 1/x^2 on unit cells, with the limit declared
    std::vector<double> pts;
    json betas = json::array(), pieces = json::array({piece(0, 1, 1)});
    for (int k = 1; k <= 60; ++k) {
        pts.push_back(k);
        betas.push_back(1.0);
        if (k > 1) {
            double fa = 1.0 / ((k - 1) * (k - 1)), fb = 1.0 / (k * k);
            pieces.push_back(piece(k - 1, k, fa - (fb - fa) * (k - 1), fb - fa));
        }
    }
    json cfg = explicit_config(pts, betas, pieces);
    cfg["tail"] = {{"q_mean_limit", 0.0}};
    OperatorSpec s = spec_from_config(cfg);
    Verdict v = check_q_mean_vanishes(s);
    CHECK(v.holds());
    CHECK(v.source.find("declaration") == 0);
    double fa = 1.0 / (59.0 * 59.0), fb = 1.0 / (60.0 * 60.0);
    CHECK(trend_at(v, 60) == doctest::Approx((fa + fb) / 2).epsilon(1e-12));

    // without the declaration nothing can be concluded from finite data
    cfg.erase("tail");
    CHECK(check_q_mean_vanishes(spec_from_config(cfg)).status == Status::Inconclusive);
}

TEST_CASE("necessary conditions for semiboundedness")
{
    OperatorSpec pos = make(arithmetic(1, 50), strengths_linear(1), periodic_potential(-2));
    for (double C : {0.0, 1.0, 10.0})
        CHECK(check_necessary_semibounded(pos, C).holds());

    OperatorSpec pairs = spec_from_config(sec24_config(400));
    for (double C : {0.0, 1.0, 10.0, 100.0}) {
        Verdict v = check_necessary_semibounded(pairs, C);
        CHECK(v.fails());
        bool nec2_fails = false;
        for (const Verdict& p : v.parts)
            nec2_fails = nec2_fails || (p.id == "nec_2" && p.fails());
        CHECK(nec2_fails);
        require_witness_if_fails(v);
    }

    for (double C : {0.0, 3.0, 30.0}) {
        double b = -1 / (2 + C / 3);
        Verdict v = check_necessary_semibounded(spec_from_config(explicit_config({1, 2, 3}, {b, 1, 1})), C);
        CHECK(v.fails());
        CHECK(v.parts.front().id == "nec_inf_b");
        CHECK(v.parts.front().fails());
    }

    CHECK(error_code([&] { check_necessary_semibounded(pos, -1); }) == "InvalidConstant");
}

TEST_CASE("unboundedness certificate")
{
    OperatorSpec pairs = spec_from_config(sec24_config(200));
    auto c = unboundedness_certificate(pairs);
    REQUIRE(c);
    CHECK(c->family == "indicator");
    CHECK(c->quotients.back() < -1e6);
    // the indicator of [x_{2j-1}, x_{2j}] has energy (1/j - 1) and length 1/(2j)
    for (std::size_t i = 0; i < c->indices.size(); ++i) {
        long long k = c->indices[i];
        if (k % 2 == 0) {
            double j = static_cast<double>(k / 2);
            CHECK(c->quotients[i] == doctest::Approx((1 / j - 1) * 2 * j).epsilon(1e-9));
        }
    }

    CHECK_FALSE(unboundedness_certificate(make(arithmetic(1, 50), strengths_linear(1), linear_potential())));

    OperatorSpec wells = spec_from_config(remark_2_7_config(200));
    auto w = unboundedness_certificate(wells);
    REQUIRE(w);
    CHECK(w->family == "indicator");
    for (std::size_t i = 0; i < w->indices.size(); ++i)
        if (w->indices[i] % 2 == 0)
            CHECK(w->quotients[i] == doctest::Approx(-static_cast<double>(w->indices[i] / 2)).epsilon(1e-9));
}

TEST_CASE("theorem verdicts")
{
    CriterionReport kp = theorem_verdicts(spec_from_config(kronig_penney_config({}, 100)));
    CHECK(kp.theorem("semibounded").holds());
    CHECK(kp.theorem("self_adjoint").holds());
    CHECK(kp.theorem("discrete").fails());
    CHECK(kp.theorem("ess_spectrum_transfer").holds());
    CHECK(kp.theorem("ess_equals_free_N").holds());
    CHECK_FALSE(kp.certificate);

    CriterionReport lin = theorem_verdicts(make(arithmetic(1, 100), strengths_linear(1), linear_potential()));
    CHECK(lin.theorem("discrete").holds());
    CHECK(lin.theorem("semibounded").holds());

    CriterionReport pairs = theorem_verdicts(spec_from_config(sec24_config(200)));
    CHECK(pairs.theorem("semibounded").fails());
    CHECK(pairs.certificate);
    CHECK(pairs.theorem("self_adjoint").status == Status::Inconclusive);

    CHECK(error_code([&] { kp.theorem("nonsense"); }) == "UnknownCondition");
    CHECK(error_code([&] { kp.condition("nonsense"); }) == "UnknownCondition");
}

namespace {

// Random generator-backed specs: periodic partitions, strengths laws and potentials.
json random_config(std::mt19937_64& rng, bool positive_strengths)
{
    double a = uniform(rng, 0.3, 2);
    int K = 20 + static_cast<int>(rng() % 80);
    json strengths;
    switch (rng() % 3) {
    case 0: strengths = strengths_power(uniform(rng, 0.1, 3), uniform(rng, -1, 2)); break;
    case 1: strengths = strengths_constant(uniform(rng, 0.1, 3)); break;
    default: strengths = strengths_linear(uniform(rng, 0.1, 3)); break;
    }
    if (!positive_strengths && rng() % 2)
        strengths = {{"generator", {{"kind", "pattern"}, {"laws", json::array({uniform(rng, -3, -0.2), uniform(rng, 0.2, 3)})}}}};
    json cfg = {{"partition", arithmetic(a, K)}, {"strengths", strengths}};
    switch (rng() % 3) {
    case 0: cfg["potential"] = periodic_potential(uniform(rng, -4, 4), a); break;
    case 1: cfg["potential"] = linear_potential(); break;
    default: break;
    }
    return cfg;
}

}  // namespace

TEST_CASE("property: weaker positive coupling keeps coupling_vanishes")
{
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 60; ++trial) {
        OperatorSpec s = spec_from_config(random_config(rng, true));
        Verdict before = check_coupling_vanishes(s);
        for (double h : {1.5, 4.0, 100.0}) {
            Verdict after = check_coupling_vanishes(scale_strengths(s, h));
            if (before.holds())
                CHECK_FALSE(after.fails());
        }
    }
}

TEST_CASE("property: verdicts are internally consistent")
{
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 60; ++trial) {
        CriterionReport r = theorem_verdicts(spec_from_config(random_config(rng, false)));
        for (const Verdict& v : r.conditions)
            require_witness_if_fails(v);
        for (const Verdict& v : r.theorems)
            require_witness_if_fails(v);
        const Verdict& disc = r.theorem("discrete");
        if (disc.holds()) {
            CHECK_FALSE(r.condition("combined_divergence").fails());
            CHECK_FALSE(r.condition("q_bounded").holds());
        }
        if (r.theorem("semibounded").holds())
            CHECK(r.theorem("self_adjoint").holds());
        if (r.theorem("ess_equals_free_N").holds())
            CHECK(r.theorem("ess_spectrum_transfer").holds());
        if (r.certificate)
            CHECK(r.theorem("semibounded").fails());
    }
}

TEST_CASE("property: certificates decrease below the bound")
{
    std::vector<json> configs{sec24_config(200), remark_2_7_config(200)};
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        // growing attraction on a periodic lattice
        json cfg = {{"partition", arithmetic(uniform(rng, 0.5, 2), 60)},
                    {"strengths", strengths_power(-uniform(rng, 0.5, 2), -uniform(rng, 1, 2))}};
        configs.push_back(cfg);
    }
    for (const json& cfg : configs) {
        OperatorSpec s = spec_from_config(cfg);
        auto c = unboundedness_certificate(s);
        REQUIRE(c);
        REQUIRE(c->quotients.size() >= 2);
        for (std::size_t i = 1; i < c->quotients.size(); ++i)
            CHECK(c->quotients[i] < c->quotients[i - 1]);
        CHECK(c->quotients.back() < -1e6);
        // inside the truncation the quotients are the Rayleigh quotients of actual test functions
        for (std::size_t i = 0; i < c->indices.size(); ++i) {
            long long k = c->indices[i];
            if (c->family != "indicator" || k > s.K())
                continue;
            TestFunctionParams tp;
            tp.k = static_cast<int>(k);
            double rq = rayleigh_quotient(s, make_test_function(s, "indicator", tp));
            CHECK(close(rq, c->quotients[i], 1e-10, 1e-12));
        }
    }
}

TEST_CASE("property: sufficiency dominates necessity")
{
    std::mt19937_64 rng(17);
    int checked = 0;
    for (int trial = 0; trial < 60; ++trial) {
        OperatorSpec s = spec_from_config(random_config(rng, false));
        if (sup_C0(s).holds() && sup_C1(s).holds()) {
            ++checked;
            CHECK(check_necessary_semibounded(s, 1e6).holds());
        }
    }
    CHECK(checked > 20);
}
