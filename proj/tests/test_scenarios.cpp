#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "support.hpp"

#include <numbers>

#include "dspec/report.hpp"
#include "dspec/scenarios.hpp"

using namespace dspec;
using namespace testing;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kZeta32 = 2.6123753486854883;

double val(const json& j) { return j.is_object() ? j.at("value").get<double>() : j.get<double>(); }

const Verdict* part(const Verdict& v, const std::string& id)
{
    for (const Verdict& p : v.parts)
        if (p.id == id)
            return &p;
    return nullptr;
}

void check_lattice(const std::vector<double>& got, double a, double c, double cutoff)
{
    std::vector<double> want;
    for (int n = 0; (kPi * n / a) * (kPi * n / a) + c <= cutoff; ++n)
        want.push_back((kPi * n / a) * (kPi * n / a) + c);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i)
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

}  // namespace

TEST_CASE("every scenario passes on its defaults")
{
    for (const std::string& name : scenario_names()) {
        CAPTURE(name);
        ScenarioReport r = run_scenario(name, {});
        CHECK_FALSE(r.id.empty());
        for (const ScenarioCheck& c : r.checks) {
            CAPTURE(c.name);
            CAPTURE(c.observed);
            CHECK(c.passed);
        }
        CHECK(r.passed());
        CHECK_FALSE(r.checks.empty());
    }
}

TEST_CASE("scenario configs reproduce their reports")
{
    for (const std::string& name : scenario_names()) {
        CAPTURE(name);
        ScenarioReport r = run_scenario(name, {});
        OperatorSpec s = spec_from_config(r.config);
        CriterionReport again = theorem_verdicts(s, r.criteria.C, r.criteria.epsilons);
        CHECK(criterion_report_json(again) == criterion_report_json(r.criteria));
        // the same holds after a trip through text
        OperatorSpec t = spec_from_config(json::parse(r.config.dump()));
        CHECK(config_hash(r.config) == config_hash(json::parse(r.config.dump())));
        CHECK(criterion_report_json(theorem_verdicts(t, r.criteria.C, r.criteria.epsilons)) ==
              criterion_report_json(r.criteria));
    }
}

TEST_CASE("Kronig-Penney lattices")
{
    LadderOptions ladder;
    ladder.truncations = {50, 100};
    ScenarioReport base = run_kronig_penney({}, ladder);
    CHECK(base.passed());
    REQUIRE(base.prediction);
    check_lattice(base.prediction->points, 1, 0, 4 * kPi * kPi - 1);
    CHECK(base.criteria.condition("coupling_vanishes").holds());

    KronigPenneyParams shifted;
    shifted.c = 1;
    ScenarioReport s = run_kronig_penney(shifted, ladder);
    CHECK(s.passed());
    check_lattice(s.prediction->points, 1, 1, 4 * kPi * kPi);

    KronigPenneyParams wide;
    wide.a = 2;
    ScenarioReport w = run_kronig_penney(wide, ladder);
    CHECK(w.passed());
    check_lattice(w.prediction->points, 2, 0, kPi * kPi - 1);

    KronigPenneyParams bad;
    bad.a = -1;
    CHECK(error_code([&] { run_kronig_penney(bad, ladder); }) == "InvalidParameter");
}

TEST_CASE("shrinking cells")
{
    ScenarioReport r = run_shrinking_cells();
    CHECK(r.passed());
    REQUIRE(r.prediction);
    CHECK(r.prediction->points == std::vector<double>{0});

    ShrinkingCellsParams unit_strengths;
    unit_strengths.beta_exponent = 0;
    ScenarioReport u = run_shrinking_cells(unit_strengths);
    CHECK(u.criteria.condition("coupling_vanishes").fails());
    CHECK(u.criteria.theorem("ess_spectrum_transfer").status == Status::Inconclusive);
    // 1 / min(d_k, d_{k+1}) = sqrt(k + 1)
    OperatorSpec us = spec_from_config(u.config);
    for (int k = 1; k < us.K(); ++k)
        CHECK(1 / std::min(us.d(k), us.d(k + 1)) == doctest::Approx(std::sqrt(k + 1.0)).epsilon(1e-9));

    ShrinkingCellsParams flat;
    flat.p = 0;
    ScenarioReport f = run_shrinking_cells(flat);
    REQUIRE(f.prediction);
    check_lattice(f.prediction->points, 1, 0, flat.cutoff);
}

TEST_CASE("Example 4.4 variants")
{
    ScenarioReport i = run_example_4_4("i");
    CHECK(i.passed());
    CHECK(i.criteria.condition("molchanov").holds());
    CHECK(i.criteria.condition("mean_q_divergence").fails());

    ScenarioReport ii = run_example_4_4("ii");
    CHECK(ii.passed());
    const Verdict& mol = ii.criteria.condition("molchanov");
    CHECK(mol.fails());
    CHECK(part(mol, "molchanov(eps=1)")->holds());
    CHECK(part(mol, "molchanov(eps=0.25)")->fails());
    CHECK(ii.criteria.condition("mean_q_divergence").holds());

    CHECK(error_code([] { run_example_4_4("iii"); }) == "UnknownVariant");
}

TEST_CASE("negative pairs")
{
    ScenarioReport r = run_sec24_example();
    CHECK(r.passed());
    REQUIRE(r.rungs.size() == 2);
    double l20 = r.rungs[0].spectrum.eigenvalues.front(), l40 = r.rungs[1].spectrum.eigenvalues.front();
    CHECK(l20 < -10);
    CHECK(l40 < l20);
    CHECK(r.criteria.condition("nec_1").holds());
    CHECK(r.criteria.condition("nec_2").fails());
    CHECK(r.criteria.certificate);

    // the partition points of the construction
    OperatorSpec s = spec_from_config(r.config);
    for (int j = 1; 2 * j <= s.K(); ++j) {
        CHECK(s.x(2 * j - 1) == doctest::Approx(j));
        CHECK(s.x(2 * j) == doctest::Approx(j + 0.5 / j));
        CHECK(s.beta(2 * j - 1) == -1);
    }
}

TEST_CASE("short wells")
{
    ScenarioReport r = run_remark_2_7();
    CHECK(r.passed());
    CHECK(r.criteria.condition("C0_finite").fails());
    const Verdict& b = r.criteria.condition("brinck_sup");
    CHECK(b.holds());
    REQUIRE(b.value);
    CHECK(*b.value <= 0.75 + 1e-12);
    REQUIRE(b.limit);
    CHECK(*b.limit == doctest::Approx(0.5).epsilon(1e-3));
    OperatorSpec s = spec_from_config(r.config);
    for (int j = 1; 2 * j <= s.K(); ++j)
        CHECK(indicator_form_value(s, 2 * j) == doctest::Approx(-j).epsilon(1e-12));
}

TEST_CASE("ramp partial sums")
{
    ScenarioReport r = run_remark_2_2();
    CHECK(r.passed());
    const json& sums = r.data.at("partial_sums");
    REQUIRE(sums.size() == 3);
    for (const json& row : sums) {
        long long K = row.at("K").get<long long>();
        double norm = 0, dir = 0;
        for (long long k = K; k >= 1; --k) {
            norm += std::pow(static_cast<double>(k), -1.5) / 3;
            dir += 1 / std::sqrt(static_cast<double>(k));
        }
        CHECK(val(row.at("norm2")) == doctest::Approx(norm).epsilon(1e-10));
        CHECK(val(row.at("dirichlet")) == doctest::Approx(dir).epsilon(1e-10));
        if (K == 10000)
            CHECK(std::abs(norm - kZeta32 / 3) < 0.01 * kZeta32 / 3);
    }
    double growth = val(sums[2].at("dirichlet")) / val(sums[1].at("dirichlet"));
    CHECK(growth == doctest::Approx(std::sqrt(10.0)).epsilon(0.02));
}

TEST_CASE("h stability")
{
    ScenarioReport lin = run_scenario("h_stability", {});
    CHECK(lin.passed());
    for (const json& row : lin.data.at("per_h"))
        CHECK(row.at("coupling_vanishes") == "Holds");

    ScenarioReport nc = run_scenario("h_stability", {{"beta", "neg_const"}, {"h", "0.5,1"}});
    CHECK(nc.passed());
    for (const json& row : nc.data.at("per_h"))
        CHECK(row.at("coupling_vanishes") == "Fails");
    CHECK(nc.criteria.theorem("h_stable").fails());

    ScenarioReport nl = run_scenario("h_stability", {{"beta", "neg_linear"}});
    CHECK(nl.passed());
    CHECK(nl.criteria.condition("coupling_vanishes").holds());
}

TEST_CASE("parameter handling")
{
    CHECK(error_code([] { run_scenario("kronig_penney", {{"nonsense", "1"}}); }) == "UnknownParameter");
    CHECK(error_code([] { run_scenario("nonsense", {}); }) == "UnknownScenario");
    CHECK(error_code([] { run_scenario("kronig_penney", {{"a", "abc"}}); }) != "");
    ScenarioReport r = run_scenario("kronig_penney", {{"a", "2"}, {"c", "1"}, {"K", "50,100"}});
    CHECK(val(r.params.at("a")) == 2);
    CHECK(val(r.params.at("c")) == 1);
    CHECK(r.rungs.size() == 2);
    check_lattice(r.prediction->points, 2, 1, kPi * kPi);

    LadderOptions l;
    CHECK(count_stable(100, 102, l));
    CHECK_FALSE(count_stable(100, 106, l));
    CHECK(count_stable(1000, 1040, l));
}

TEST_CASE("scenario output does not depend on the number of workers")
{
    ScenarioReport a = run_scenario("kronig_penney", {{"K", "50,100"}}, 1);
    ScenarioReport b = run_scenario("kronig_penney", {{"K", "50,100"}}, 4);
    CHECK(scenario_json(a).dump() == scenario_json(b).dump());
}
