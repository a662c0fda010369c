#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "support.hpp"

#include <numbers>

#include "dspec/eigensolver.hpp"
#include "dspec/neumann.hpp"

using namespace dspec;
using namespace testing;

namespace {

constexpr double kPi = std::numbers::pi;

void check_points(const std::vector<double>& got, const std::vector<double>& want, double rel = 1e-12)
{
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i)
        CHECK(std::abs(got[i] - want[i]) <= rel * std::max(1.0, std::abs(want[i])));
}

void check_direct_sum(const std::vector<DirectSumPoint>& got, const std::vector<std::pair<double, int>>& want)
{
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
        CHECK(got[i].lambda == doctest::Approx(want[i].first).epsilon(1e-12));
        CHECK(got[i].multiplicity == want[i].second);
        CHECK(static_cast<int>(got[i].cells.size()) == want[i].second);
    }
}

json periodic_lengths(const std::vector<double>& lengths, int count)
{
    return {{"partition", {{"generator", {{"kind", "periodic_lengths"}, {"lengths", lengths}, {"count", count}}}}},
            {"strengths", {{"generator", {{"kind", "linear"}, {"slope", 1.0}}}}}};
}

}  // namespace

TEST_CASE("cell Neumann eigenvalues")
{
    OperatorSpec unit = spec_from_config(explicit_config({1}, {1}));
    CellSpectrum a = cell_neumann_eigs(unit, 1, 50);
    check_points(a.eigenvalues, {0, kPi * kPi, 4 * kPi * kPi});
    CHECK(a.method == "analytic-constant");

    OperatorSpec half = spec_from_config(explicit_config({0.5}, {1}, json::array({piece(0, 0.5, 1)})));
    check_points(cell_neumann_eigs(half, 1, 50).eigenvalues, {1, 4 * kPi * kPi + 1});

    CHECK(error_code([&] { cell_neumann_eigs(half, 1, 0.5); }) == "CutoffTooLow");
    CHECK(error_code([&] { cell_neumann_eigs(half, 2, 50); }) == "IndexOutOfRange");
}

TEST_CASE("affine cell matches the dense oracle")
{
    OperatorSpec s = spec_from_config(explicit_config({1}, {"inf"}, json::array({piece(0, 1, 0, 1)})));
    CellSpectrum c = cell_neumann_eigs(s, 1, 30);
    REQUIRE(c.eigenvalues.size() >= 2);
    CHECK(c.method == "shooting-affine");
    CHECK(c.eigenvalues[0] > 0);
    CHECK(c.eigenvalues[0] < 1);
    SpectralResult o = dense_oracle(make_problem(s), {-1, 30});
    check_points(c.eigenvalues, o.eigenvalues, 1e-6);
}

TEST_CASE("direct sum spectrum")
{
    check_direct_sum(direct_sum_spectrum(spec_from_config(explicit_config({1, 2}, {1, 1})), 50),
                     {{0, 2}, {kPi * kPi, 2}, {4 * kPi * kPi, 2}});
    check_direct_sum(direct_sum_spectrum(spec_from_config(explicit_config({1, 3}, {1, 1})), 12),
                     {{0, 2}, {kPi * kPi / 4, 1}, {kPi * kPi, 2}});
    json kp = {{"partition", {{"generator", {{"kind", "arithmetic"}, {"step", 1.0}, {"count", 5}}}}},
               {"strengths", {{"generator", {{"kind", "linear"}, {"slope", 1.0}}}}},
               {"potential", {{"pieces", json::array({piece(0, 1, 1)})}, {"repeat", 1.0}}}};
    check_direct_sum(direct_sum_spectrum(spec_from_config(kp), 12), {{1, 5}, {kPi * kPi + 1, 5}});
}

TEST_CASE("recurrent lengths")
{
    json even = {{"partition", {{"generator", {{"kind", "arithmetic"}, {"step", 2.0}, {"count", 10}}}}},
                 {"strengths", {{"generator", {{"kind", "constant"}, {"value", 1.0}}}}}};
    CHECK(compute_D(spec_from_config(even)).values == std::vector<double>{2});

    json shrinking = {{"partition", {{"generator", {{"kind", "sum_power"}, {"exponent", 0.5}, {"count", 100}}}}},
                      {"strengths", {{"generator", {{"kind", "linear"}, {"slope", 1.0}}}}},
                      {"tail", {{"d_limit", 0.0}}}};
    LengthSet d = compute_D(spec_from_config(shrinking));
    CHECK(d.values.empty());
    CHECK(d.provenance.find("declaration") != std::string::npos);

    CHECK(compute_D(spec_from_config(periodic_lengths({1, 2}, 10))).values == std::vector<double>{1, 2});

    CHECK(error_code([] { compute_D(spec_from_config(explicit_config({1, 2}, {1, 1}))); }) == "UndecidableTail");
}

TEST_CASE("essential spectrum of the Neumann realization")
{
    json unit = {{"partition", {{"generator", {{"kind", "arithmetic"}, {"step", 1.0}, {"count", 10}}}}},
                 {"strengths", {{"generator", {{"kind", "linear"}, {"slope", 1.0}}}}}};
    EssSpectrumModel a = ess_spectrum_N(spec_from_config(unit), 50);
    check_points(a.points, {0, kPi * kPi, 4 * kPi * kPi});

    json shrinking = {{"partition", {{"generator", {{"kind", "sum_power"}, {"exponent", 0.5}, {"count", 100}}}}},
                      {"strengths", {{"generator", {{"kind", "linear"}, {"slope", 1.0}}}}},
                      {"tail", {{"d_limit", 0.0}}}};
    check_points(ess_spectrum_N(spec_from_config(shrinking), 1000).points, {0});

    check_points(ess_spectrum_N(spec_from_config(periodic_lengths({1, 2}, 10)), 12).points,
                 {0, kPi * kPi / 4, kPi * kPi});

    json shifted = unit;
    shifted["potential"] = {{"pieces", json::array({piece(0, 1, 1)})}, {"repeat", 1.0}};
    CHECK(error_code([&] { ess_spectrum_N(spec_from_config(shifted), 50); }) == "HypothesisNotMet");
    // the periodic model covers the shifted lattice instead
    check_points(periodic_ess_spectrum(spec_from_config(shifted), 50).points, {1, kPi * kPi + 1, 4 * kPi * kPi + 1});
}

TEST_CASE("property: constant cells agree with shooting")
{
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        double d = uniform(rng, 0.1, 4), c = uniform(rng, -5, 5);
        OperatorSpec s = spec_from_config(explicit_config({d}, {1}, json::array({piece(0, d, c)})));
        CellSpectrum cell = cell_neumann_eigs(s, 1, c + 200);
        ShootingOptions opt;
        opt.analytic_cells = false;
        opt.tol = 1e-13;
        SpectralResult sh = eigenvalues_shooting(make_problem(s), {c - 1, c + 200}, opt);
        check_points(cell.eigenvalues, sh.eigenvalues, 1e-10);
    }
}

TEST_CASE("property: periodic partitions give multiplicity K")
{
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        double a = uniform(rng, 0.3, 2);
        int K = 3 + static_cast<int>(rng() % 30);
        json cfg = {{"partition", {{"generator", {{"kind", "arithmetic"}, {"step", a}, {"count", K}}}}},
                    {"strengths", {{"generator", {{"kind", "linear"}, {"slope", 1.0}}}}},
                    {"potential",
                     {{"pieces", json::array({piece(0, a / 2, uniform(rng, -3, 3)), piece(a / 2, a, uniform(rng, -3, 3))})},
                      {"repeat", a}}}};
        for (const DirectSumPoint& p : direct_sum_spectrum(spec_from_config(cfg), 60))
            CHECK(p.multiplicity == K);
    }
}

TEST_CASE("property: model points attract ever more direct-sum eigenvalues")
{
    const double delta = 0.25;
    for (const json& base : {periodic_lengths({1, 2}, 10),
                             json{{"partition", {{"generator", {{"kind", "sum_power"}, {"exponent", 0.5}, {"count", 50}}}}},
                                  {"strengths", {{"generator", {{"kind", "linear"}, {"slope", 1.0}}}}},
                                  {"tail", {{"d_limit", 0.0}}}}}) {
        EssSpectrumModel m = ess_spectrum_N(spec_from_config(base), 30);
        for (double p : m.points) {
            long long prev = -1;
            for (int K : {50, 100, 200}) {
                json cfg = base;
                cfg["partition"]["generator"]["count"] = K;
                long long n = 0;
                for (const DirectSumPoint& q : direct_sum_spectrum(spec_from_config(cfg), 31))
                    if (std::abs(q.lambda - p) < delta)
                        n += q.multiplicity;
                CHECK(n > prev);
                prev = n;
            }
        }
    }
}

TEST_CASE("direct sum does not depend on the number of workers")
{
    OperatorSpec s = spec_from_config(
        {{"partition", {{"generator", {{"kind", "sum_power"}, {"exponent", 0.3}, {"count", 300}}}}},
         {"strengths", {{"generator", {{"kind", "linear"}, {"slope", 1.0}}}}},
         {"potential", {{"pieces", json::array({piece(0, 1, 0, 0.5), piece(1, 2, 0.5, 0)})}, {"repeat", 2.0}}}});
    auto a = direct_sum_spectrum(s, 80, 1), b = direct_sum_spectrum(s, 80, 4);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].lambda == b[i].lambda);
        CHECK(a[i].cells == b[i].cells);
    }
}
