#include "dspec/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dspec/errors.hpp"
#include "dspec/forms.hpp"

namespace dspec {

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

std::string fmt_list(const std::vector<double>& v)
{
    std::string s = "{";
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? ", " : "") + fmt(v[i]);
    return s + "}";
}

void check(ScenarioReport& r, std::string name, std::string expected, std::string observed, bool passed)
{
    r.checks.push_back({std::move(name), std::move(expected), std::move(observed), passed});
}

void check_status(ScenarioReport& r, const std::string& name, const Verdict& v, Status expected)
{
    std::string obs = status_name(v.status);
    if (v.witness)
        obs += " (" + v.witness->where + ")";
    else if (!v.reason.empty())
        obs += " (" + v.reason + ")";
    check(r, name, status_name(expected), obs, v.status == expected);
}

long long count_in(const std::vector<double>& eigs, double lo, double hi)
{
    return std::count_if(eigs.begin(), eigs.end(), [&](double v) { return v >= lo && v < hi; });
}

// Counts inside [p - delta, p + delta) for each predicted point and in the gaps between them.
json cluster_metrics(const std::vector<double>& eigs, const std::vector<double>& points, double delta, double lo,
                     double cutoff)
{
    json clusters = json::array(), gaps = json::array();
    double left = lo;
    for (double p : points) {
        if (p - delta > left)
            gaps.push_back({{"lo", left}, {"hi", p - delta}, {"count", count_in(eigs, left, p - delta)}});
        double hi = std::min(p + delta, cutoff);
        clusters.push_back({{"point", p}, {"count", count_in(eigs, p - delta, hi)}});
        left = hi;
    }
    if (cutoff > left)
        gaps.push_back({{"lo", left}, {"hi", cutoff}, {"count", count_in(eigs, left, cutoff)}});
    return {{"clusters", clusters}, {"gaps", gaps}, {"total", static_cast<long long>(eigs.size())}};
}

void ladder_checks(ScenarioReport& r, const std::vector<const Rung*>& rungs, const LadderOptions& opt)
{
    if (rungs.size() < 2)
        return;
    const Rung& prev = *rungs[rungs.size() - 2];
    const Rung& last = *rungs.back();
    const json& cl = last.metrics.at("clusters");
    for (std::size_t i = 0; i < cl.size(); ++i) {
        std::vector<long long> counts;
        for (const Rung* g : rungs)
            counts.push_back(g->metrics.at("clusters").at(i).at("count").get<long long>());
        bool grows = true;
        std::string obs;
        for (std::size_t j = 0; j < counts.size(); ++j) {
            obs += (j ? " -> " : "") + std::to_string(counts[j]);
            if (j > 0 && counts[j] <= counts[j - 1])
                grows = false;
        }
        check(r, "cluster near " + fmt(cl[i].at("point").get<double>()) + " grows with K",
              "strictly increasing counts", obs, grows);
    }
    const json& gp = prev.metrics.at("gaps");
    const json& gl = last.metrics.at("gaps");
    for (std::size_t i = 0; i < gl.size() && i < gp.size(); ++i) {
        long long a = gp[i].at("count").get<long long>(), b = gl[i].at("count").get<long long>();
        std::string range = "[" + fmt(gl[i].at("lo").get<double>()) + ", " + fmt(gl[i].at("hi").get<double>()) + ")";
        check(r, "count in " + range + " stable between K=" + std::to_string(prev.K) + " and K=" + std::to_string(last.K),
              "change <= max(" + fmt(opt.stable_abs) + ", " + fmt(opt.stable_rel) + " * count)",
              std::to_string(a) + " -> " + std::to_string(b), count_stable(a, b, opt));
    }
}

json strengths_law(double coeff, double exponent)
{
    if (exponent == 0)
        return {{"generator", {{"kind", "constant"}, {"value", coeff}}}};
    return {{"generator", {{"kind", "power"}, {"coeff", coeff}, {"exponent", exponent}}}};
}

}  // namespace

bool ScenarioReport::passed() const
{
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const ScenarioCheck& c) { return c.passed; });
}

bool count_stable(long long previous, long long current, const LadderOptions& opt)
{
    double change = std::abs(static_cast<double>(current - previous));
    double count = static_cast<double>(std::max(previous, current));
    return change <= std::max(opt.stable_abs, opt.stable_rel * count);
}

EssSpectrumModel predict_ess(const OperatorSpec& spec, double cutoff)
{
    if (check_q_mean_vanishes(spec).holds())
        return ess_spectrum_N(spec, cutoff);
    return periodic_ess_spectrum(spec, cutoff);
}

// ---------------------------------------------------------------- configs

json kronig_penney_config(const KronigPenneyParams& p, int count)
{
    json cfg;
    cfg["name"] = "kronig_penney";
    cfg["partition"] = {{"generator", {{"kind", "arithmetic"}, {"step", p.a}, {"count", count}}}};
    cfg["strengths"] = strengths_law(p.beta_coeff, p.beta_exponent);
    cfg["potential"] = {{"pieces", json::array({{{"from", 0.0}, {"to", p.a}, {"c0", p.c}, {"c1", 0.0}}})},
                        {"repeat", p.a}};
    return cfg;
}

json shrinking_cells_config(const ShrinkingCellsParams& p, int count)
{
    json cfg;
    cfg["name"] = "shrinking_cells";
    cfg["partition"] = {{"generator", {{"kind", "sum_power"}, {"exponent", p.p}, {"count", count}}}};
    cfg["strengths"] = strengths_law(p.beta_coeff, p.beta_exponent);
    return cfg;
}

json example_4_4_config(const std::string& variant, int count)
{
    json cfg;
    cfg["strengths"] = {{"generator", {{"kind", "constant"}, {"value", "inf"}}}};
    if (variant == "i") {
        cfg["name"] = "example_4_4_i";
        cfg["partition"] = {{"generator", {{"kind", "paired"}, {"coeff", 0.5}, {"exponent", -1.0}, {"count", count}}}};
        json odd = json::array({{{"c0", 0.0}, {"c1", 1.0}, {"coords", "absolute"}}});
        json even = json::array({{{"c0", 0.0}}});
        cfg["potential"] = {{"cell_pattern", {{"cells", json::array({odd, even})}}}};
    } else if (variant == "ii") {
        cfg["name"] = "example_4_4_ii";
        cfg["partition"] = {{"generator", {{"kind", "arithmetic"}, {"step", 1.0}, {"count", count}}}};
        cfg["potential"] = {{"pieces", json::array({{{"from", 0.0}, {"to", 0.5}, {"c0", 0.0}, {"c1", 2.0}},
                                                    {{"from", 0.5}, {"to", 1.0}, {"c0", 0.0}, {"c1", 0.0}}})},
                            {"repeat", 1.0},
                            {"repeat_mode", "translate"}};
    } else {
        invalid("UnknownVariant", "example_4_4 variant must be 'i' or 'ii'");
    }
    return cfg;
}

json sec24_config(int count)
{
    json cfg;
    cfg["name"] = "negative_pairs";
    cfg["partition"] = {{"generator", {{"kind", "paired"}, {"coeff", 0.5}, {"exponent", -1.0}, {"count", count}}}};
    cfg["strengths"] = {
        {"generator", {{"kind", "pattern"}, {"laws", json::array({-1.0, {{"coeff", 1.0}, {"exponent", 1.0}}})}}}};
    return cfg;
}

json remark_2_7_config(int count)
{
    json cfg;
    cfg["name"] = "short_wells";
    cfg["partition"] = {{"generator", {{"kind", "paired"}, {"coeff", 0.5}, {"exponent", -1.0}, {"count", count}}}};
    cfg["strengths"] = {{"generator", {{"kind", "constant"}, {"value", "inf"}}}};
    json odd = json::array({{{"c0", 0.0}}});
    json even = json::array({{{"c0", {{"coeff", -1.0}, {"exponent", 1.0}}}}});
    cfg["potential"] = {{"cell_pattern", {{"cells", json::array({odd, even})}}}};
    return cfg;
}

// ---------------------------------------------------------------- scenarios

ScenarioReport run_kronig_penney(const KronigPenneyParams& p, const LadderOptions& ladder)
{
    if (!(p.a > 0) || !std::isfinite(p.c) || ladder.truncations.empty())
        invalid("InvalidParameter", "kronig_penney needs a > 0, finite c and at least one truncation");
    ScenarioReport r;
    r.id = "kronig_penney";
    double cutoff = p.cutoff > 0 ? p.cutoff : 4 * kPi * kPi / (p.a * p.a) + p.c - 1;
    r.params = {{"a", p.a},
                {"c", p.c},
                {"beta_coeff", p.beta_coeff},
                {"beta_exponent", p.beta_exponent},
                {"cutoff", cutoff},
                {"delta", p.delta},
                {"truncations", ladder.truncations}};
    int kmax = *std::max_element(ladder.truncations.begin(), ladder.truncations.end());
    r.config = kronig_penney_config(p, kmax);
    OperatorSpec spec = spec_from_config(r.config);
    r.criteria = theorem_verdicts(spec);
    r.prediction = periodic_ess_spectrum(spec, cutoff);

    std::vector<double> lattice;
    for (long long n = 0;; ++n) {
        double v = std::pow(kPi * n / p.a, 2) + p.c;
        if (v > cutoff)
            break;
        lattice.push_back(v);
    }
    check(r, "predicted essential spectrum", "{(pi n / a)^2 + c} = " + fmt_list(lattice),
          fmt_list(r.prediction->points),
          r.prediction->points.size() == lattice.size() &&
              std::equal(lattice.begin(), lattice.end(), r.prediction->points.begin(),
                         [](double x, double y) { return std::abs(x - y) <= 1e-9 * std::max(1.0, std::abs(x)); }));

    bool growing = p.beta_exponent > 0;
    check_status(r, "coupling_vanishes", r.criteria.condition("coupling_vanishes"),
                 growing ? Status::Holds : Status::Fails);
    if (p.beta_coeff > 0)
        check_status(r, "semibounded", r.criteria.theorem("semibounded"), Status::Holds);
    check_status(r, "discrete", r.criteria.theorem("discrete"), Status::Fails);
    check_status(r, "ess_spectrum_transfer", r.criteria.theorem("ess_spectrum_transfer"),
                 growing ? Status::Holds : Status::Inconclusive);

    ShootingOptions so;
    so.jobs = ladder.jobs;
    for (int K : ladder.truncations) {
        TruncatedProblem pb = make_problem(spec, BoundaryCondition::Neumann, K);
        double lo = spectrum_lower_bound(pb, so);
        Rung g;
        g.label = "K=" + std::to_string(K);
        g.K = K;
        g.spectrum = eigenvalues_shooting(pb, {lo, cutoff}, so);
        g.metrics = cluster_metrics(g.spectrum.eigenvalues, r.prediction->points, p.delta, lo, cutoff);
        r.rungs.push_back(std::move(g));
    }
    if (growing) {
        std::vector<const Rung*> rs;
        for (const Rung& g : r.rungs)
            rs.push_back(&g);
        ladder_checks(r, rs, ladder);
    }
    return r;
}

ScenarioReport run_shrinking_cells(const ShrinkingCellsParams& p, const LadderOptions& ladder)
{
    if (!(p.p >= 0 && p.p <= 0.5) || !(p.probe < p.cutoff) || ladder.truncations.empty())
        invalid("InvalidParameter", "shrinking_cells needs 0 <= p <= 1/2 and probe < cutoff");
    ScenarioReport r;
    r.id = "shrinking_cells";
    r.params = {{"p", p.p},
                {"beta_coeff", p.beta_coeff},
                {"beta_exponent", p.beta_exponent},
                {"cutoff", p.cutoff},
                {"probe", p.probe},
                {"truncations", ladder.truncations}};
    int kmax = *std::max_element(ladder.truncations.begin(), ladder.truncations.end());
    r.config = shrinking_cells_config(p, kmax);
    OperatorSpec spec = spec_from_config(r.config);
    r.criteria = theorem_verdicts(spec);
    r.prediction = ess_spectrum_N(spec, p.cutoff);

    std::vector<double> expected_D;
    if (p.p == 0)
        expected_D.push_back(1.0);
    check(r, "set of recurrent lengths", fmt_list(expected_D), fmt_list(r.prediction->D),
          r.prediction->D.size() == expected_D.size() &&
              std::equal(expected_D.begin(), expected_D.end(), r.prediction->D.begin(),
                         [](double x, double y) { return std::abs(x - y) <= 1e-9; }));
    std::vector<double> expected_pts{0.0};
    for (double l : expected_D)
        for (long long n = 1; std::pow(kPi * n / l, 2) <= p.cutoff; ++n)
            expected_pts.push_back(std::pow(kPi * n / l, 2));
    check(r, "predicted essential spectrum", fmt_list(expected_pts), fmt_list(r.prediction->points),
          r.prediction->points.size() == expected_pts.size() &&
              std::equal(expected_pts.begin(), expected_pts.end(), r.prediction->points.begin(),
                         [](double x, double y) { return std::abs(x - y) <= 1e-9 * std::max(1.0, x); }));

    // |beta_k|^-1 / min(d_k, d_{k+1}) ~ k^(p - e) / |coeff|
    bool vanishes = p.beta_exponent > p.p;
    check_status(r, "coupling_vanishes", r.criteria.condition("coupling_vanishes"),
                 vanishes ? Status::Holds : Status::Fails);
    check_status(r, "ess_spectrum_transfer", r.criteria.theorem("ess_spectrum_transfer"),
                 vanishes ? Status::Holds : Status::Inconclusive);

    ShootingOptions so;
    so.jobs = ladder.jobs;
    for (int K : ladder.truncations) {
        TruncatedProblem pb = make_problem(spec, BoundaryCondition::Neumann, K);
        double lo = spectrum_lower_bound(pb, so);
        Rung g;
        g.label = "K=" + std::to_string(K);
        g.K = K;
        g.spectrum = eigenvalues_shooting(pb, {lo, p.cutoff}, so);
        const auto& e = g.spectrum.eigenvalues;
        g.metrics = {{"below_probe", count_in(e, lo, p.probe)},
                     {"band", count_in(e, p.probe, p.cutoff)},
                     {"total", static_cast<long long>(e.size())}};
        r.rungs.push_back(std::move(g));
    }
    if (vanishes && p.p > 0 && r.rungs.size() >= 2) {
        bool grows = true;
        std::string obs;
        for (std::size_t i = 0; i < r.rungs.size(); ++i) {
            long long n = r.rungs[i].metrics.at("below_probe").get<long long>();
            obs += (i ? " -> " : "") + std::to_string(n);
            if (i > 0 && n <= r.rungs[i - 1].metrics.at("below_probe").get<long long>())
                grows = false;
        }
        check(r, "N(" + fmt(p.probe) + ") grows with K", "strictly increasing counts", obs, grows);
        const Rung& a = r.rungs[r.rungs.size() - 2];
        const Rung& b = r.rungs.back();
        long long na = a.metrics.at("band").get<long long>(), nb = b.metrics.at("band").get<long long>();
        check(r, "count in [" + fmt(p.probe) + ", " + fmt(p.cutoff) + ") stable between K=" + std::to_string(a.K) +
                     " and K=" + std::to_string(b.K),
              "change <= max(" + fmt(ladder.stable_abs) + ", " + fmt(ladder.stable_rel) + " * count)",
              std::to_string(na) + " -> " + std::to_string(nb), count_stable(na, nb, ladder));
    }
    return r;
}

ScenarioReport run_example_4_4(const std::string& variant, int K)
{
    ScenarioReport r;
    r.id = "example_4_4_" + variant;
    r.params = {{"variant", variant}, {"K", K}};
    r.config = example_4_4_config(variant, K);
    OperatorSpec spec = spec_from_config(r.config);
    r.criteria = theorem_verdicts(spec);
    const Verdict& mol = r.criteria.condition("molchanov");
    const Verdict& meanq = r.criteria.condition("mean_q_divergence");
    if (variant == "i") {
        check_status(r, "molchanov", mol, Status::Holds);
        check_status(r, "mean_q_divergence", meanq, Status::Fails);
        double worst = 0;
        for (int k = 2; k <= spec.K(); k += 2)
            worst = std::max(worst, std::abs(cell_integrals(spec, k).q));
        check(r, "integral of q over the short cells", "0", fmt(worst), worst == 0);
    } else {
        check_status(r, "mean_q_divergence", meanq, Status::Holds);
        check_status(r, "molchanov", mol, Status::Fails);
        for (const Verdict& part : mol.parts) {
            if (part.id == "molchanov(eps=0.25)")
                check_status(r, "molchanov at eps=1/4", part, Status::Fails);
            if (part.id == "molchanov(eps=1)")
                check_status(r, "molchanov at eps=1", part, Status::Holds);
        }
        double worst = 0;
        json means = json::array();
        for (int k = 1; k <= spec.K(); ++k) {
            double m = cell_integrals(spec, k).q / spec.d(k);
            worst = std::max(worst, std::abs(m - (k - 0.75)) / k);
            if (k <= 5)
                means.push_back(m);
        }
        r.data["cell_means_head"] = means;
        check(r, "cell means equal k - 3/4", "relative deviation <= 1e-12", fmt(worst), worst <= 1e-12);
    }
    return r;
}

ScenarioReport run_sec24_example(const std::vector<int>& truncations, int jobs)
{
    if (truncations.size() < 2)
        invalid("InvalidParameter", "negative_pairs needs at least two truncations");
    ScenarioReport r;
    r.id = "negative_pairs";
    r.params = {{"truncations", truncations}};
    int kmax = *std::max_element(truncations.begin(), truncations.end());
    r.config = sec24_config(kmax);
    OperatorSpec spec = spec_from_config(r.config);
    r.criteria = theorem_verdicts(spec);

    check_status(r, "nec_inf_b", r.criteria.condition("nec_inf_b"), Status::Holds);
    check_status(r, "nec_1 with C=1", r.criteria.condition("nec_1"), Status::Holds);
    check_status(r, "nec_2", r.criteria.condition("nec_2"), Status::Fails);
    check_status(r, "semibounded", r.criteria.theorem("semibounded"), Status::Fails);
    const auto& cert = r.criteria.certificate;
    bool sound = cert && cert->quotients.size() >= 2 && cert->quotients.back() < -1e6;
    for (std::size_t i = 1; cert && i < cert->quotients.size(); ++i)
        sound = sound && cert->quotients[i] < cert->quotients[i - 1];
    check(r, "unboundedness certificate", "strictly decreasing quotients below -1e6",
          cert ? cert->family + ", last quotient " + fmt(cert->quotients.back()) : "none", sound);

    ShootingOptions so;
    so.jobs = jobs;
    std::vector<double> lowest;
    for (int K : truncations) {
        TruncatedProblem pb = make_problem(spec, BoundaryCondition::Neumann, K);
        double lo = spectrum_lower_bound(pb, so);
        Rung g;
        g.label = "K=" + std::to_string(K);
        g.K = K;
        g.spectrum = eigenvalues_shooting(pb, {lo, 0.0}, so);
        double low = g.spectrum.eigenvalues.empty() ? 0.0 : g.spectrum.eigenvalues.front();
        lowest.push_back(low);
        g.metrics = {{"lowest", low}, {"negative_count", static_cast<long long>(g.spectrum.eigenvalues.size())}};
        r.rungs.push_back(std::move(g));
    }
    check(r, "lowest eigenvalue at K=" + std::to_string(truncations[0]), "< -10", fmt(lowest[0]), lowest[0] < -10);
    bool decreasing = true;
    for (std::size_t i = 1; i < lowest.size(); ++i)
        decreasing = decreasing && lowest[i] < lowest[i - 1];
    check(r, "lowest eigenvalue decreases with K", "strictly decreasing", fmt_list(lowest), decreasing);
    return r;
}

ScenarioReport run_remark_2_7(int K)
{
    ScenarioReport r;
    r.id = "short_wells";
    r.params = {{"K", K}};
    r.config = remark_2_7_config(K);
    OperatorSpec spec = spec_from_config(r.config);
    r.criteria = theorem_verdicts(spec);

    check_status(r, "C0_finite", r.criteria.condition("C0_finite"), Status::Fails);
    double worst_mean = 0, worst_rq = 0;
    for (int k = 2; k <= spec.K(); k += 2) {
        double j = k / 2;
        worst_mean = std::max(worst_mean, std::abs(cell_integrals(spec, k).q_minus / spec.d(k) - j) / j);
        worst_rq = std::max(worst_rq, std::abs(indicator_form_value(spec, k) + j) / j);
    }
    check(r, "mean of q_- on the short cell 2k", "k", "relative deviation " + fmt(worst_mean), worst_mean <= 1e-12);
    check(r, "indicator energy on the short cell 2k", "-k", "relative deviation " + fmt(worst_rq), worst_rq <= 1e-12);

    const Verdict& brinck = r.criteria.condition("brinck_sup");
    bool bounded = brinck.limit && *brinck.limit <= 0.5 + 1e-9 && brinck.value && std::isfinite(*brinck.value);
    check(r, "unit-window integrals of q_-", "limsup <= 1/2",
          "limsup " + (brinck.limit ? fmt(*brinck.limit) : std::string("n/a")) + ", sup over truncation " +
              (brinck.value ? fmt(*brinck.value) : std::string("n/a")),
          bounded);
    check_status(r, "semibounded (Neumann realization)", r.criteria.theorem("semibounded"), Status::Fails);
    return r;
}

ScenarioReport run_remark_2_2(const std::vector<long long>& sums, int K_forms)
{
    if (sums.size() < 2 || K_forms < 2)
        invalid("InvalidParameter", "ramp scenario needs two partial-sum sizes and K_forms >= 2");
    ScenarioReport r;
    r.id = "ramp";
    r.params = {{"sums", sums}, {"K_forms", K_forms}};

    // d_k = k^-1/2, beta_1 = -1/2, beta_k = -d_k, a_k = d_k
    json cfg;
    cfg["name"] = "ramp";
    cfg["partition"] = {{"generator", {{"kind", "sum_power"}, {"exponent", 0.5}, {"count", K_forms}}}};
    json betas = json::array();
    betas.push_back(-0.5);
    for (int k = 2; k <= K_forms; ++k)
        betas.push_back(-std::pow(static_cast<double>(k), -0.5));
    cfg["strengths"] = {{"values", betas}};
    r.config = cfg;
    OperatorSpec spec = spec_from_config(cfg);
    r.criteria = theorem_verdicts(spec);

    // f = x^2/2 on the first cell, slope-one ramps from zero on the others
    std::vector<Segment> segs;
    segs.push_back(Segment{0.0, spec.x(1), {0.0, 0.0, 0.5, 0.0}});
    for (int k = 2; k <= spec.K(); ++k)
        segs.push_back(Segment{spec.x(k - 1), spec.x(k), {0.0, 1.0, 0.0, 0.0}});
    PiecewiseFunction f = make_function(spec, segs);
    double residual = 0;
    for (int k = 1; k < spec.K(); ++k) {
        const Trace& t = f.traces[k - 1];
        residual = std::max({residual, std::abs(t.df_plus - t.df_minus),
                             std::abs((t.f_plus - t.f_minus) - spec.beta(k) * t.df_minus)});
    }
    check(r, "interface conditions of the ramp", "residual <= 1e-12", fmt(residual), residual <= 1e-12);

    FormBreakdown fb = form_energy(spec, f);
    long double n2 = 1.0L / 20, d2 = 1.0L / 3;
    for (int k = 2; k <= spec.K(); ++k) {
        long double d = std::pow(static_cast<long double>(k), -0.5L);
        n2 += d * d * d / 3;
        d2 += d;
    }
    double e1 = std::abs(fb.norm2 - static_cast<double>(n2)) / static_cast<double>(n2);
    double e2 = std::abs(fb.dirichlet - static_cast<double>(d2)) / static_cast<double>(d2);
    r.data["forms"] = {{"K", spec.K()}, {"norm2", fb.norm2}, {"dirichlet", fb.dirichlet}};
    check(r, "form integrals match the series at K=" + std::to_string(spec.K()), "relative error <= 1e-10",
          fmt(std::max(e1, e2)), std::max(e1, e2) <= 1e-10);

    // partial sums of 1/3 sum a_k^2 d_k and sum a_k^2 / d_k
    std::vector<long long> ks = sums;
    std::sort(ks.begin(), ks.end());
    json table = json::array();
    std::vector<double> s_norm, s_der;
    long double a = 0, b = 0;
    long long k = 0;
    for (long long target : ks) {
        for (; k < target;) {
            ++k;
            long double d = 1.0L / std::sqrt(static_cast<long double>(k));
            a += d * d * d / 3;
            b += d;
        }
        s_norm.push_back(static_cast<double>(a));
        s_der.push_back(static_cast<double>(b));
        table.push_back({{"K", target}, {"norm2", static_cast<double>(a)}, {"dirichlet", static_cast<double>(b)}});
    }
    r.data["partial_sums"] = table;
    const double third_zeta = 2.612375348685488343 / 3;  // zeta(3/2) / 3
    std::size_t i4 = 0;
    for (std::size_t i = 0; i < ks.size(); ++i)
        if (ks[i] <= 10000)
            i4 = i;
    double rel = std::abs(s_norm[i4] - third_zeta) / third_zeta;
    check(r, "norm partial sum at K=" + std::to_string(ks[i4]), "within 1% of zeta(3/2)/3", fmt(rel), rel <= 0.01);
    std::size_t n = ks.size();
    double ratio = s_der[n - 1] / s_der[n - 2];
    double expect = std::sqrt(static_cast<double>(ks[n - 1]) / static_cast<double>(ks[n - 2]));
    check(r, "derivative partial sums grow like sqrt(K)", "ratio within 5% of " + fmt(expect), fmt(ratio),
          std::abs(ratio / expect - 1) <= 0.05);
    bool converging = s_norm[n - 1] - s_norm[n - 2] < s_norm[1] - s_norm[0] || n == 2;
    check(r, "norm partial sums converge", "increments shrink", fmt_list(s_norm),
          converging && s_norm[n - 1] < third_zeta);
    return r;
}

ScenarioReport run_h_stability(const json& config, const std::vector<double>& hs, const LadderOptions& ladder,
                               double cutoff, double delta)
{
    if (hs.empty() || ladder.truncations.empty())
        invalid("InvalidParameter", "h_stability needs a non-empty h list and truncations");
    for (double h : hs)
        if (!(h > 0) || !std::isfinite(h))
            invalid("InvalidParameter", "h values must be positive and finite");
    ScenarioReport r;
    r.id = "h_stability";
    r.config = config;
    OperatorSpec base = spec_from_config(config);
    if (cutoff <= 0)
        cutoff = 4 * kPi * kPi - 1;
    r.params = {{"h", hs}, {"cutoff", cutoff}, {"delta", delta}, {"truncations", ladder.truncations}};
    r.criteria = theorem_verdicts(base);
    const Verdict& coup = r.criteria.condition("coupling_vanishes");
    const Verdict& stable = r.criteria.theorem("h_stable");

    std::optional<EssSpectrumModel> pred;
    try {
        pred = predict_ess(base, cutoff);
    } catch (const Error& e) {
        r.data["prediction_error"] = e.what();
    }
    r.prediction = pred;

    json per_h = json::array();
    bool same_coupling = true, same_stable = true, same_prediction = true;
    ShootingOptions so;
    so.jobs = ladder.jobs;
    std::vector<const Rung*> last_rungs;
    std::vector<std::size_t> last_index;
    for (double h : hs) {
        OperatorSpec sp = scale_strengths(base, h);
        CriterionReport cr = theorem_verdicts(sp, 1.0);
        const Verdict& c = cr.condition("coupling_vanishes");
        const Verdict& s = cr.theorem("h_stable");
        same_coupling = same_coupling && c.status == coup.status;
        same_stable = same_stable && s.status == stable.status;
        json entry = {{"h", h}, {"coupling_vanishes", status_name(c.status)}, {"h_stable", status_name(s.status)}};
        if (pred) {
            EssSpectrumModel m = predict_ess(sp, cutoff);
            same_prediction = same_prediction && m.points == pred->points;
            entry["prediction"] = m.points;
        }
        per_h.push_back(entry);
        if (!pred)
            continue;
        for (int K : ladder.truncations) {
            TruncatedProblem pb = make_problem(sp, BoundaryCondition::Neumann, K);
            double lo = spectrum_lower_bound(pb, so);
            Rung g;
            g.label = "h=" + fmt(h) + " K=" + std::to_string(K);
            g.K = K;
            g.spectrum = eigenvalues_shooting(pb, {lo, cutoff}, so);
            g.metrics = cluster_metrics(g.spectrum.eigenvalues, pred->points, delta, lo, cutoff);
            g.metrics["h"] = h;
            r.rungs.push_back(std::move(g));
        }
        last_index.push_back(r.rungs.size() - 1);
    }
    r.data["per_h"] = per_h;

    check(r, "coupling verdict independent of h", "identical for every h",
          status_name(coup.status) + (same_coupling ? " for every h" : " at h=1 but differs for some h"), same_coupling);
    if (coup.holds()) {
        check_status(r, "h_stable", stable, Status::Holds);
        check(r, "predicted essential spectrum independent of h", "identical for every h",
              same_prediction ? "identical" : "differs", same_prediction && pred.has_value());
        if (pred && last_index.size() >= 2 && ladder.truncations.size() >= 2) {
            // each cluster must grow with K at the same rate for every h; the finite deficit may differ
            for (std::size_t p = 0; p < pred->points.size(); ++p) {
                std::vector<long long> growth;
                std::string obs;
                for (std::size_t idx : last_index) {
                    long long a = r.rungs[idx - 1].metrics.at("clusters").at(p).at("count").get<long long>();
                    long long b = r.rungs[idx].metrics.at("clusters").at(p).at("count").get<long long>();
                    growth.push_back(b - a);
                    obs += (obs.empty() ? "" : ", ") + std::to_string(b - a);
                }
                auto [mn, mx] = std::minmax_element(growth.begin(), growth.end());
                check(r, "growth of the cluster near " + fmt(pred->points[p]) + " independent of h",
                      "spread <= max(" + fmt(ladder.stable_abs) + ", " + fmt(ladder.stable_rel) + " * growth)", obs,
                      count_stable(*mn, *mx, ladder));
            }
        }
    } else {
        bool all_negative = std::all_of(base.betas().begin(), base.betas().end(), [](double b) { return b < 0; });
        r.data["necessity_direction"] = all_negative;
        check_status(r, "h_stable", stable, all_negative ? Status::Fails : Status::Inconclusive);
    }
    check(r, "h_stable verdict independent of h", "identical for every h", same_stable ? "identical" : "differs",
          same_stable);
    return r;
}

// ---------------------------------------------------------------- named runs

namespace {

class Params {
public:
    explicit Params(const std::map<std::string, std::string>& p) : p_(p) {}

    double number(const std::string& key, double fallback)
    {
        auto it = take(key);
        if (!it)
            return fallback;
        try {
            std::size_t used = 0;
            double v = std::stod(*it, &used);
            if (used != it->size())
                throw std::invalid_argument(key);
            return v;
        } catch (const std::exception&) {
            invalid("InvalidParameter", "parameter '" + key + "' must be a number, got '" + *it + "'");
        }
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> fallback)
    {
        auto it = take(key);
        if (!it)
            return fallback;
        std::vector<double> out;
        std::stringstream ss(*it);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                out.push_back(std::stod(item));
            } catch (const std::exception&) {
                invalid("InvalidParameter", "parameter '" + key + "' must be a comma-separated list of numbers");
            }
        }
        if (out.empty())
            invalid("InvalidParameter", "parameter '" + key + "' is empty");
        return out;
    }

    std::vector<int> ints(const std::string& key, std::vector<int> fallback)
    {
        std::vector<double> fb(fallback.begin(), fallback.end());
        std::vector<int> out;
        for (double v : numbers(key, fb)) {
            if (v != std::floor(v) || v < 1 || v > 1e7)
                invalid("InvalidParameter", "parameter '" + key + "' must list positive integers");
            out.push_back(static_cast<int>(v));
        }
        return out;
    }

    std::string text(const std::string& key, const std::string& fallback)
    {
        auto it = take(key);
        return it ? *it : fallback;
    }

    void finish() const
    {
        for (const auto& [k, v] : p_)
            if (!used_.count(k))
                invalid("UnknownParameter", "unknown scenario parameter '" + k + "'");
    }

private:
    std::optional<std::string> take(const std::string& key)
    {
        used_[key] = true;
        auto it = p_.find(key);
        if (it == p_.end())
            return std::nullopt;
        return it->second;
    }

    const std::map<std::string, std::string>& p_;
    std::map<std::string, bool> used_;
};

LadderOptions ladder_from(Params& ps, int jobs, std::vector<int> fallback = {50, 100, 200})
{
    LadderOptions l;
    l.truncations = ps.ints("K", fallback);
    l.stable_abs = ps.number("stable_abs", l.stable_abs);
    l.stable_rel = ps.number("stable_rel", l.stable_rel);
    l.jobs = jobs;
    return l;
}

}  // namespace

std::vector<std::string> scenario_names()
{
    return {"kronig_penney", "shrinking_cells", "example_4_4_i", "example_4_4_ii",
            "negative_pairs", "short_wells",    "ramp",          "h_stability"};
}

ScenarioReport run_scenario(const std::string& name, const std::map<std::string, std::string>& params, int jobs)
{
    Params ps(params);
    ScenarioReport r;
    if (name == "kronig_penney") {
        KronigPenneyParams p;
        p.a = ps.number("a", p.a);
        p.c = ps.number("c", p.c);
        p.beta_coeff = ps.number("beta_coeff", p.beta_coeff);
        p.beta_exponent = ps.number("beta_exponent", p.beta_exponent);
        p.cutoff = ps.number("cutoff", p.cutoff);
        p.delta = ps.number("delta", p.delta);
        LadderOptions l = ladder_from(ps, jobs);
        ps.finish();
        r = run_kronig_penney(p, l);
    } else if (name == "shrinking_cells") {
        ShrinkingCellsParams p;
        p.p = ps.number("p", p.p);
        p.beta_coeff = ps.number("beta_coeff", p.beta_coeff);
        p.beta_exponent = ps.number("beta_exponent", p.beta_exponent);
        p.cutoff = ps.number("cutoff", p.cutoff);
        p.probe = ps.number("probe", p.probe);
        LadderOptions l = ladder_from(ps, jobs);
        ps.finish();
        r = run_shrinking_cells(p, l);
    } else if (name == "example_4_4_i" || name == "example_4_4_ii") {
        int K = static_cast<int>(ps.number("K", 200));
        ps.finish();
        r = run_example_4_4(name == "example_4_4_i" ? "i" : "ii", K);
    } else if (name == "negative_pairs") {
        std::vector<int> ks = ps.ints("K", {20, 40});
        ps.finish();
        r = run_sec24_example(ks, jobs);
    } else if (name == "short_wells") {
        int K = static_cast<int>(ps.number("K", 200));
        ps.finish();
        r = run_remark_2_7(K);
    } else if (name == "ramp") {
        std::vector<double> s = ps.numbers("sums", {1000, 10000, 100000});
        int kf = static_cast<int>(ps.number("K_forms", 1000));
        ps.finish();
        std::vector<long long> sums;
        for (double v : s) {
            if (v != std::floor(v) || v < 1 || v > 1e9)
                invalid("InvalidParameter", "sums must list positive integers");
            sums.push_back(static_cast<long long>(v));
        }
        r = run_remark_2_2(sums, kf);
    } else if (name == "h_stability") {
        std::string beta = ps.text("beta", "linear");
        std::vector<double> hs = ps.numbers("h", {0.5, 1, 2});
        double cutoff = ps.number("cutoff", 0);
        double delta = ps.number("delta", 1);
        LadderOptions l = ladder_from(ps, jobs, {50, 100});
        ps.finish();
        KronigPenneyParams kp;
        if (beta == "linear") {
            kp.beta_coeff = 1;
            kp.beta_exponent = 1;
        } else if (beta == "neg_const") {
            kp.beta_coeff = -1;
            kp.beta_exponent = 0;
        } else if (beta == "neg_linear") {
            kp.beta_coeff = -1;
            kp.beta_exponent = 1;
        } else {
            invalid("InvalidParameter", "beta must be linear, neg_const or neg_linear");
        }
        json cfg = kronig_penney_config(kp, *std::max_element(l.truncations.begin(), l.truncations.end()));
        cfg["name"] = "h_stability_" + beta;
        r = run_h_stability(cfg, hs, l, cutoff, delta);
        r.params["beta"] = beta;
    } else {
        std::string all;
        for (const auto& n : scenario_names())
            all += (all.empty() ? "" : ", ") + n;
        invalid("UnknownScenario", "unknown scenario '" + name + "' (available: " + all + ")");
    }
    return r;
}

}  // namespace dspec
