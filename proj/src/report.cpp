#include "dspec/report.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace dspec {

namespace {

bool is_wrapped(const json& j)
{
    return j.is_object() && j.size() == 2 && j.contains("value") && j.contains("err");
}

json opt_num(const std::optional<double>& v, double err = 0)
{
    return v ? num(*v, err) : json(nullptr);
}

std::string pad(const std::string& s, std::size_t w)
{
    return s.size() >= w ? s + " " : s + std::string(w - s.size(), ' ');
}

struct Group {
    double value = 0, err = 0;
    int multiplicity = 0;
};

std::vector<Group> group_values(const SpectralResult& r, double rel)
{
    std::vector<Group> out;
    for (std::size_t i = 0; i < r.eigenvalues.size(); ++i) {
        double v = r.eigenvalues[i];
        double e = i < r.errors.size() ? r.errors[i] : 0.0;
        if (!out.empty() && std::abs(v - out.back().value) <= rel * std::max(1.0, std::abs(v))) {
            out.back().multiplicity++;
            out.back().err = std::max(out.back().err, e);
        } else {
            out.push_back({v, e, 1});
        }
    }
    return out;
}

}  // namespace

json num(double value, double err)
{
    auto enc = [](double v) -> json {
        if (std::isnan(v))
            return "nan";
        if (std::isinf(v))
            return v > 0 ? "inf" : "-inf";
        return v;
    };
    return {{"value", enc(value)}, {"err", enc(err)}};
}

json wrap_numbers(const json& j)
{
    if (j.is_number_float())
        return num(j.get<double>());
    if (is_wrapped(j))
        return j;
    if (j.is_array()) {
        json out = json::array();
        for (const auto& e : j)
            out.push_back(wrap_numbers(e));
        return out;
    }
    if (j.is_object()) {
        json out = json::object();
        for (const auto& [k, v] : j.items())
            out[k] = wrap_numbers(v);
        return out;
    }
    return j;
}

json verdict_json(const Verdict& v)
{
    json j;
    j["id"] = v.id;
    j["status"] = status_name(v.status);
    j["value"] = opt_num(v.value);
    // a limit is an extrapolation; its error is the distance to the last evaluated sample
    double lim_err = 0;
    if (v.limit && !v.trend.empty() && std::isfinite(*v.limit))
        lim_err = std::abs(*v.limit - v.trend.back().second);
    j["limit"] = opt_num(v.limit, lim_err);
    if (v.witness)
        j["witness"] = {{"where", v.witness->where},
                        {"index", num(v.witness->index)},
                        {"value", num(v.witness->value)},
                        {"detail", v.witness->detail}};
    else
        j["witness"] = nullptr;
    json trend = json::array();
    for (const auto& [i, x] : v.trend)
        trend.push_back({{"index", num(i)}, {"value", num(x)}});
    j["trend"] = trend;
    j["source"] = v.source;
    j["reason"] = v.reason;
    if (!v.parts.empty()) {
        json parts = json::array();
        for (const Verdict& p : v.parts)
            parts.push_back(verdict_json(p));
        j["parts"] = parts;
    }
    return j;
}

json criterion_report_json(const CriterionReport& r)
{
    json j;
    j["C"] = num(r.C);
    json eps = json::array();
    for (double e : r.epsilons)
        eps.push_back(num(e));
    j["epsilons"] = eps;
    json conds = json::array(), thms = json::array();
    for (const Verdict& v : r.conditions)
        conds.push_back(verdict_json(v));
    for (const Verdict& v : r.theorems)
        thms.push_back(verdict_json(v));
    j["conditions"] = conds;
    j["theorems"] = thms;
    if (r.certificate) {
        json q = json::array();
        for (double x : r.certificate->quotients)
            q.push_back(num(x, 1e-12 * std::max(1.0, std::abs(x))));
        j["certificate"] = {{"family", r.certificate->family}, {"indices", r.certificate->indices}, {"quotients", q}};
    } else {
        j["certificate"] = nullptr;
    }
    return j;
}

std::string criterion_report_text(const CriterionReport& r)
{
    std::ostringstream os;
    auto line = [&](const Verdict& v, const std::string& indent) {
        os << indent << pad(v.id, 32 - indent.size()) << pad(status_name(v.status), 14);
        if (v.value)
            os << "value " << format_double(*v.value) << "  ";
        if (v.limit)
            os << "limit " << format_double(*v.limit) << "  ";
        if (v.witness)
            os << "witness " << v.witness->where << (v.witness->detail.empty() ? "" : ": " + v.witness->detail);
        else if (!v.reason.empty())
            os << "reason: " << v.reason;
        else if (!v.source.empty())
            os << "from " << v.source;
        os << "\n";
    };
    os << "conditions (C = " << format_double(r.C) << ")\n";
    for (const Verdict& v : r.conditions) {
        line(v, "  ");
        for (const Verdict& p : v.parts)
            line(p, "    ");
    }
    os << "theorems\n";
    for (const Verdict& v : r.theorems)
        line(v, "  ");
    if (r.certificate) {
        os << "certificate: " << r.certificate->family << " test functions, quotients";
        for (double q : r.certificate->quotients)
            os << " " << format_double(q);
        os << "\n";
    }
    return os.str();
}

json form_json(const FormBreakdown& f, double rayleigh)
{
    double scale = 1e-14 * (std::abs(f.dirichlet) + std::abs(f.potential) + f.jump_plus + f.jump_minus + 1);
    return {{"dirichlet", num(f.dirichlet, scale)},   {"potential", num(f.potential, scale)},
            {"jump_plus", num(f.jump_plus, scale)},   {"jump_minus", num(f.jump_minus, scale)},
            {"total", num(f.total, scale)},           {"norm2", num(f.norm2, scale)},
            {"rayleigh_quotient", num(rayleigh, scale / std::max(f.norm2, 1e-300))}};
}

json spectral_json(const SpectralResult& r, double rel_merge)
{
    json eig = json::array();
    int index = 0;
    for (const Group& g : group_values(r, rel_merge))
        eig.push_back({{"index", index++}, {"lambda", num(g.value, g.err)}, {"multiplicity", g.multiplicity}});
    json counting = json::array();
    for (const auto& [l, n] : r.counting)
        counting.push_back({{"lambda", num(l)}, {"count", n}});
    return {{"method", r.method}, {"eigenvalues", eig}, {"counting", counting}};
}

json ess_json(const EssSpectrumModel& m)
{
    json D = json::array(), pts = json::array();
    for (double d : m.D)
        D.push_back(num(d));
    for (double p : m.points)
        pts.push_back(num(p, 1e-15 * std::max(1.0, p)));
    return {{"D", D}, {"points", pts}, {"provenance", m.provenance}};
}

json engine_comparison_json(const EngineComparison& c, int n)
{
    json rows = json::array();
    const SpectralResult* rs[] = {&c.shooting, &c.galerkin, &c.oracle};
    std::size_t k = std::min({c.shooting.eigenvalues.size(), c.galerkin.eigenvalues.size(),
                              c.oracle.eigenvalues.size(), static_cast<std::size_t>(n)});
    for (std::size_t i = 0; i < k; ++i) {
        json row = {{"index", static_cast<long long>(i)}};
        double worst = 0;
        for (const SpectralResult* r : rs) {
            row[r->method] = num(r->eigenvalues[i], r->errors[i]);
            double ref = c.shooting.eigenvalues[i];
            worst = std::max(worst, std::abs(r->eigenvalues[i] - ref) / std::max(1.0, std::abs(ref)));
        }
        row["max_rel_discrepancy"] = num(worst);
        rows.push_back(row);
    }
    return {{"window", {{"lo", num(c.window.lo)}, {"hi", num(c.window.hi)}}},
            {"rows", rows},
            {"counts", {{"shooting", c.count_shooting}, {"galerkin", c.count_galerkin}, {"oracle", c.count_oracle}}},
            {"counts_agree", c.counts_agree()},
            {"worst_relative", num(c.worst_relative)}};
}

json scenario_json(const ScenarioReport& r)
{
    json j;
    j["scenario"] = r.id;
    j["passed"] = r.passed();
    j["params"] = wrap_numbers(r.params);
    j["config_hash"] = config_hash(r.config);
    json checks = json::array();
    for (const ScenarioCheck& c : r.checks)
        checks.push_back({{"name", c.name}, {"expected", c.expected}, {"observed", c.observed}, {"passed", c.passed}});
    j["checks"] = checks;
    j["criteria"] = criterion_report_json(r.criteria);
    j["prediction"] = r.prediction ? ess_json(*r.prediction) : json(nullptr);
    json rungs = json::array();
    for (const Rung& g : r.rungs) {
        json s = spectral_json(g.spectrum);
        rungs.push_back({{"label", g.label},
                         {"K", g.K},
                         {"metrics", wrap_numbers(g.metrics)},
                         {"eigenvalue_count", static_cast<long long>(g.spectrum.eigenvalues.size())},
                         {"counting", s["counting"]}});
    }
    j["rungs"] = rungs;
    j["data"] = wrap_numbers(r.data);
    return j;
}

std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string spectrum_csv(const std::vector<SpectralResult>& results, double rel_merge)
{
    std::string out = "index,lambda,multiplicity,engine,err_est\n";
    for (const SpectralResult& r : results) {
        int index = 0;
        for (const Group& g : group_values(r, rel_merge))
            out += std::to_string(index++) + "," + format_double(g.value) + "," + std::to_string(g.multiplicity) +
                   "," + r.method + "," + format_double(g.err) + "\n";
    }
    return out;
}

std::string direct_sum_csv(const std::vector<DirectSumPoint>& points)
{
    std::string out = "lambda,multiplicity,cells\n";
    for (const DirectSumPoint& p : points) {
        std::string cells;
        for (int c : p.cells)
            cells += (cells.empty() ? "" : ";") + std::to_string(c);
        out += format_double(p.lambda) + "," + std::to_string(p.multiplicity) + "," + cells + "\n";
    }
    return out;
}

long long manifest_clock()
{
    if (const char* e = std::getenv("SOURCE_DATE_EPOCH")) {
        char* end = nullptr;
        long long v = std::strtoll(e, &end, 10);
        if (end && *end == '\0')
            return v;
    }
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

json manifest_json(const RunManifest& m, long long started, long long finished)
{
    return {{"command", m.command},
            {"config_hash", m.config_hash},
            {"parameters", wrap_numbers(m.parameters)},
            {"tool_version", kToolVersion},
            {"started_unix", started},
            {"finished_unix", finished},
            {"outputs", m.outputs}};
}

}  // namespace dspec
