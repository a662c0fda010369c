#include "dspec/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "dspec/asymptotics.hpp"
#include "dspec/errors.hpp"
#include "dspec/forms.hpp"
#include "dspec/windows.hpp"

namespace dspec {

namespace {

using Seq = std::function<double(long long)>;

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

// Window integrals lose about |q| * ulp(x) to rounding of the window ends, which
// swamps the trend far out; window probes stop at group 10^7.
constexpr int kWindowProbeExponent = 7;

double binv(const OperatorSpec& spec, long long k) { return k == 0 ? 0.0 : spec.beta_inv_any(k); }

// Negative and positive parts of 1/beta; beta = 0 contributes +inf to the positive part.
double binv_minus(double bi) { return bi < 0 ? -bi : 0.0; }
double binv_plus(double bi) { return bi > 0 ? bi : 0.0; }

double d_next(const OperatorSpec& spec, long long k)
{
    if (k < spec.K() || spec.partition_extends())
        return spec.d_any(k + 1);
    return spec.d(spec.K());
}

double min_adjacent(const OperatorSpec& spec, long long k) { return std::min(spec.d_any(k), d_next(spec, k)); }

std::vector<double> truncation_values(const OperatorSpec& spec, const Seq& f)
{
    std::vector<double> v;
    v.reserve(spec.K());
    for (int k = 1; k <= spec.K(); ++k)
        v.push_back(f(k));
    return v;
}

std::vector<std::pair<double, double>> last_decile(const std::vector<double>& v)
{
    std::vector<std::pair<double, double>> out;
    std::size_t n = v.size();
    std::size_t start = n - std::max<std::size_t>(1, n / 10);
    std::size_t step = std::max<std::size_t>(1, (n - start) / 10);
    for (std::size_t i = start; i < n; i += step)
        out.emplace_back(static_cast<double>(i + 1), v[i]);
    if (out.empty() || out.back().first != static_cast<double>(n))
        out.emplace_back(static_cast<double>(n), v.back());
    return out;
}

std::string trend_text(const std::vector<std::pair<double, double>>& t)
{
    std::ostringstream os;
    os << "truncation values:";
    for (const auto& [k, v] : t)
        os << " k=" << k << ":" << fmt(v);
    return os.str();
}

struct Probe {
    bool available = false;
    std::vector<LimitEstimate> est;
};

Probe probe(const OperatorSpec& spec, const Seq& f)
{
    Probe p;
    p.est = probe_all(f, spec.structure_period());
    p.available = std::all_of(p.est.begin(), p.est.end(), [](const LimitEstimate& e) { return e.samples.size() >= 4; });
    return p;
}

void add_probe_samples(Verdict& v, const Probe& p)
{
    for (const auto& e : p.est)
        if (!e.samples.empty())
            v.trend.push_back(e.samples.back());
}

Witness probe_witness(const LimitEstimate& e, int period)
{
    Witness w;
    w.index = e.samples.empty() ? 0 : e.samples.back().first;
    w.value = e.samples.empty() ? 0 : e.samples.back().second;
    w.where = "k=" + fmt(w.index) + (period > 1 ? " (k mod " + std::to_string(period) + " = " +
                                                      std::to_string(e.residue % period) + ")"
                                                : "");
    w.detail = e.describe();
    return w;
}

Witness declared_witness(double v, const std::string& name)
{
    return Witness{"declared " + name, 0, v, "tail declaration " + name + " = " + (std::isinf(v) ? "inf" : fmt(v))};
}

// lim f(k) = +inf (to_infinity) or lim f(k) = 0.
Verdict limit_verdict(const OperatorSpec& spec, const std::string& id, const Seq& f, std::optional<double> decl,
                      const std::string& decl_name, bool to_infinity)
{
    Verdict v;
    v.id = id;
    std::vector<double> vals = truncation_values(spec, f);
    v.trend = last_decile(vals);
    if (decl) {
        v.source = "declaration " + decl_name;
        v.limit = *decl;
        bool ok = to_infinity ? (std::isinf(*decl) && *decl > 0) : (*decl == 0);
        v.status = ok ? Status::Holds : Status::Fails;
        if (!ok)
            v.witness = declared_witness(*decl, decl_name);
        return v;
    }
    Probe p = probe(spec, f);
    if (!p.available) {
        v.reason = "no tail declaration (" + decl_name + ") and no generator for the tail; " + trend_text(v.trend);
        return v;
    }
    add_probe_samples(v, p);
    v.source = "generator probe";
    int P = spec.structure_period();
    bool all_ok = true;
    for (const LimitEstimate& e : p.est) {
        bool ok = to_infinity ? e.trend == Trend::DivergesUp : e.converges_to_zero();
        bool bad = to_infinity ? (e.trend == Trend::Converges || e.trend == Trend::DivergesDown)
                               : (e.trend == Trend::DivergesUp || e.trend == Trend::DivergesDown ||
                                  (e.trend == Trend::Converges && !e.converges_to_zero()));
        if (bad) {
            v.status = Status::Fails;
            v.witness = probe_witness(e, P);
            if (e.trend == Trend::Converges)
                v.limit = e.limit;
            return v;
        }
        all_ok = all_ok && ok;
    }
    if (all_ok) {
        v.status = Status::Holds;
        if (!to_infinity)
            v.limit = 0.0;
        return v;
    }
    v.reason = "generator probe shows no clear trend";
    for (const LimitEstimate& e : p.est)
        v.reason += "; residue " + std::to_string(e.residue) + ": " + e.describe();
    return v;
}

// sup_k f(k) < inf.
Verdict sup_verdict(const OperatorSpec& spec, const std::string& id, const Seq& f, std::optional<double> decl,
                    const std::string& decl_name)
{
    Verdict v;
    v.id = id;
    std::vector<double> vals = truncation_values(spec, f);
    auto it = std::max_element(vals.begin(), vals.end());
    long long argmax = (it - vals.begin()) + 1;
    double mx = *it;
    v.value = mx;
    v.trend = last_decile(vals);
    Witness at_max{"k=" + std::to_string(argmax), static_cast<double>(argmax), mx, "largest value over the truncation"};
    if (std::isinf(mx) && mx > 0) {
        v.status = Status::Fails;
        v.witness = at_max;
        v.source = "truncation";
        return v;
    }
    if (decl) {
        v.source = "declaration " + decl_name;
        if (std::isinf(*decl)) {
            v.status = Status::Fails;
            v.witness = declared_witness(*decl, decl_name);
        } else {
            v.status = Status::Holds;
            v.value = std::max(mx, *decl);
        }
        return v;
    }
    Probe p = probe(spec, f);
    if (p.available) {
        add_probe_samples(v, p);
        bool bounded = true;
        for (const LimitEstimate& e : p.est) {
            if (e.trend == Trend::DivergesUp) {
                v.status = Status::Fails;
                v.source = "generator probe";
                v.witness = probe_witness(e, spec.structure_period());
                return v;
            }
            if (e.trend == Trend::Unknown)
                bounded = false;
        }
        if (bounded) {
            double lim = -kInf;
            for (const LimitEstimate& e : p.est) {
                if (e.trend == Trend::Converges) {
                    lim = std::max(lim, e.limit);
                    for (const auto& s : e.samples)
                        v.value = std::max(*v.value, s.second);
                }
            }
            v.value = std::max(*v.value, lim);
            if (std::isfinite(lim))
                v.limit = lim;
            v.status = Status::Holds;
            v.source = "generator probe";
            return v;
        }
    }
    std::size_t n = vals.size();
    if (n >= 8) {
        double first = *std::max_element(vals.begin(), vals.begin() + n / 2);
        double second = *std::max_element(vals.begin() + n / 2, vals.end());
        if (second <= first) {
            v.status = Status::Holds;
            v.source = "truncation plateau";
            return v;
        }
    }
    v.reason = "no tail declaration (" + decl_name + ") or generator, and the truncation maximum keeps growing; " +
               trend_text(v.trend);
    return v;
}

double cell_mean(const OperatorSpec& spec, long long k, double CellIntegrals::*field)
{
    return spec.cell_integrals_any(k).*field / spec.d_any(k);
}

double max_abs_on_cell(const OperatorSpec& spec, long long k)
{
    double m = 0;
    for (const LocalPiece& p : spec.cell_local_pieces_any(k))
        m = std::max({m, std::abs(p.a0 + p.a1 * p.u0), std::abs(p.a0 + p.a1 * p.u1)});
    return m;
}

// ---------------------------------------------------------------- window conditions

// Groups of window starts: unit x-intervals for global potentials, P-cell groups otherwise.
std::optional<WindowExtremum> window_group(const OperatorSpec& spec, long long j, double eps, bool minimum,
                                           bool negative)
{
    if (!spec.potential_global())
        return group_window(spec, j, spec.structure_period(), eps, minimum, negative);
    std::vector<LocalPiece> q;
    double a = static_cast<double>(j - 1);
    spec.potential_generator()->pieces(a, 1.0 + eps, q);
    if (negative)
        q = negative_part(q);
    WindowExtremum e = minimum ? window_min(q, eps, 0, 1) : window_max(q, eps, 0, 1);
    e.x += a;
    return e;
}

// Group extrema over the truncation: groups whose windows stay inside [0, x_K].
std::vector<std::pair<double, WindowExtremum>> truncation_groups(const OperatorSpec& spec, double eps, bool minimum,
                                                                 bool negative)
{
    std::vector<std::pair<double, WindowExtremum>> out;
    double xK = spec.x(spec.K());
    bool global = spec.potential_global();
    int P = spec.structure_period();
    long long groups = global ? static_cast<long long>(std::floor(xK - eps)) : spec.K() / P;
    long long step = std::max<long long>(1, groups / 20000);
    for (long long j = 1; j <= groups; j += step) {
        if (!global && spec.x_any(j * P) + eps > xK)
            break;
        auto e = window_group(spec, j, eps, minimum, negative);
        if (!e)
            break;
        out.emplace_back(static_cast<double>(j), *e);
    }
    return out;
}

Verdict molchanov_eps(const OperatorSpec& spec, double eps)
{
    Verdict v;
    v.id = "molchanov(eps=" + fmt(eps) + ")";
    auto groups = truncation_groups(spec, eps, true, false);
    for (std::size_t i = groups.size() - std::min<std::size_t>(groups.size(), 10); i < groups.size(); ++i)
        v.trend.emplace_back(groups[i].second.x, groups[i].second.value);
    const TailSpec& t = spec.tail();
    if (t.molchanov) {
        v.source = "declaration molchanov";
        v.limit = *t.molchanov;
        if (std::isinf(*t.molchanov) && *t.molchanov > 0) {
            v.status = Status::Holds;
        } else {
            v.status = Status::Fails;
            v.witness = declared_witness(*t.molchanov, "molchanov");
        }
        return v;
    }
    const PotentialGenerator* g = spec.potential_generator();
    if (g && g->periodic_bounded()) {
        v.status = Status::Fails;
        v.source = "periodic potential";
        auto e = window_group(spec, 1, eps, true, false);
        Witness w{"eps=" + fmt(eps), eps, e ? e->value : 0.0,
                  "periodic potential with bounded coefficients: window integrals stay bounded"};
        if (e)
            w.where += " x=" + fmt(e->x);
        v.witness = w;
        return v;
    }
    Seq f = [&](long long j) {
        auto e = window_group(spec, j, eps, true, false);
        if (!e)
            undecidable("UndecidableTail", "no data");
        return e->value;
    };
    LimitEstimate est = probe_residue(f, 1, 1, kWindowProbeExponent);
    if (est.samples.size() < 4) {
        v.reason = "no tail declaration (molchanov) and no generator for the potential tail";
        return v;
    }
    v.source = "generator probe";
    for (const auto& s : est.samples)
        v.trend.push_back(s);
    if (est.trend == Trend::DivergesUp) {
        v.status = Status::Holds;
        return v;
    }
    if (est.trend == Trend::Converges || est.trend == Trend::DivergesDown) {
        v.status = Status::Fails;
        auto e = window_group(spec, static_cast<long long>(est.samples.back().first), eps, true, false);
        Witness w{"eps=" + fmt(eps), eps, est.samples.back().second, "window minimum " + est.describe()};
        if (e)
            w.where += " x=" + fmt(e->x);
        v.witness = w;
        if (est.trend == Trend::Converges)
            v.limit = est.limit;
        return v;
    }
    v.reason = "window minima show no clear trend: " + est.describe();
    return v;
}

// ---------------------------------------------------------------- necessary conditions

struct StepData {
    std::vector<double> S;  // S[k] = integral of q over [0, x_k]
};

StepData step_data(const OperatorSpec& spec)
{
    StepData s;
    s.S.assign(spec.K() + 1, 0.0);
    for (int k = 1; k <= spec.K(); ++k)
        s.S[k] = s.S[k - 1] + cell_integrals(spec, k).q;
    return s;
}

bool q_identically_zero(const OperatorSpec& spec)
{
    return std::all_of(spec.pieces().begin(), spec.pieces().end(),
                       [](const Piece& p) { return p.c0 == 0 && p.c1 == 0; });
}

Verdict nec_part(const std::string& id)
{
    Verdict v;
    v.id = id;
    v.status = Status::Holds;
    v.source = "truncation";
    return v;
}

void violate(Verdict& v, const std::string& where, double index, double lhs, double rhs, const std::string& detail)
{
    if (v.status == Status::Fails)
        return;
    v.status = Status::Fails;
    v.witness = Witness{where, index, lhs, detail + ": " + fmt(lhs) + " vs bound " + fmt(rhs)};
}

}  // namespace

std::string status_name(Status s)
{
    switch (s) {
    case Status::Holds: return "Holds";
    case Status::Fails: return "Fails";
    default: return "Inconclusive";
    }
}

const Verdict& CriterionReport::condition(const std::string& id) const
{
    for (const Verdict& v : conditions)
        if (v.id == id)
            return v;
    invalid("UnknownCondition", "no condition '" + id + "' in report");
}

const Verdict& CriterionReport::theorem(const std::string& id) const
{
    for (const Verdict& v : theorems)
        if (v.id == id)
            return v;
    invalid("UnknownCondition", "no theorem verdict '" + id + "' in report");
}

Verdict sup_C0(const OperatorSpec& spec)
{
    return sup_verdict(spec, "C0_finite", [&](long long k) { return cell_mean(spec, k, &CellIntegrals::q_minus); },
                       spec.tail().c0_sup, "c0_sup");
}

Verdict sup_C1(const OperatorSpec& spec)
{
    return sup_verdict(
        spec, "C1_finite", [&](long long k) { return binv_minus(binv(spec, k)) / min_adjacent(spec, k); },
        spec.tail().c1_sup, "c1_sup");
}

Verdict check_molchanov(const OperatorSpec& spec, const std::vector<double>& epsilons)
{
    Verdict v;
    v.id = "molchanov";
    if (epsilons.empty())
        invalid("InvalidEpsilon", "epsilon list must not be empty");
    bool all = true;
    for (double eps : epsilons) {
        if (!(eps > 0) || !std::isfinite(eps))
            invalid("InvalidEpsilon", "epsilons must be positive and finite");
        Verdict p = molchanov_eps(spec, eps);
        if (p.fails() && v.status != Status::Fails) {
            v.status = Status::Fails;
            v.witness = p.witness;
            v.source = p.source;
        }
        all = all && p.holds();
        v.parts.push_back(std::move(p));
    }
    if (v.status != Status::Fails) {
        if (all) {
            v.status = Status::Holds;
            v.source = v.parts.front().source;
        } else {
            v.reason = "some epsilon undecided";
            for (const Verdict& p : v.parts)
                if (!p.holds())
                    v.reason += "; " + p.id + ": " + p.reason;
        }
    }
    return v;
}

Verdict check_mean_q_divergence(const OperatorSpec& spec)
{
    return limit_verdict(spec, "mean_q_divergence", [&](long long k) { return cell_mean(spec, k, &CellIntegrals::q); },
                         spec.tail().q_cell_mean_limit, "q_cell_mean_limit", true);
}

Verdict check_combined_divergence(const OperatorSpec& spec)
{
    return limit_verdict(
        spec, "combined_divergence",
        [&](long long k) {
            return (spec.cell_integrals_any(k).q + binv(spec, k - 1) + binv(spec, k)) / spec.d_any(k);
        },
        spec.tail().combined_limit, "combined_limit", true);
}

Verdict check_coupling_vanishes(const OperatorSpec& spec)
{
    return limit_verdict(
        spec, "coupling_vanishes", [&](long long k) { return std::abs(binv(spec, k)) / min_adjacent(spec, k); },
        spec.tail().beta_coupling_limit, "beta_coupling_limit", false);
}

Verdict check_q_mean_vanishes(const OperatorSpec& spec)
{
    return limit_verdict(spec, "q_mean_vanishes",
                         [&](long long k) { return cell_mean(spec, k, &CellIntegrals::q_abs); },
                         spec.tail().q_mean_limit, "q_mean_limit", false);
}

Verdict check_q_minus_mean_vanishes(const OperatorSpec& spec)
{
    return limit_verdict(spec, "q_minus_mean_vanishes",
                         [&](long long k) { return cell_mean(spec, k, &CellIntegrals::q_minus); },
                         spec.tail().q_minus_mean_limit, "q_minus_mean_limit", false);
}

Verdict check_beta_minus_coupling_vanishes(const OperatorSpec& spec)
{
    return limit_verdict(
        spec, "beta_minus_coupling_vanishes",
        [&](long long k) { return binv_minus(binv(spec, k)) / min_adjacent(spec, k); },
        spec.tail().beta_minus_coupling_limit, "beta_minus_coupling_limit", false);
}

Verdict brinck_sup(const OperatorSpec& spec)
{
    Verdict v;
    v.id = "brinck_sup";
    auto groups = truncation_groups(spec, 1.0, false, true);
    double mx = 0;
    for (const auto& [j, e] : groups) {
        if (e.value > mx) {
            mx = e.value;
            v.witness = Witness{"x=" + fmt(e.x), e.x, e.value, "largest unit-window integral of q_- over the truncation"};
        }
    }
    v.value = mx;
    for (std::size_t i = groups.size() - std::min<std::size_t>(groups.size(), 10); i < groups.size(); ++i)
        v.trend.emplace_back(groups[i].second.x, groups[i].second.value);
    if (spec.tail().brinck_sup) {
        double d = *spec.tail().brinck_sup;
        v.source = "declaration brinck_sup";
        v.status = std::isinf(d) ? Status::Fails : Status::Holds;
        if (std::isinf(d))
            v.witness = declared_witness(d, "brinck_sup");
        else
            v.value = std::max(mx, d);
        return v;
    }
    Seq f = [&](long long j) {
        auto e = window_group(spec, j, 1.0, false, true);
        if (!e)
            undecidable("UndecidableTail", "no data");
        return e->value;
    };
    LimitEstimate est = probe_residue(f, 1, 1, kWindowProbeExponent);
    if (est.samples.size() >= 4) {
        v.source = "generator probe";
        for (const auto& s : est.samples)
            v.trend.push_back(s);
        if (est.trend == Trend::DivergesUp) {
            v.status = Status::Fails;
            v.witness = Witness{"group " + fmt(est.samples.back().first), est.samples.back().first,
                                est.samples.back().second, est.describe()};
            return v;
        }
        if (est.trend == Trend::Converges || est.trend == Trend::DivergesDown) {
            v.status = Status::Holds;
            if (est.trend == Trend::Converges) {
                v.limit = est.limit;
                v.value = std::max(mx, est.limit);
            }
            for (const auto& s : est.samples)
                v.value = std::max(*v.value, s.second);
            return v;
        }
    }
    if (groups.size() >= 8) {
        double first = 0, second = 0;
        for (std::size_t i = 0; i < groups.size(); ++i)
            (i < groups.size() / 2 ? first : second) = std::max(i < groups.size() / 2 ? first : second,
                                                                groups[i].second.value);
        if (second <= first) {
            v.status = Status::Holds;
            v.source = "truncation plateau";
            return v;
        }
    }
    v.witness.reset();
    v.reason = "no declaration (brinck_sup) or generator, and unit-window maxima keep growing";
    return v;
}

Verdict d_sup_finite(const OperatorSpec& spec)
{
    Verdict v;
    v.id = "d_sup_finite";
    ExtentStats s = extent_stats(spec);
    v.value = s.d_max;
    v.source = s.d_max_source;
    if (std::isinf(s.d_max)) {
        v.status = Status::Fails;
        v.witness = Witness{"d^*", 0, s.d_max, "cell lengths grow without bound (" + s.d_max_source + ")"};
    } else if (s.d_max_source != "truncation") {
        v.status = Status::Holds;
    } else {
        Verdict sv = sup_verdict(spec, "d_sup_finite", [&](long long k) { return spec.d_any(k); }, std::nullopt, "d_sup");
        sv.value = std::max(*sv.value, s.d_max);
        return sv;
    }
    return v;
}

Verdict q_bounded(const OperatorSpec& spec)
{
    const PotentialGenerator* g = spec.potential_generator();
    if (g && g->periodic_bounded()) {
        Verdict v;
        v.id = "q_bounded";
        v.status = Status::Holds;
        v.source = "periodic potential";
        double m = 0;
        for (int k = 1; k <= spec.K(); ++k)
            m = std::max(m, max_abs_on_cell(spec, k));
        v.value = m;
        return v;
    }
    return sup_verdict(spec, "q_bounded", [&](long long k) { return max_abs_on_cell(spec, k); }, std::nullopt, "none");
}

Verdict check_necessary_semibounded(const OperatorSpec& spec, double C)
{
    if (!(C >= 0) || !std::isfinite(C))
        invalid("InvalidConstant", "C must be finite and >= 0");
    const int K = spec.K();
    bool literal = q_identically_zero(spec);
    StepData sd = step_data(spec);
    auto bi = [&](int k) { return k == 0 ? 0.0 : spec.beta_inv(k); };
    // energy of the indicator of [x_a, x_b] minus the bound -C * length
    auto step_gap = [&](int a, int b, double& lhs, double& rhs) {
        lhs = bi(a) + bi(b) + (literal ? 0.0 : sd.S[b] - sd.S[a]);
        rhs = -C * (spec.x(b) - spec.x(a));
        return lhs >= rhs;
    };

    std::vector<int> neg;
    for (int k = 1; k <= K; ++k)
        if (spec.beta(k) < 0)
            neg.push_back(k);

    Verdict inf_b = nec_part("nec_inf_b");
    for (int k : neg) {
        double lhs, rhs;
        if (literal) {
            lhs = -bi(k);
            rhs = 1 + C / 3;
            if (lhs > rhs)
                violate(inf_b, "k=" + std::to_string(k), k, lhs, rhs, "(1/beta_k)^- exceeds 1 + C/3");
        } else {
            TestFunctionParams tp;
            tp.k = k;
            tp.width = 1.0;
            if (spec.x(k) + 1.0 > spec.x(K))
                continue;
            FormBreakdown fb = form_energy(spec, make_test_function(spec, "tent", tp));
            lhs = fb.total;
            rhs = -C * fb.norm2;
            if (lhs < rhs)
                violate(inf_b, "k=" + std::to_string(k), k, lhs, rhs, "tent energy below -C |f|^2");
        }
    }

    Verdict nec1 = nec_part("nec_1");
    for (std::size_t j = 0; j < neg.size(); ++j) {
        int kj = neg[j];
        int kprev = j == 0 ? 0 : neg[j - 1];
        if (literal) {
            double dj = spec.x(kj) - spec.x(kprev);
            double dnext = j + 1 < neg.size() ? spec.x(neg[j + 1]) - spec.x(kj) : kInf;
            double lhs = -bi(kj), rhs = C * std::min(dj, dnext);
            if (lhs > rhs)
                violate(nec1, "j=" + std::to_string(j + 1) + " k=" + std::to_string(kj), kj, lhs, rhs,
                        "1/|beta_k| exceeds C min(d_j^-, d_{j+1}^-)");
        } else if (j + 1 < neg.size()) {
            double lhs, rhs;
            if (!step_gap(kj, neg[j + 1], lhs, rhs))
                violate(nec1, "j=" + std::to_string(j + 1) + " k=" + std::to_string(kj), kj, lhs, rhs,
                        "step energy between consecutive negative sites below -C |f|^2");
        }
    }

    Verdict nec2 = nec_part("nec_2");
    Verdict nec3 = nec_part("nec_3");
    for (std::size_t j = 0; j < neg.size(); ++j) {
        int kj = neg[j];
        int knext = j + 1 < neg.size() ? neg[j + 1] : K;
        int kprev = j == 0 ? 0 : neg[j - 1];
        for (int i = 1; kj + i <= knext; ++i) {
            double lhs, rhs;
            if (!step_gap(kj, kj + i, lhs, rhs))
                violate(nec2, "k=" + std::to_string(kj) + " i=" + std::to_string(i), kj, lhs, rhs,
                        "1/beta_k + 1/beta_{k+i} below -C (x_{k+i} - x_k)");
        }
        for (int i = 1; kj - i >= kprev; ++i) {
            double lhs, rhs;
            if (!step_gap(kj - i, kj, lhs, rhs))
                violate(nec3, "k=" + std::to_string(kj) + " i=" + std::to_string(i), kj, lhs, rhs,
                        "1/beta_{k-i} + 1/beta_k below -C (x_k - x_{k-i})");
        }
    }

    Verdict v;
    v.id = "necessary_semibounded";
    v.source = literal ? "truncation, closed-form inequalities" : "truncation, test-function energies";
    v.status = Status::Holds;
    for (Verdict* p : {&inf_b, &nec1, &nec2, &nec3}) {
        if (p->fails() && v.status != Status::Fails) {
            v.status = Status::Fails;
            v.witness = p->witness;
            v.witness->detail = p->id + ": " + v.witness->detail;
        }
        v.parts.push_back(*p);
    }
    return v;
}

std::optional<Certificate> unboundedness_certificate(const OperatorSpec& spec, double bound)
{
    auto indicator = [&](long long k) {
        return (spec.cell_integrals_any(k).q + binv(spec, k - 1) + binv(spec, k)) / spec.d_any(k);
    };
    auto step2 = [&](long long k) {
        double len = spec.d_any(k) + spec.d_any(k + 1);
        double e = spec.cell_integrals_any(k).q + spec.cell_integrals_any(k + 1).q + binv(spec, k - 1) +
                   binv(spec, k + 1);
        return e / len;
    };
    // tent 1 - (x - x_k)/w on [x_k, x_k + w] inside cell k + 1
    auto tent = [&](long long k) {
        double w = std::min(1.0, spec.d_any(k + 1));
        double pot = 0;
        for (const LocalPiece& p : spec.cell_local_pieces_any(k + 1)) {
            double a = p.u0, b = std::min(p.u1, w);
            if (!(b > a))
                continue;
            auto F = [&](double u) {
                double s = 1 - u / w;
                return -w * ((p.a0 + p.a1 * w) * s * s * s / 3 - p.a1 * w * s * s * s * s / 4);
            };
            pot += F(b) - F(a);
        }
        return (1 / w + binv(spec, k) + pot) / (w / 3);
    };
    struct Family {
        const char* name;
        std::function<double(long long)> rq;
        long long last_offset;
    };
    std::vector<Family> families{{"indicator", indicator, 0}, {"step2", step2, 1}, {"tent", tent, 1}};
    const int P = spec.structure_period();
    const long long jmax = 1000000000LL / P;
    for (const Family& fam : families) {
        for (int r = 1; r <= P; ++r) {
            Certificate c;
            c.family = fam.name;
            double rec = kInf;
            long long j = 1;
            while (j <= jmax) {
                long long k = static_cast<long long>(P) * (j - 1) + r;
                double val;
                try {
                    if (k + fam.last_offset > spec.K() && !spec.extends())
                        break;
                    val = fam.rq(k);
                } catch (const Error& e) {
                    if (e.code() == "UndecidableTail")
                        break;
                    throw;
                }
                if (std::isfinite(val) && val < rec) {
                    rec = val;
                    c.indices.push_back(k);
                    c.quotients.push_back(val);
                    if (rec < -bound)
                        return c;
                }
                long long inside = (spec.K() - r) / P + 1;
                j = j < inside ? j + 1 : std::max(j + 1, static_cast<long long>(std::ceil(j * 1.25)));
            }
        }
    }
    return std::nullopt;
}

CriterionReport theorem_verdicts(const OperatorSpec& spec, double C, const std::vector<double>& epsilons)
{
    CriterionReport r;
    r.C = C;
    r.epsilons = epsilons;
    Verdict dsup = d_sup_finite(spec);
    Verdict c0 = sup_C0(spec);
    Verdict c1 = sup_C1(spec);
    Verdict mol = check_molchanov(spec, epsilons);
    Verdict meanq = check_mean_q_divergence(spec);
    Verdict comb = check_combined_divergence(spec);
    Verdict coup = check_coupling_vanishes(spec);
    Verdict qmean = check_q_mean_vanishes(spec);
    Verdict qminus = check_q_minus_mean_vanishes(spec);
    Verdict bminus = check_beta_minus_coupling_vanishes(spec);
    Verdict brinck = brinck_sup(spec);
    Verdict qb = q_bounded(spec);
    Verdict c0plus = sup_verdict(spec, "C0_plus_finite",
                                 [&](long long k) { return cell_mean(spec, k, &CellIntegrals::q_plus); },
                                 std::nullopt, "none");
    Verdict c1plus = sup_verdict(
        spec, "C1_plus_finite", [&](long long k) { return binv_plus(binv(spec, k)) / min_adjacent(spec, k); },
        std::nullopt, "none");
    Verdict nec = check_necessary_semibounded(spec, C);
    r.certificate = unboundedness_certificate(spec);

    for (const Verdict* v : {&dsup, &c0, &c1, &mol, &meanq, &comb, &coup, &qmean, &qminus, &bminus, &brinck, &qb,
                             &c0plus, &c1plus})
        r.conditions.push_back(*v);
    for (const Verdict& p : nec.parts)
        r.conditions.push_back(p);

    auto theorem = [](const std::string& id) {
        Verdict v;
        v.id = id;
        return v;
    };
    auto list = [](std::initializer_list<const Verdict*> vs) {
        std::string s;
        for (const Verdict* v : vs)
            s += (s.empty() ? "" : ", ") + v->id + "=" + status_name(v->status);
        return s;
    };

    // semiboundedness
    Verdict sb = theorem("semibounded");
    if (r.certificate) {
        sb.status = Status::Fails;
        sb.source = "unboundedness certificate";
        const Certificate& c = *r.certificate;
        sb.witness = Witness{c.family + " k=" + std::to_string(c.indices.back()), static_cast<double>(c.indices.back()),
                             c.quotients.back(),
                             "Rayleigh quotients of " + c.family + " test functions decrease below " +
                                 fmt(c.quotients.back())};
        if (nec.fails())
            sb.witness->detail += "; " + nec.witness->detail;
    } else if (dsup.holds() && c0.holds() && c1.holds()) {
        sb.status = Status::Holds;
        sb.source = "d^* finite and C0, C1 finite";
    } else if ((c0.fails() || c1.fails()) && c0plus.holds() && c1plus.holds() && dsup.holds()) {
        sb.status = Status::Fails;
        sb.source = "C0/C1 necessary when the positive parts are bounded";
        sb.witness = c0.fails() ? c0.witness : c1.witness;
    } else {
        sb.reason = "sufficient conditions not established (" + list({&dsup, &c0, &c1}) + ")";
        if (nec.fails())
            sb.reason += "; necessary inequality violated for C=" + fmt(C) + " only: " + nec.witness->detail;
    }

    Verdict sa = theorem("self_adjoint");
    if (sb.holds()) {
        sa.status = Status::Holds;
        sa.source = "semibounded";
    } else {
        sa.reason = "self-adjointness is only derived from lower semiboundedness";
    }

    // discreteness
    Verdict disc = theorem("discrete");
    bool sufficient = dsup.holds() && c0.holds() && c1.holds() && mol.holds() && meanq.holds();
    std::optional<Verdict> against;
    std::string against_source;
    if (sb.holds() && comb.fails()) {
        against = comb;
        against_source = "semibounded and indicator energies stay bounded on a subsequence";
    } else if (sb.holds() && qb.holds()) {
        against = qb;
        against_source = "semibounded with bounded potential";
        against->witness = Witness{"sup|q|", 0, qb.value.value_or(0), "potential is bounded"};
    } else if (sb.holds() && mol.fails() && (brinck.holds() || c0.holds())) {
        against = mol;
        against_source = "semibounded, local q_- bound, window integrals do not diverge";
    }
    if (sufficient && against) {
        disc.reason = "conflicting evidence: sufficient conditions hold but " + against->id + " fails";
    } else if (sufficient) {
        disc.status = Status::Holds;
        disc.source = "d^*, C0, C1 finite with molchanov and mean_q_divergence";
    } else if (against) {
        disc.status = Status::Fails;
        disc.source = against_source;
        disc.witness = against->witness;
    } else if (mol.holds() && comb.holds() && !meanq.holds()) {
        disc.reason = "gap between the necessary and sufficient conditions: molchanov and combined_divergence hold, "
                      "mean_q_divergence does not";
    } else {
        disc.reason = "no sufficient or necessary condition decided (" +
                      list({&sb, &dsup, &c0, &c1, &mol, &meanq, &comb}) + ")";
    }

    Verdict ess = theorem("ess_spectrum_transfer");
    if (dsup.holds() && c0.holds() && coup.holds()) {
        ess.status = Status::Holds;
        ess.source = "d^* finite, C0 finite, coupling vanishes";
    } else {
        ess.reason = "hypotheses not established (" + list({&dsup, &c0, &coup}) + ")";
    }

    Verdict essN = theorem("ess_equals_free_N");
    if (ess.holds() && qmean.holds()) {
        essN.status = Status::Holds;
        essN.source = "ess_spectrum_transfer and q_mean_vanishes";
    } else {
        essN.reason = "hypotheses not established (" + list({&ess, &qmean}) + ")";
    }

    Verdict negd = theorem("negative_discrete");
    if (dsup.holds() && qminus.holds() && bminus.holds()) {
        negd.status = Status::Holds;
        negd.source = "d^* finite, q_- mean and (1/beta)^- coupling vanish";
    } else {
        negd.reason = "hypotheses not established (" + list({&dsup, &qminus, &bminus}) + ")";
    }

    Verdict hs = theorem("h_stable");
    bool all_negative = std::all_of(spec.betas().begin(), spec.betas().end(), [](double b) { return b < 0; });
    if (all_negative && spec.strengths_extend()) {
        Probe p = probe(spec, [&](long long k) { return spec.beta_any(k); });
        all_negative = p.available && std::all_of(p.est.begin(), p.est.end(), [](const LimitEstimate& e) {
                           return std::all_of(e.samples.begin(), e.samples.end(),
                                              [](const auto& s) { return s.second < 0; });
                       });
    }
    bool q_nonneg = c0.holds() && c0.value && *c0.value == 0 && qminus.holds();
    if (dsup.holds() && c0.holds() && coup.holds()) {
        hs.status = Status::Holds;
        hs.source = "coupling vanishes; scaling by h preserves the limit";
    } else if (all_negative && q_nonneg && dsup.holds() && c0.holds() && c1.holds() && coup.fails()) {
        hs.status = Status::Fails;
        hs.source = "all strengths negative: vanishing coupling is also necessary";
        hs.witness = coup.witness;
    } else {
        hs.reason = "hypotheses not established (" + list({&dsup, &c0, &c1, &coup}) + ")";
        if (!all_negative && coup.fails())
            hs.reason += "; necessity of vanishing coupling is only known for negative strengths";
    }

    r.theorems = {sb, sa, disc, ess, essN, negd, hs};
    return r;
}

}  // namespace dspec
