#include "dspec/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dspec {

namespace {

constexpr double kShrink = 0.8;

bool tiny(double delta, double scale) { return std::abs(delta) <= 1e-12 * std::max(1.0, scale); }

}  // namespace

std::string trend_name(Trend t)
{
    switch (t) {
    case Trend::DivergesUp: return "diverges to +inf";
    case Trend::DivergesDown: return "diverges to -inf";
    case Trend::Converges: return "converges";
    default: return "no clear trend";
    }
}

bool LimitEstimate::converges_to_zero() const
{
    if (trend != Trend::Converges)
        return false;
    double scale = 0;
    for (const auto& s : samples)
        scale = std::max(scale, std::abs(s.second));
    return limit == 0 || std::abs(limit) <= 1e-6 * scale;
}

std::string LimitEstimate::describe() const
{
    std::ostringstream os;
    os << trend_name(trend);
    if (trend == Trend::Converges)
        os << " to " << (converges_to_zero() ? 0.0 : limit);
    if (!samples.empty())
        os << " (last sample k=" << samples.back().first << ", value " << samples.back().second << ")";
    return os.str();
}

LimitEstimate classify_samples(const std::vector<std::pair<double, double>>& samples)
{
    LimitEstimate out;
    out.samples = samples;
    if (samples.size() < 4)
        return out;
    std::vector<double> v;
    for (std::size_t i = samples.size() - 4; i < samples.size(); ++i)
        v.push_back(samples[i].second);

    if (std::all_of(v.begin(), v.end(), [](double x) { return x == INFINITY; })) {
        out.trend = Trend::DivergesUp;
        return out;
    }
    if (std::all_of(v.begin(), v.end(), [](double x) { return x == -INFINITY; })) {
        out.trend = Trend::DivergesDown;
        return out;
    }
    if (!std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); }))
        return out;

    double scale = 0;
    for (double x : v)
        scale = std::max(scale, std::abs(x));
    double d[3] = {v[1] - v[0], v[2] - v[1], v[3] - v[2]};

    if (tiny(d[0], scale) && tiny(d[1], scale) && tiny(d[2], scale)) {
        out.trend = Trend::Converges;
        out.limit = v[3];
        return out;
    }

    bool up = d[0] > 0 && d[1] > 0 && d[2] > 0;
    bool down = d[0] < 0 && d[1] < 0 && d[2] < 0;
    bool steady = std::abs(d[1]) >= kShrink * std::abs(d[0]) && std::abs(d[2]) >= kShrink * std::abs(d[1]);
    if ((up || down) && steady && !tiny(d[2], scale)) {
        out.trend = up ? Trend::DivergesUp : Trend::DivergesDown;
        return out;
    }

    auto shrinks = [&](double a, double b) { return tiny(b, scale) || std::abs(b) <= kShrink * std::abs(a); };
    if (shrinks(d[0], d[1]) && shrinks(d[1], d[2])) {
        out.trend = Trend::Converges;
        double r = (d[1] != 0) ? d[2] / d[1] : 0.0;
        out.limit = (std::abs(r) < 1) ? v[3] + d[2] * r / (1 - r) : v[3];
        return out;
    }
    return out;
}

LimitEstimate probe_residue(const std::function<double(long long)>& f, int period, int residue, int max_exponent)
{
    std::vector<std::pair<double, double>> samples;
    long long j = 1000;
    for (int e = 3; e <= max_exponent; ++e, j *= 10) {
        long long k = static_cast<long long>(period) * (j - 1) + residue;
        try {
            double val = f(k);
            if (!std::isnan(val))
                samples.emplace_back(static_cast<double>(k), val);
        } catch (...) {
            // unavailable at this scale
        }
    }
    LimitEstimate est = classify_samples(samples);
    est.residue = residue;
    return est;
}

std::vector<LimitEstimate> probe_all(const std::function<double(long long)>& f, int period)
{
    std::vector<LimitEstimate> out;
    for (int r = 1; r <= period; ++r)
        out.push_back(probe_residue(f, period, r));
    return out;
}

}  // namespace dspec
