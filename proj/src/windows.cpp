#include "dspec/windows.hpp"

#include <algorithm>
#include <cmath>

#include "dspec/errors.hpp"

namespace dspec {

namespace {

// Cumulative integral F(u) = int_0^u q with the piece list as a prefix table.
class Primitive {
public:
    explicit Primitive(const std::vector<LocalPiece>& q) : q_(q), acc_(q.size() + 1, 0.0)
    {
        for (std::size_t i = 0; i < q.size(); ++i) {
            const LocalPiece& p = q[i];
            double len = p.u1 - p.u0;
            acc_[i + 1] = acc_[i] + len * (p.a0 + p.a1 * (p.u0 + p.u1) / 2);
        }
    }

    double operator()(double u) const
    {
        auto it = std::upper_bound(q_.begin(), q_.end(), u, [](double v, const LocalPiece& p) { return v < p.u1; });
        std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - q_.begin()), q_.size() - 1);
        const LocalPiece& p = q_[i];
        double t = std::clamp(u, p.u0, p.u1);
        return acc_[i] + (t - p.u0) * (p.a0 + p.a1 * (p.u0 + t) / 2);
    }

    double q_at(double u, bool right) const
    {
        for (const LocalPiece& p : q_) {
            if ((right && u >= p.u0 && u < p.u1) || (!right && u > p.u0 && u <= p.u1))
                return p.a0 + p.a1 * u;
        }
        const LocalPiece& p = right ? q_.back() : q_.front();
        return p.a0 + p.a1 * u;
    }

private:
    const std::vector<LocalPiece>& q_;
    std::vector<double> acc_;
};

WindowExtremum extremum(const std::vector<LocalPiece>& q, double eps, double u_lo, double u_hi, bool minimum)
{
    if (q.empty() || !(eps > 0))
        invalid("InvalidWindow", "window integral needs pieces and eps > 0");
    Primitive F(q);
    auto W = [&](double u) { return F(u + eps) - F(u); };
    std::vector<double> cand{u_lo, u_hi};
    for (const LocalPiece& p : q) {
        for (double b : {p.u0, p.u1, p.u0 - eps, p.u1 - eps})
            if (b > u_lo && b < u_hi)
                cand.push_back(b);
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    // W' = q(u + eps) - q(u) is affine between consecutive candidates; add interior stationary points
    std::size_t n = cand.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double a = cand[i], b = cand[i + 1];
        double ga = F.q_at(a + eps, true) - F.q_at(a, true);
        double gb = F.q_at(b + eps, false) - F.q_at(b, false);
        if ((ga < 0 && gb > 0) || (ga > 0 && gb < 0))
            cand.push_back(a + (b - a) * ga / (ga - gb));
    }
    WindowExtremum best{cand[0], W(cand[0])};
    for (double u : cand) {
        double v = W(u);
        if (minimum ? v < best.value : v > best.value)
            best = {u, v};
    }
    return best;
}

}  // namespace

WindowExtremum window_min(const std::vector<LocalPiece>& q, double eps, double u_lo, double u_hi)
{
    return extremum(q, eps, u_lo, u_hi, true);
}

WindowExtremum window_max(const std::vector<LocalPiece>& q, double eps, double u_lo, double u_hi)
{
    return extremum(q, eps, u_lo, u_hi, false);
}

std::vector<LocalPiece> negative_part(const std::vector<LocalPiece>& q)
{
    std::vector<LocalPiece> out;
    for (const LocalPiece& p : q) {
        double va = p.a0 + p.a1 * p.u0, vb = p.a0 + p.a1 * p.u1;
        std::vector<double> cuts{p.u0};
        if ((va < 0 && vb > 0) || (va > 0 && vb < 0))
            cuts.push_back(-p.a0 / p.a1);
        cuts.push_back(p.u1);
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            double mid = p.a0 + p.a1 * (cuts[i] + cuts[i + 1]) / 2;
            if (mid < 0)
                out.push_back({cuts[i], cuts[i + 1], -p.a0, -p.a1});
            else
                out.push_back({cuts[i], cuts[i + 1], 0, 0});
        }
    }
    return out;
}

std::optional<WindowExtremum> group_window(const OperatorSpec& spec, long long j, int P, double eps, bool minimum,
                                           bool use_negative_part)
{
    try {
        long long first = (j - 1) * P + 1;
        std::vector<LocalPiece> q;
        double offset = 0, group_len = 0;
        long long k = first;
        // cells of the group, then enough following cells to hold every window
        for (; k < first + P || offset < group_len + eps; ++k) {
            if (k - first > 100000)
                return std::nullopt;
            double d = spec.d_any(k);
            for (const LocalPiece& p : spec.cell_local_pieces_any(k)) {
                q.push_back({p.u0 + offset, p.u1 + offset, p.a0 - p.a1 * offset, p.a1});
            }
            offset += d;
            if (k == first + P - 1)
                group_len = offset;
        }
        if (use_negative_part)
            q = negative_part(q);
        WindowExtremum e = extremum(q, eps, 0, group_len, minimum);
        e.x += spec.x_any(first - 1);
        return e;
    } catch (const Error& e) {
        if (e.code() == "UndecidableTail")
            return std::nullopt;
        throw;
    }
}

}  // namespace dspec
