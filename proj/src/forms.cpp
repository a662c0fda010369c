#include "dspec/forms.hpp"

#include <algorithm>
#include <cmath>

#include "dspec/errors.hpp"

namespace dspec {

namespace {

using Poly = std::array<double, 8>;

Poly from_cubic(const std::array<double, 4>& c)
{
    Poly p{};
    std::copy(c.begin(), c.end(), p.begin());
    return p;
}

Poly mul(const Poly& a, const Poly& b)
{
    Poly r{};
    for (int i = 0; i < 8; ++i)
        for (int j = 0; i + j < 8; ++j)
            r[i + j] += a[i] * b[j];
    return r;
}

Poly deriv(const Poly& a)
{
    Poly r{};
    for (int i = 1; i < 8; ++i)
        r[i - 1] = i * a[i];
    return r;
}

double integrate(const Poly& p, double t0, double t1)
{
    double s = 0, p0 = t0, p1 = t1;
    for (int i = 0; i < 8; ++i) {
        s += p[i] * (p1 - p0) / (i + 1);
        p0 *= t0;
        p1 *= t1;
    }
    return s;
}

double scale_of(const PiecewiseFunction& f)
{
    double s = 0;
    for (const Segment& seg : f.segments)
        s = std::max({s, std::abs(seg.value(seg.a)), std::abs(seg.value(seg.b)), std::abs(seg.deriv(seg.a)),
                      std::abs(seg.deriv(seg.b))});
    return std::max(1.0, s);
}

// 1-based cell containing x, for x in [0, x_K); points exactly at x_k belong to cell k+1.
int cell_of(const OperatorSpec& spec, double x)
{
    const auto& pts = spec.points();
    auto it = std::upper_bound(pts.begin(), pts.end(), x);
    return static_cast<int>(it - pts.begin()) + 1;
}

void validate_segments(const OperatorSpec& spec, const PiecewiseFunction& f)
{
    double xK = spec.x(spec.K());
    double tol = 1e-12 * std::max(1.0, xK);
    double prev = -1;
    for (const Segment& s : f.segments) {
        if (!(s.b > s.a))
            invalid("InvalidFunction", "empty segment");
        if (s.a < -tol || s.b > xK + tol)
            invalid("InvalidFunction", "segment outside [0, x_K]");
        if (s.a < prev - tol)
            invalid("InvalidFunction", "segments overlap or are unsorted");
        prev = s.b;
        int c = cell_of(spec, s.a + 1e-3 * (s.b - s.a));
        if (c > spec.K() || s.a < spec.x(c - 1) - tol || s.b > spec.x(c) + tol)
            invalid("InvalidFunction", "segment crosses a partition point");
    }
}

void check_traces(const OperatorSpec& spec, const PiecewiseFunction& f)
{
    if (static_cast<int>(f.traces.size()) != spec.K())
        invalid("InvalidFunction", "trace count differs from the number of partition points");
    std::vector<Trace> derived = derive_traces(spec, f.segments);
    double tol = 1e-12 * scale_of(f);
    for (int k = 0; k < spec.K(); ++k) {
        const Trace &a = f.traces[k], &b = derived[k];
        if (std::abs(a.f_minus - b.f_minus) > tol || std::abs(a.f_plus - b.f_plus) > tol ||
            std::abs(a.df_minus - b.df_minus) > tol || std::abs(a.df_plus - b.df_plus) > tol)
            invalid("InvalidFunction", "stored traces at x_" + std::to_string(k + 1) + " disagree with the segments");
    }
}

Segment shifted(const Segment& s, double a, double b)
{
    // Taylor re-expansion around the new left end.
    double h = a - s.a;
    const auto& c = s.c;
    Segment out;
    out.a = a;
    out.b = b;
    out.c[0] = c[0] + h * (c[1] + h * (c[2] + h * c[3]));
    out.c[1] = c[1] + h * (2 * c[2] + 3 * h * c[3]);
    out.c[2] = c[2] + 3 * h * c[3];
    out.c[3] = c[3];
    return out;
}

}  // namespace

double Segment::value(double x) const
{
    double t = x - a;
    return c[0] + t * (c[1] + t * (c[2] + t * c[3]));
}

double Segment::deriv(double x) const
{
    double t = x - a;
    return c[1] + t * (2 * c[2] + 3 * t * c[3]);
}

double Segment::deriv2(double x) const
{
    double t = x - a;
    return 2 * c[2] + 6 * t * c[3];
}

std::vector<Segment> split_segment(const OperatorSpec& spec, const Segment& s)
{
    std::vector<Segment> out;
    double tol = 1e-12 * std::max(1.0, std::abs(s.b));
    double lo = s.a;
    for (double x : spec.points()) {
        if (x > lo + tol && x < s.b - tol) {
            out.push_back(shifted(s, lo, x));
            lo = x;
        }
    }
    out.push_back(shifted(s, lo, s.b));
    return out;
}

std::vector<Trace> derive_traces(const OperatorSpec& spec, const std::vector<Segment>& segments)
{
    std::vector<Trace> tr(spec.K());
    for (const Segment& s : segments) {
        double tol = 1e-12 * std::max(1.0, std::abs(s.b));
        for (int k = 1; k <= spec.K(); ++k) {
            double x = spec.x(k);
            if (std::abs(s.b - x) <= tol) {
                tr[k - 1].f_minus = s.value(s.b);
                tr[k - 1].df_minus = s.deriv(s.b);
            }
            if (std::abs(s.a - x) <= tol) {
                tr[k - 1].f_plus = s.value(s.a);
                tr[k - 1].df_plus = s.deriv(s.a);
            }
        }
    }
    return tr;
}

PiecewiseFunction make_function(const OperatorSpec& spec, std::vector<Segment> segments)
{
    std::sort(segments.begin(), segments.end(), [](const Segment& l, const Segment& r) { return l.a < r.a; });
    PiecewiseFunction f;
    f.segments = std::move(segments);
    f.traces = derive_traces(spec, f.segments);
    if (!f.segments.empty()) {
        f.support_lo = f.segments.front().a;
        f.support_hi = f.segments.back().b;
    }
    return f;
}

FormBreakdown form_energy(const OperatorSpec& spec, const PiecewiseFunction& f)
{
    validate_segments(spec, f);
    check_traces(spec, f);
    FormBreakdown out;
    for (const Segment& s : f.segments) {
        Poly p = from_cubic(s.c);
        Poly dp = deriv(p);
        Poly p2 = mul(p, p);
        double len = s.b - s.a;
        out.dirichlet += integrate(mul(dp, dp), 0, len);
        out.norm2 += integrate(p2, 0, len);
        int k = cell_of(spec, s.a + 1e-3 * len);
        for (const Piece& pc : spec.cell_pieces(k)) {
            double lo = std::max(pc.a, s.a), hi = std::min(pc.b, s.b);
            if (!(hi > lo))
                continue;
            Poly q{};
            q[0] = pc.c0 + pc.c1 * s.a;
            q[1] = pc.c1;
            out.potential += integrate(mul(q, p2), lo - s.a, hi - s.a);
        }
    }
    double tol = 1e-12 * scale_of(f);
    for (int k = 1; k <= spec.K(); ++k) {
        const Trace& t = f.traces[k - 1];
        double jump = t.f_plus - t.f_minus;
        double b = spec.beta(k);
        if (std::isinf(b))
            continue;
        if (b == 0) {
            if (std::abs(jump) > tol)
                invalid("JumpAtContinuityPoint", "jump " + std::to_string(jump) + " at x_" + std::to_string(k) +
                                                     " where beta = 0");
            continue;
        }
        double e = jump * jump / b;
        if (e >= 0)
            out.jump_plus += e;
        else
            out.jump_minus -= e;
    }
    out.total = out.dirichlet + out.potential + out.jump_plus - out.jump_minus;
    return out;
}

double indicator_form_value(const OperatorSpec& spec, int k)
{
    if (k < 1 || k > spec.K())
        invalid("IndexOutOfRange", "cell index " + std::to_string(k) + " outside 1.." + std::to_string(spec.K()));
    double inv = spec.beta_inv(k - 1) + spec.beta_inv(k);
    return (spec.cell_integrals_any(k).q + inv) / spec.d(k);
}

double rayleigh_quotient(const OperatorSpec& spec, const PiecewiseFunction& f)
{
    FormBreakdown e = form_energy(spec, f);
    if (!(e.norm2 > 0))
        invalid("ZeroFunction", "Rayleigh quotient of the zero function");
    return e.total / e.norm2;
}

double operator_form_identity_check(const OperatorSpec& spec, const PiecewiseFunction& f)
{
    validate_segments(spec, f);
    check_traces(spec, f);
    double scale = scale_of(f);
    double tol = 1e-12 * scale;
    auto violation = [](const std::string& what) { invalid("DomainViolation", what); };

    // Smoothness away from the partition and at the support ends.
    const double xK = spec.x(spec.K());
    auto at_partition = [&](double x) {
        if (std::abs(x) <= 1e-12)
            return 0;
        for (int k = 1; k <= spec.K(); ++k)
            if (std::abs(x - spec.x(k)) <= 1e-12 * std::max(1.0, xK))
                return k;
        return -1;
    };
    for (std::size_t i = 0; i < f.segments.size(); ++i) {
        const Segment& s = f.segments[i];
        double left_v = 0, left_d = 0;
        bool has_left = i > 0 && std::abs(f.segments[i - 1].b - s.a) <= 1e-12 * std::max(1.0, s.a);
        if (has_left) {
            left_v = f.segments[i - 1].value(s.a);
            left_d = f.segments[i - 1].deriv(s.a);
        }
        int k = at_partition(s.a);
        if (k == 0) {
            if (std::abs(s.deriv(s.a)) > tol)
                violation("f'(0) != 0");
        } else if (k < 0) {
            if (std::abs(s.value(s.a) - left_v) > tol || std::abs(s.deriv(s.a) - left_d) > tol)
                violation("f not C^1 at x=" + std::to_string(s.a));
        }
        bool has_right = i + 1 < f.segments.size() && std::abs(f.segments[i + 1].a - s.b) <= 1e-12 * std::max(1.0, s.b);
        if (!has_right && at_partition(s.b) < 0 && (std::abs(s.value(s.b)) > tol || std::abs(s.deriv(s.b)) > tol))
            violation("f not C^1 at the support end x=" + std::to_string(s.b));
    }
    for (int k = 1; k <= spec.K(); ++k) {
        const Trace& t = f.traces[k - 1];
        double b = spec.beta(k);
        if (std::isinf(b)) {
            if (std::abs(t.df_minus) > tol || std::abs(t.df_plus) > tol)
                violation("f' != 0 at the decoupled point x_" + std::to_string(k));
            continue;
        }
        if (std::abs(t.df_plus - t.df_minus) > tol)
            violation("f'(x_" + std::to_string(k) + "+) != f'(x_" + std::to_string(k) + "-)");
        if (std::abs((t.f_plus - t.f_minus) - b * t.df_minus) > tol * std::max(1.0, std::abs(b)))
            violation("jump condition fails at x_" + std::to_string(k));
    }

    double lhs = 0;
    for (const Segment& s : f.segments) {
        Poly p = from_cubic(s.c);
        Poly d2 = deriv(deriv(p));
        double len = s.b - s.a;
        Poly neg_d2{};
        for (int i = 0; i < 8; ++i)
            neg_d2[i] = -d2[i];
        lhs += integrate(mul(neg_d2, p), 0, len);
        int k = cell_of(spec, s.a + 1e-3 * len);
        for (const Piece& pc : spec.cell_pieces(k)) {
            double lo = std::max(pc.a, s.a), hi = std::min(pc.b, s.b);
            if (!(hi > lo))
                continue;
            Poly q{};
            q[0] = pc.c0 + pc.c1 * s.a;
            q[1] = pc.c1;
            lhs += integrate(mul(q, mul(p, p)), lo - s.a, hi - s.a);
        }
    }
    return std::abs(lhs - form_energy(spec, f).total);
}

PiecewiseFunction make_test_function(const OperatorSpec& spec, const std::string& kind,
                                     const TestFunctionParams& prm)
{
    const int K = spec.K();
    std::vector<Segment> segs;
    if (kind == "indicator") {
        if (prm.k < 1 || prm.k > K)
            invalid("IndexOutOfRange", "indicator cell outside 1..K");
        Segment s;
        s.a = spec.x(prm.k - 1);
        s.b = spec.x(prm.k);
        s.c[0] = 1.0 / std::sqrt(spec.d(prm.k));
        segs.push_back(s);
    } else if (kind == "tent") {
        if (prm.k < 0 || prm.k > K)
            invalid("IndexOutOfRange", "tent point outside 0..K");
        Segment s;
        s.a = spec.x(prm.k);
        s.b = s.a + prm.width;
        if (s.b > spec.x(K) * (1 + 1e-12))
            invalid("OutOfTruncation", "tent support leaves [0, x_K]");
        s.c[0] = 1;
        s.c[1] = -1.0 / prm.width;
        segs = split_segment(spec, s);
    } else if (kind == "step") {
        if (prm.k < 0 || prm.j <= prm.k || prm.j > K)
            invalid("IndexOutOfRange", "step needs 0 <= i < j <= K");
        for (int c = prm.k + 1; c <= prm.j; ++c) {
            Segment s;
            s.a = spec.x(c - 1);
            s.b = spec.x(c);
            s.c[0] = 1;
            segs.push_back(s);
        }
    } else if (kind == "ramp") {
        if (prm.a.empty() || static_cast<int>(prm.a.size()) > K)
            invalid("InvalidFunction", "ramp needs 1..K amplitudes");
        for (std::size_t i = 0; i < prm.a.size(); ++i) {
            int c = static_cast<int>(i) + 1;
            Segment s;
            s.a = spec.x(c - 1);
            s.b = spec.x(c);
            s.c[1] = prm.a[i] / spec.d(c);
            segs.push_back(s);
        }
    } else if (kind == "custom") {
        for (const Segment& s : prm.segments)
            for (const Segment& piece : split_segment(spec, s))
                segs.push_back(piece);
    } else {
        invalid("UnsupportedKind", "unknown test function kind '" + kind + "'");
    }
    return make_function(spec, std::move(segs));
}

}  // namespace dspec
