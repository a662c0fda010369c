#include "dspec/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "dspec/errors.hpp"
#include "dspec/parallel.hpp"

namespace dspec {

namespace {

constexpr double kPi = std::numbers::pi;

// Entire functions of z = mu^2 with exp(Omega) = C(z) I + S(z) Omega for traceless 2x2 Omega.
struct CS {
    double C = 1, S = 1;      // possibly scaled by a common positive factor
    double c_over_s = 1;      // C/S, unscaled
    double inv_s = 1;         // 1/S, unscaled
    long long dirichlet = 0;  // zeros of S(z(lambda')) for lambda' < lambda
};

CS cs_of(double z)
{
    CS r;
    if (std::abs(z) < 1e-3) {
        // Taylor series, accurate to double precision on this range
        double c = 1, s = 1, tc = 1, ts = 1;
        for (int n = 1; n <= 6; ++n) {
            tc *= z / ((2 * n - 1) * (2 * n));
            ts *= z / ((2 * n) * (2 * n + 1));
            c += tc;
            s += ts;
        }
        r.C = c;
        r.S = s;
        r.c_over_s = c / s;
        r.inv_s = 1 / s;
        return r;
    }
    if (z > 0) {
        double mu = std::sqrt(z);
        double e = std::exp(-2 * mu);
        // cosh and sinh/mu scaled by exp(-mu)
        r.C = (1 + e) / 2;
        r.S = (1 - e) / (2 * mu);
        r.c_over_s = mu * (1 + e) / (1 - e);
        r.inv_s = 2 * mu * std::exp(-mu) / (1 - e);
        return r;
    }
    double th = std::sqrt(-z);
    double sn = std::sin(th), cn = std::cos(th);
    if (sn == 0)
        sn = 1e-300;
    r.C = cn;
    r.S = sn / th;
    r.c_over_s = th * cn / sn;
    r.inv_s = th / sn;
    r.dirichlet = static_cast<long long>(std::floor(th / kPi));
    return r;
}

struct Item {
    bool interface = false;
    double h = 0, qbar = 0, delta = 0;  // slab: length, Gauss mean, Gauss difference
    double beta = 0;                    // interface strength
};

struct Kernel {
    std::vector<Item> items;
    bool dirichlet = false;
    bool analytic = false;
    double d = 0, c = 0;
};

// Matrix entries of the slab generator Omega at lambda.
struct Omega {
    double w11, w12, w21, w22, z;
};

Omega omega_of(const Item& it, double lambda)
{
    double s = std::sqrt(3.0) * it.h * it.h / 12.0;
    Omega o;
    o.w11 = -s * it.delta;
    o.w22 = s * it.delta;
    o.w12 = it.h;
    o.w21 = it.h * (it.qbar - lambda);
    o.z = o.w11 * o.w11 + o.w12 * o.w21;
    return o;
}

std::vector<LocalPiece> merged_pieces(const OperatorSpec& spec, int k)
{
    std::vector<LocalPiece> in = spec.cell_local_pieces(k), out;
    for (const LocalPiece& p : in) {
        if (!out.empty() && out.back().a1 == p.a1 && out.back().a0 == p.a0)
            out.back().u1 = p.u1;
        else
            out.push_back(p);
    }
    return out;
}

double max_abs_q(const OperatorSpec& spec)
{
    double m = 0;
    for (const Piece& p : spec.pieces())
        m = std::max({m, std::abs(p.c0 + p.c1 * p.a), std::abs(p.c0 + p.c1 * p.b)});
    return m;
}

Kernel build_kernel(const TruncatedProblem& pb, const Block& blk, double lambda_scale, bool analytic_allowed)
{
    Kernel kern;
    kern.dirichlet = blk.right_dirichlet;
    const OperatorSpec& spec = pb.spec;
    if (analytic_allowed && blk.first_cell == blk.last_cell) {
        auto pcs = merged_pieces(spec, blk.first_cell);
        if (pcs.size() == 1 && pcs[0].a1 == 0) {
            kern.analytic = true;
            kern.d = spec.d(blk.first_cell);
            kern.c = pcs[0].a0;
        }
    }
    for (int k = blk.first_cell; k <= blk.last_cell; ++k) {
        for (const LocalPiece& p : merged_pieces(spec, k)) {
            double len = p.u1 - p.u0;
            if (p.a1 == 0) {
                kern.items.push_back({false, len, p.a0, 0, 0});
                continue;
            }
            // fourth-order Magnus slabs; local error ~ h^4 |q'| (|q - lambda| + |q'|) / 720 per unit length
            double g = std::abs(p.a1) * (lambda_scale + std::abs(p.a1) + 1.0);
            double hmax = std::min(0.05, std::pow(1e-12 * 720.0 / g, 0.25));
            long long m = std::max<long long>(1, static_cast<long long>(std::ceil(len / hmax)));
            double hs = len / static_cast<double>(m);
            for (long long i = 0; i < m; ++i) {
                double u = p.u0 + hs * static_cast<double>(i);
                double qbar = p.a0 + p.a1 * (u + hs / 2);
                kern.items.push_back({false, hs, qbar, p.a1 * hs / std::sqrt(3.0), 0});
            }
        }
        if (k < blk.last_cell && spec.is_interface(k))
            kern.items.push_back({true, 0, 0, 0, spec.beta(k)});
    }
    return kern;
}

double analytic_value(const Kernel& k, long long n) { return neumann_lattice_value(k.d, k.c, n, k.dirichlet); }

long long analytic_count(const Kernel& k, double lambda)
{
    long long n = 0;
    while (analytic_value(k, n) < lambda)
        ++n;
    return n;
}

double kernel_secular(const Kernel& k, double lambda)
{
    double f = 1, g = 0;
    for (const Item& it : k.items) {
        if (it.interface) {
            f += it.beta * g;
            continue;
        }
        Omega o = omega_of(it, lambda);
        CS cs = cs_of(o.z);
        double nf = (cs.C + cs.S * o.w11) * f + cs.S * o.w12 * g;
        double ng = cs.S * o.w21 * f + (cs.C + cs.S * o.w22) * g;
        f = nf;
        g = ng;
        double n = std::max(std::abs(f), std::abs(g));
        if (n > 1e150) {
            f *= 1e-150;
            g *= 1e-150;
        } else if (n < 1e-150 && n > 0) {
            f *= 1e150;
            g *= 1e150;
        }
    }
    return k.dirichlet ? f : g;
}

long long negative_pivots(const std::vector<double>& diag, const std::vector<double>& off)
{
    long long neg = 0;
    double d = 0;
    for (std::size_t i = 0; i < diag.size(); ++i) {
        d = (i == 0) ? diag[0] : diag[i] - off[i - 1] * off[i - 1] / d;
        if (d == 0)
            d = 1e-300;
        if (d < 0)
            ++neg;
    }
    return neg;
}

long long kernel_count(const Kernel& k, double lambda)
{
    if (k.analytic)
        return analytic_count(k, lambda);
    std::vector<double> diag{0.0}, off;
    diag.reserve(k.items.size() + 1);
    off.reserve(k.items.size());
    long long j0 = 0;
    for (const Item& it : k.items) {
        if (it.interface) {
            double w = 1.0 / it.beta;
            diag.back() += w;
            off.push_back(-w);
            diag.push_back(w);
            continue;
        }
        Omega o = omega_of(it, lambda);
        CS cs = cs_of(o.z);
        diag.back() += (cs.c_over_s + o.w11) / o.w12;
        off.push_back(-cs.inv_s / o.w12);
        diag.push_back((cs.c_over_s + o.w22) / o.w12);
        j0 += cs.dirichlet;
    }
    if (k.dirichlet) {
        diag.pop_back();
        off.pop_back();
    }
    return j0 + negative_pivots(diag, off);
}

double default_scale(const TruncatedProblem& pb, double lo, double hi)
{
    return std::max(std::abs(lo), std::abs(hi)) + max_abs_q(pb.spec);
}

struct BlockRoots {
    std::vector<double> roots;
    long long n_lo = 0, n_hi = 0;
};

BlockRoots block_roots(const Kernel& k, Window w, const ShootingOptions& opt)
{
    BlockRoots out;
    if (k.analytic) {
        out.n_lo = analytic_count(k, w.lo);
        out.n_hi = analytic_count(k, w.hi);
        for (long long n = out.n_lo; n < out.n_hi; ++n)
            out.roots.push_back(analytic_value(k, n));
        return out;
    }
    long long budget = opt.count_budget;
    auto count = [&](double lam) {
        if (--budget < 0)
            numerical("WindowTooWide", "scan budget exhausted; narrow the window");
        return kernel_count(k, lam);
    };
    // One eigenvalue lies between a and b (na = N(a), nb = N(a) + 1).  A root sitting exactly on an end
    // belongs to this interval only if the count says so.
    auto polish = [&](double a, double b, long long na, long long nb) {
        double fa = kernel_secular(k, a), fb = kernel_secular(k, b);
        const double step = (b - a) * 1e-9;
        if (fa == 0) {
            if (count(a + step) == nb)
                return a;
            a += step;
            fa = kernel_secular(k, a);
        }
        if (fb == 0) {
            if (count(b - step) == na)
                return b;
            b -= step;
            fb = kernel_secular(k, b);
        }
        if (fa == 0)
            return a;
        if (fb == 0)
            return b;
        if ((fa > 0) == (fb > 0))
            numerical("InconsistentCount", "one eigenvalue counted in [" + std::to_string(a) + ", " +
                                               std::to_string(b) + "] but the secular function keeps its sign");
        for (int it = 0; it < 400 && b - a > opt.tol * std::max({1.0, std::abs(a), std::abs(b)}); ++it) {
            double m = 0.5 * (a + b);
            if (m <= a || m >= b)
                break;
            double fm = kernel_secular(k, m);
            if (fm == 0)
                return m;
            if ((fm > 0) == (fa > 0)) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        return 0.5 * (a + b);
    };
    std::function<void(double, double, long long, long long)> refine = [&](double a, double b, long long na,
                                                                           long long nb) {
        if (nb < na)
            numerical("InconsistentCount", "counting function decreases on [" + std::to_string(a) + ", " +
                                               std::to_string(b) + "]");
        if (nb == na)
            return;
        if (nb - na == 1) {
            out.roots.push_back(polish(a, b, na, nb));
            return;
        }
        double m = 0.5 * (a + b);
        if (b - a <= opt.tol * std::max({1.0, std::abs(a), std::abs(b)}) || m <= a || m >= b) {
            for (long long i = na; i < nb; ++i)
                out.roots.push_back(m);
            return;
        }
        long long nm = count(m);
        refine(a, m, na, nm);
        refine(m, b, nm, nb);
    };
    const int grid = 256;
    std::vector<double> lam(grid + 1);
    std::vector<long long> cnt(grid + 1);
    for (int i = 0; i <= grid; ++i) {
        lam[i] = (i == grid) ? w.hi : w.lo + (w.hi - w.lo) * i / grid;
        cnt[i] = count(lam[i]);
    }
    out.n_lo = cnt.front();
    out.n_hi = cnt.back();
    for (int i = 0; i < grid; ++i)
        refine(lam[i], lam[i + 1], cnt[i], cnt[i + 1]);
    return out;
}

// ---------------------------------------------------------------- mesh-based engines

enum class Scheme { Consistent, Lumped };

struct Tridiag {
    std::vector<double> ad, ao, md, mo;
};

Tridiag assemble(const TruncatedProblem& pb, double h, long long mult, Scheme scheme, long long max_nodes)
{
    const OperatorSpec& spec = pb.spec;
    Tridiag t;
    auto push_node = [&] {
        t.ad.push_back(0);
        t.md.push_back(0);
        if (t.ad.size() > 1) {
            t.ao.push_back(0);
            t.mo.push_back(0);
        }
        if (static_cast<long long>(t.ad.size()) > max_nodes)
            numerical("TooLarge", "mesh exceeds " + std::to_string(max_nodes) + " points");
    };
    push_node();
    for (int k = 1; k <= spec.K(); ++k) {
        for (const LocalPiece& p : merged_pieces(spec, k)) {
            double len = p.u1 - p.u0;
            long long ne = std::max<long long>(1, static_cast<long long>(std::ceil(len / h - 1e-9))) * mult;
            double e = len / static_cast<double>(ne);
            for (long long i = 0; i < ne; ++i) {
                double ua = p.u0 + e * static_cast<double>(i), ub = ua + e;
                double qa = p.a0 + p.a1 * ua, qb = p.a0 + p.a1 * ub;
                std::size_t l = t.ad.size() - 1;
                push_node();
                std::size_t r = l + 1;
                t.ad[l] += 1 / e;
                t.ad[r] += 1 / e;
                t.ao[l] += -1 / e;
                if (scheme == Scheme::Consistent) {
                    t.ad[l] += e * (3 * qa + qb) / 12;
                    t.ad[r] += e * (qa + 3 * qb) / 12;
                    t.ao[l] += e * (qa + qb) / 12;
                    t.md[l] += e / 3;
                    t.md[r] += e / 3;
                    t.mo[l] += e / 6;
                } else {
                    t.ad[l] += e * (3 * qa + qb) / 8;
                    t.ad[r] += e * (qa + 3 * qb) / 8;
                    t.md[l] += e / 2;
                    t.md[r] += e / 2;
                }
            }
        }
        if (k == spec.K())
            break;
        double b = spec.beta(k);
        if (b == 0)
            continue;
        std::size_t l = t.ad.size() - 1;
        push_node();
        if (std::isfinite(b)) {
            double w = 1 / b;
            t.ad[l] += w;
            t.ad[l + 1] += w;
            t.ao[l] += -w;
        }
    }
    if (pb.right_bc == BoundaryCondition::Dirichlet) {
        t.ad.pop_back();
        t.md.pop_back();
        t.ao.pop_back();
        t.mo.pop_back();
    }
    return t;
}

long long pencil_count(const Tridiag& t, double lambda)
{
    std::size_t n = t.ad.size();
    std::vector<double> d(n), o(n ? n - 1 : 0);
    for (std::size_t i = 0; i < n; ++i)
        d[i] = t.ad[i] - lambda * t.md[i];
    for (std::size_t i = 0; i + 1 < n; ++i)
        o[i] = t.ao[i] - lambda * t.mo[i];
    return negative_pivots(d, o);
}

double pencil_eig(const Tridiag& t, long long index, double lo, double hi)
{
    // lo has count <= index, hi has count > index
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max({1.0, std::abs(lo), std::abs(hi)}); ++it) {
        double m = 0.5 * (lo + hi);
        if (m <= lo || m >= hi)
            break;
        if (pencil_count(t, m) > index)
            hi = m;
        else
            lo = m;
    }
    return 0.5 * (lo + hi);
}

std::pair<double, double> pencil_bounds(const Tridiag& t, long long i0, long long i1, Window w)
{
    double lo = std::min(w.lo, -1.0), hi = std::max(w.hi, 1.0);
    for (int it = 0; it < 200 && pencil_count(t, lo) > i0; ++it)
        lo = 2 * lo - 1;
    for (int it = 0; it < 200 && pencil_count(t, hi) <= i1; ++it)
        hi = 2 * hi + 1;
    return {lo, hi};
}

std::vector<double> pencil_eigs(const Tridiag& t, long long i0, long long i1, Window w)
{
    std::vector<double> out;
    if (i1 < i0)
        return out;
    auto [lo, hi] = pencil_bounds(t, i0, i1, w);
    double prev = lo;
    for (long long i = i0; i <= i1; ++i) {
        double v = pencil_eig(t, i, prev, hi);
        out.push_back(v);
        prev = std::max(lo, v - 1e-9 * std::max(1.0, std::abs(v)));
        if (pencil_count(t, prev) > i)
            prev = lo;
    }
    return out;
}

long long pencil_size(const Tridiag& t) { return static_cast<long long>(t.ad.size()); }

}  // namespace

// ---------------------------------------------------------------- public API

double neumann_lattice_value(double d, double c, long long n, bool dirichlet_right)
{
    double m = dirichlet_right ? static_cast<double>(n) + 0.5 : static_cast<double>(n);
    double w = kPi * m / d;
    return w * w + c;
}

std::string bc_name(BoundaryCondition bc) { return bc == BoundaryCondition::Neumann ? "neumann" : "dirichlet"; }

std::vector<std::pair<double, int>> SpectralResult::grouped(double rel_tol) const
{
    std::vector<std::pair<double, int>> out;
    for (double v : eigenvalues) {
        if (!out.empty() && std::abs(v - out.back().first) <= rel_tol * std::max(1.0, std::abs(v)))
            ++out.back().second;
        else
            out.emplace_back(v, 1);
    }
    return out;
}

TruncatedProblem make_problem(const OperatorSpec& spec, BoundaryCondition bc, int K)
{
    TruncatedProblem pb;
    if (K <= 0 || K >= spec.K()) {
        pb.spec = spec;
    } else {
        std::vector<double> pts(spec.points().begin(), spec.points().begin() + K);
        std::vector<double> betas(spec.betas().begin(), spec.betas().begin() + K);
        std::vector<Piece> pieces;
        for (int k = 1; k <= K; ++k)
            for (const Piece& p : spec.cell_pieces(k))
                pieces.push_back(p);
        pb.spec = build_spec(pts, betas, pieces);
    }
    pb.right_bc = bc;
    const OperatorSpec& s = pb.spec;
    int first = 1;
    for (int k = 1; k <= s.K(); ++k) {
        if (k == s.K() || std::isinf(s.beta(k))) {
            Block b;
            b.first_cell = first;
            b.last_cell = k;
            b.a = s.x(first - 1);
            b.b = s.x(k);
            b.right_dirichlet = (k == s.K()) && bc == BoundaryCondition::Dirichlet;
            pb.blocks.push_back(b);
            first = k + 1;
        }
    }
    return pb;
}

Eigen::Matrix2d transfer_matrix(double length, double c, double lambda)
{
    if (!(length > 0))
        invalid("InvalidPiece", "piece length must be positive");
    double z = (c - lambda) * length * length;
    Eigen::Matrix2d T;
    double C, S;
    if (std::abs(z) < 1e-6) {
        C = 1 + z / 2 + z * z / 24;
        S = 1 + z / 6 + z * z / 120;
    } else if (z > 0) {
        double mu = std::sqrt(z);
        C = std::cosh(mu);
        S = std::sinh(mu) / mu;
    } else {
        double th = std::sqrt(-z);
        C = std::cos(th);
        S = std::sin(th) / th;
    }
    T << C, S * length, S * length * (c - lambda), C;
    return T;
}

Eigen::Matrix2d interface_matrix(double beta)
{
    if (std::isinf(beta))
        invalid("InfiniteBeta", "beta = +inf decouples the problem; split into blocks instead");
    Eigen::Matrix2d J;
    J << 1, beta, 0, 1;
    return J;
}

double secular(const TruncatedProblem& pb, int block, double lambda, const ShootingOptions& opt, double lambda_scale)
{
    if (block < 0 || block >= static_cast<int>(pb.blocks.size()))
        invalid("IndexOutOfRange", "block index out of range");
    double scale = lambda_scale > 0 ? lambda_scale : default_scale(pb, lambda, lambda);
    Kernel k = build_kernel(pb, pb.blocks[block], scale, false);
    (void)opt;
    return kernel_secular(k, lambda);
}

long long shooting_count(const TruncatedProblem& pb, double lambda, const ShootingOptions& opt, double lambda_scale)
{
    double scale = lambda_scale > 0 ? lambda_scale : default_scale(pb, lambda, lambda);
    long long n = 0;
    for (const Block& b : pb.blocks)
        n += kernel_count(build_kernel(pb, b, scale, opt.analytic_cells), lambda);
    return n;
}

SpectralResult eigenvalues_shooting(const TruncatedProblem& pb, Window w, const ShootingOptions& opt)
{
    if (!(std::isfinite(w.lo) && std::isfinite(w.hi) && w.hi > w.lo))
        invalid("InvalidWindow", "window must be finite with lo < hi");
    double scale = default_scale(pb, w.lo, w.hi);
    std::vector<BlockRoots> per(pb.blocks.size());
    parallel_for(static_cast<int>(pb.blocks.size()), opt.jobs, [&](int i) {
        Kernel k = build_kernel(pb, pb.blocks[i], scale, opt.analytic_cells);
        per[i] = block_roots(k, w, opt);
    });
    SpectralResult r;
    r.method = "shooting";
    long long n_lo = 0, n_hi = 0;
    for (const BlockRoots& b : per) {
        r.eigenvalues.insert(r.eigenvalues.end(), b.roots.begin(), b.roots.end());
        n_lo += b.n_lo;
        n_hi += b.n_hi;
    }
    std::sort(r.eigenvalues.begin(), r.eigenvalues.end());
    for (double v : r.eigenvalues)
        r.errors.push_back(opt.tol * std::max(1.0, std::abs(v)));
    r.counting = {{w.lo, n_lo}, {w.hi, n_hi}};
    return r;
}

long long galerkin_count(const TruncatedProblem& pb, double h, double lambda)
{
    return pencil_count(assemble(pb, h, 1, Scheme::Consistent, 50000000), lambda);
}

SpectralResult galerkin_spectrum(const TruncatedProblem& pb, double h, Window w)
{
    Tridiag t = assemble(pb, h, 1, Scheme::Consistent, 50000000);
    long long n0 = pencil_count(t, w.lo), n1 = pencil_count(t, w.hi);
    SpectralResult r;
    r.method = "galerkin";
    r.eigenvalues = pencil_eigs(t, n0, n1 - 1, w);
    for (double v : r.eigenvalues)
        r.errors.push_back(h * h * v * v / 12);
    r.counting = {{w.lo, n0}, {w.hi, n1}};
    return r;
}

SpectralResult galerkin_extrapolated(const TruncatedProblem& pb, Window w, const GalerkinOptions& opt)
{
    int levels = std::max(1, opt.levels);
    std::vector<Tridiag> mats;
    for (int l = 0; l < levels; ++l)
        mats.push_back(assemble(pb, opt.h, 1LL << l, Scheme::Consistent, 50000000));
    const Tridiag& fine = mats.back();
    long long n0 = pencil_count(fine, w.lo), n1 = pencil_count(fine, w.hi);
    long long i0 = std::max<long long>(0, n0 - 2);
    long long i1 = std::min(pencil_size(mats.front()) - 1, n1 + 1);
    std::vector<std::vector<double>> vals;
    for (const Tridiag& t : mats)
        vals.push_back(pencil_eigs(t, i0, i1, w));
    SpectralResult r;
    r.method = "galerkin";
    for (long long i = 0; i <= i1 - i0; ++i) {
        double est, err;
        if (levels == 1) {
            est = vals[0][i];
            err = opt.h * opt.h * est * est / 12;
        } else if (levels == 2) {
            est = (4 * vals[1][i] - vals[0][i]) / 3;
            err = std::abs(est - vals[1][i]) / 16;
        } else {
            double r1 = (4 * vals[levels - 2][i] - vals[levels - 3][i]) / 3;
            double r2 = (4 * vals[levels - 1][i] - vals[levels - 2][i]) / 3;
            est = (16 * r2 - r1) / 15;
            err = std::abs(est - r2);
        }
        if (est >= w.lo && est < w.hi) {
            r.eigenvalues.push_back(est);
            r.errors.push_back(err);
        }
    }
    r.counting = {{w.lo, n0}, {w.hi, n1}};
    return r;
}

double observed_order(double exact, double coarse, double fine)
{
    return std::log2(std::abs(coarse - exact) / std::abs(fine - exact));
}

std::vector<double> dense_oracle_level(const TruncatedProblem& pb, double h, long long max_points)
{
    Tridiag t = assemble(pb, h, 1, Scheme::Lumped, max_points);
    long long n = pencil_size(t);
    Eigen::VectorXd diag(n), sub(std::max<long long>(n - 1, 0));
    for (long long i = 0; i < n; ++i)
        diag[i] = t.ad[i] / t.md[i];
    for (long long i = 0; i + 1 < n; ++i)
        sub[i] = t.ao[i] / std::sqrt(t.md[i] * t.md[i + 1]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        numerical("EigenFailure", "tridiagonal QL iteration did not converge");
    const Eigen::VectorXd& ev = es.eigenvalues();
    return std::vector<double>(ev.data(), ev.data() + ev.size());
}

SpectralResult dense_oracle(const TruncatedProblem& pb, Window w, const OracleOptions& opt)
{
    SpectralResult r;
    r.method = "oracle";
    std::vector<double> coarse = dense_oracle_level(pb, opt.h, opt.max_points);
    if (!opt.extrapolate) {
        for (double v : coarse)
            if (v >= w.lo && v < w.hi) {
                r.eigenvalues.push_back(v);
                r.errors.push_back(opt.h * opt.h * v * v / 12);
            }
        return r;
    }
    std::vector<double> fine = dense_oracle_level(pb, opt.h / 2, opt.max_points);
    for (std::size_t i = 0; i < coarse.size(); ++i) {
        double est = (4 * fine[i] - coarse[i]) / 3;
        if (est >= w.lo && est < w.hi) {
            r.eigenvalues.push_back(est);
            r.errors.push_back(std::abs(est - fine[i]) / 16);
        }
    }
    return r;
}

long long counting_function(const TruncatedProblem& pb, double lambda, const CountingOptions& opt)
{
    double h = opt.h;
    if (h <= 0)
        h = std::min(1.0 / 32, pb.spec.d_min() / 8);
    Tridiag t = assemble(pb, h, 1, Scheme::Consistent, 50000000);
    double delta = opt.tol * std::max(1.0, std::abs(lambda));
    long long below = pencil_count(t, lambda - delta), above = pencil_count(t, lambda + delta);
    if (below != above)
        numerical("NearEigenvalue", "lambda = " + std::to_string(lambda) + " lies within " + std::to_string(delta) +
                                        " of an eigenvalue; perturb it");
    return pencil_count(t, lambda);
}

double spectrum_lower_bound(const TruncatedProblem& pb, const ShootingOptions& opt)
{
    double qmin = 0;
    for (const Piece& p : pb.spec.pieces())
        qmin = std::min({qmin, p.c0 + p.c1 * p.a, p.c0 + p.c1 * p.b});
    double lo = qmin - 1;
    for (int i = 0; i < 200; ++i) {
        if (shooting_count(pb, lo, opt) == 0)
            return lo;
        lo -= std::max(1.0, std::abs(lo));
    }
    numerical("NoLowerBound", "could not bracket the bottom of the spectrum");
}

EngineComparison compare_engines(const TruncatedProblem& pb, int n, const ShootingOptions& so,
                                 const GalerkinOptions& go, const OracleOptions& oo)
{
    if (n < 1)
        invalid("InvalidWindow", "need at least one eigenvalue to compare");
    EngineComparison c;
    double lo = spectrum_lower_bound(pb, so);
    double hi = lo + 1;
    for (int i = 0; shooting_count(pb, hi, so) < n + 1; ++i) {
        if (i > 200)
            numerical("NoUpperBound", "could not bracket the lowest eigenvalues");
        hi = lo + 2 * (hi - lo);
    }
    SpectralResult probe = eigenvalues_shooting(pb, {lo, hi}, so);
    // split between eigenvalue n and the next distinct one
    std::size_t m = static_cast<std::size_t>(n);
    while (m < probe.eigenvalues.size() && probe.eigenvalues[m] - probe.eigenvalues[m - 1] <=
                                               1e-9 * std::max(1.0, std::abs(probe.eigenvalues[m])))
        ++m;
    double top = m < probe.eigenvalues.size() ? (probe.eigenvalues[m - 1] + probe.eigenvalues[m]) / 2 : hi;
    c.window = {lo, top};
    c.shooting = eigenvalues_shooting(pb, c.window, so);
    c.galerkin = galerkin_extrapolated(pb, c.window, go);
    c.oracle = dense_oracle(pb, c.window, oo);
    c.count_shooting = shooting_count(pb, top, so);
    double h_fine = go.h / static_cast<double>(1LL << (std::max(1, go.levels) - 1));
    c.count_galerkin = galerkin_count(pb, h_fine, top);
    c.count_oracle = static_cast<long long>(c.oracle.eigenvalues.size());
    const std::vector<double>* engines[] = {&c.shooting.eigenvalues, &c.galerkin.eigenvalues, &c.oracle.eigenvalues};
    std::size_t k = std::min({engines[0]->size(), engines[1]->size(), engines[2]->size(), static_cast<std::size_t>(n)});
    for (std::size_t i = 0; i < k; ++i)
        for (int a = 0; a < 3; ++a)
            for (int b = a + 1; b < 3; ++b) {
                double x = (*engines[a])[i], y = (*engines[b])[i];
                c.worst_relative = std::max(c.worst_relative, std::abs(x - y) / std::max(1.0, std::abs(x)));
            }
    return c;
}

OperatorSpec random_small_spec(std::uint64_t seed, int max_cells)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int cells = 2 + static_cast<int>(unit(rng) * (std::max(2, max_cells) - 1));
    cells = std::min(cells, std::max(2, max_cells));
    std::vector<double> points, betas;
    std::vector<Piece> pieces;
    double x = 0;
    for (int k = 0; k < cells; ++k) {
        double d = 0.5 + 1.5 * unit(rng);
        double q1 = -5 + 10 * unit(rng);
        if (unit(rng) < 0.5) {
            pieces.push_back({x, x + d, q1, 0});
        } else {
            double cut = x + d * (0.25 + 0.5 * unit(rng));
            pieces.push_back({x, cut, q1, 0});
            pieces.push_back({cut, x + d, -5 + 10 * unit(rng), 0});
        }
        x += d;
        points.push_back(x);
        double mag = 0.2 + 2.8 * unit(rng);
        betas.push_back(unit(rng) < 0.5 ? -mag : mag);
    }
    return build_spec(points, betas, pieces);
}

}  // namespace dspec
