#include "dspec/neumann.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "dspec/asymptotics.hpp"
#include "dspec/criteria.hpp"
#include "dspec/eigensolver.hpp"
#include "dspec/errors.hpp"
#include "dspec/parallel.hpp"

namespace dspec {

namespace {

std::vector<LocalPiece> merge_equal(const std::vector<LocalPiece>& in)
{
    std::vector<LocalPiece> out;
    for (const LocalPiece& p : in) {
        if (!out.empty() && out.back().a0 == p.a0 && out.back().a1 == p.a1)
            out.back().u1 = p.u1;
        else
            out.push_back(p);
    }
    return out;
}

void add_unique(std::vector<double>& v, double x)
{
    for (double y : v)
        if (std::abs(x - y) <= 1e-9 * std::max(1.0, std::abs(y)))
            return;
    v.push_back(x);
}

}  // namespace

CellSpectrum cell_neumann_eigs(double d, const std::vector<LocalPiece>& pieces, double cutoff)
{
    CellSpectrum out;
    std::vector<LocalPiece> q = merge_equal(pieces);
    double qmin = kInf;
    for (const LocalPiece& p : q)
        qmin = std::min({qmin, p.a0 + p.a1 * p.u0, p.a0 + p.a1 * p.u1});
    if (!(cutoff >= qmin))
        invalid("CutoffTooLow", "cutoff " + std::to_string(cutoff) + " is below min q = " + std::to_string(qmin));
    if (q.size() == 1 && q[0].a1 == 0) {
        out.method = "analytic-constant";
        for (long long n = 0;; ++n) {
            double v = neumann_lattice_value(d, q[0].a0, n);
            if (v > cutoff)
                break;
            out.eigenvalues.push_back(v);
        }
        return out;
    }
    out.method = "shooting-affine";
    std::vector<Piece> abs;
    for (const LocalPiece& p : q)
        abs.push_back({p.u0, p.u1, p.a0, p.a1});
    abs.front().a = 0;
    abs.back().b = d;
    OperatorSpec cell = build_spec({d}, {kInf}, abs);
    ShootingOptions opt;
    opt.analytic_cells = false;
    SpectralResult r = eigenvalues_shooting(make_problem(cell), {qmin - 1.0, std::nextafter(cutoff, kInf)}, opt);
    out.eigenvalues = r.eigenvalues;
    return out;
}

CellSpectrum cell_neumann_eigs(const OperatorSpec& spec, int k, double cutoff)
{
    if (k < 1 || k > spec.K())
        invalid("IndexOutOfRange", "cell index " + std::to_string(k) + " outside 1.." + std::to_string(spec.K()));
    CellSpectrum s = cell_neumann_eigs(spec.d(k), spec.cell_local_pieces(k), cutoff);
    s.k = k;
    return s;
}

std::vector<DirectSumPoint> direct_sum_spectrum(const OperatorSpec& spec, double cutoff, int jobs)
{
    std::vector<CellSpectrum> cells(spec.K());
    parallel_for(spec.K(), jobs, [&](int i) {
        int k = i + 1;
        std::vector<LocalPiece> q = spec.cell_local_pieces(k);
        double qmin = kInf;
        for (const LocalPiece& p : q)
            qmin = std::min({qmin, p.a0 + p.a1 * p.u0, p.a0 + p.a1 * p.u1});
        if (cutoff >= qmin)
            cells[i] = cell_neumann_eigs(spec, k, cutoff);
        cells[i].k = k;
    });
    std::vector<std::pair<double, int>> all;
    for (const CellSpectrum& c : cells)
        for (double v : c.eigenvalues)
            all.emplace_back(v, static_cast<int>(c.k));
    std::sort(all.begin(), all.end());
    std::vector<DirectSumPoint> out;
    for (const auto& [v, k] : all) {
        if (!out.empty() && std::abs(v - out.back().lambda) <= 1e-10 * std::max(1.0, std::abs(v))) {
            ++out.back().multiplicity;
            out.back().cells.push_back(k);
        } else {
            out.push_back({v, 1, {k}});
        }
    }
    return out;
}

LengthSet compute_D(const OperatorSpec& spec)
{
    LengthSet D;
    const TailSpec& t = spec.tail();
    if (t.recurrent_lengths || t.d_limit) {
        std::vector<std::string> from;
        if (t.recurrent_lengths) {
            for (double l : *t.recurrent_lengths)
                add_unique(D.values, l);
            from.push_back("recurrent_lengths");
        }
        if (t.d_limit) {
            if (std::isinf(*t.d_limit))
                invalid("InvalidTail", "d_limit = inf: the essential spectrum model assumes bounded cell lengths");
            if (*t.d_limit > 0)
                add_unique(D.values, *t.d_limit);
            from.push_back("d_limit");
        }
        D.provenance = "declaration";
        for (const std::string& f : from)
            D.provenance += " " + f;
    } else if (spec.partition_extends()) {
        const PartitionGenerator* g = spec.partition_generator();
        for (const LimitEstimate& e : probe_all([g](long long k) { return g->d(k); }, g->period())) {
            if (e.trend != Trend::Converges)
                undecidable("UndecidableTail", "cell lengths along residue " + std::to_string(e.residue) +
                                                   " have no limit: " + e.describe());
            if (!e.converges_to_zero())
                add_unique(D.values, e.limit);
        }
        D.provenance = "generator " + g->kind();
    } else {
        undecidable("UndecidableTail",
                    "the recurrent cell lengths need a tail declaration (d_limit or recurrent_lengths) or a "
                    "partition generator");
    }
    std::sort(D.values.begin(), D.values.end());
    return D;
}

EssSpectrumModel ess_spectrum_N(const OperatorSpec& spec, double cutoff)
{
    LengthSet D = compute_D(spec);
    Verdict qm = check_q_mean_vanishes(spec);
    if (!qm.holds())
        undecidable("HypothesisNotMet", "cell means of |q| must vanish (q_mean_vanishes is " +
                                            status_name(qm.status) + ")");
    EssSpectrumModel m;
    m.D = D.values;
    m.provenance = D.provenance + "; q_mean_vanishes from " + qm.source;
    m.points.push_back(0.0);
    for (double l : D.values) {
        for (long long n = 1;; ++n) {
            double v = neumann_lattice_value(l, 0.0, n);
            if (v > cutoff)
                break;
            add_unique(m.points, v);
        }
    }
    std::sort(m.points.begin(), m.points.end());
    return m;
}

EssSpectrumModel periodic_ess_spectrum(const OperatorSpec& spec, double cutoff)
{
    if (!spec.extends())
        undecidable("UndecidableTail", "periodic model needs generators for partition, strengths and potential");
    std::string kind = spec.partition_generator()->kind();
    if (kind != "arithmetic" && kind != "periodic_lengths")
        undecidable("HypothesisNotMet", "partition is not periodic (" + kind + ")");
    const int P = spec.structure_period();
    auto same = [](const std::vector<LocalPiece>& a, const std::vector<LocalPiece>& b) {
        if (a.size() != b.size())
            return false;
        for (std::size_t i = 0; i < a.size(); ++i) {
            double s = std::max(1.0, std::abs(a[i].a0));
            if (std::abs(a[i].u0 - b[i].u0) > 1e-9 || std::abs(a[i].u1 - b[i].u1) > 1e-9 ||
                std::abs(a[i].a0 - b[i].a0) > 1e-9 * s || std::abs(a[i].a1 - b[i].a1) > 1e-12)
                return false;
        }
        return true;
    };
    EssSpectrumModel m;
    m.provenance = "periodic cells (period " + std::to_string(P) + ")";
    for (int r = 1; r <= P; ++r) {
        std::vector<LocalPiece> q = spec.cell_local_pieces_any(r);
        for (long long shift : {1LL, 7LL, 1000LL})
            if (!same(q, spec.cell_local_pieces_any(r + shift * P)))
                undecidable("HypothesisNotMet", "potential does not repeat with the partition period");
        double d = spec.d_any(r);
        add_unique(m.D, d);
        double qmin = kInf;
        for (const LocalPiece& p : q)
            qmin = std::min({qmin, p.a0 + p.a1 * p.u0, p.a0 + p.a1 * p.u1});
        if (cutoff < qmin)
            continue;
        for (double v : cell_neumann_eigs(d, q, cutoff).eigenvalues)
            add_unique(m.points, v);
    }
    std::sort(m.D.begin(), m.D.end());
    std::sort(m.points.begin(), m.points.end());
    return m;
}

}  // namespace dspec
