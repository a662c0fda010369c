#include "dspec/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dspec/asymptotics.hpp"
#include "dspec/errors.hpp"

namespace dspec {

namespace {

bool near(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::max(std::abs(a), std::abs(b))); }

double number(const json& j, const char* key, const std::string& ctx)
{
    if (!j.contains(key))
        invalid("InvalidConfig", ctx + ": missing '" + key + "'");
    return parse_extended(j.at(key), ctx + "." + key);
}

double number_or(const json& j, const char* key, double fallback, const std::string& ctx)
{
    return j.contains(key) ? parse_extended(j.at(key), ctx + "." + key) : fallback;
}

long long count_of(const json& j, const std::string& ctx)
{
    if (!j.contains("count") || !j.at("count").is_number_integer())
        invalid("InvalidConfig", ctx + ": 'count' must be an integer");
    long long n = j.at("count").get<long long>();
    if (n < 1 || n > 10000000)
        invalid("InvalidConfig", ctx + ": 'count' out of range");
    return n;
}

// ---------------------------------------------------------------- partitions

class ArithmeticPartition : public PartitionGenerator {
public:
    ArithmeticPartition(double start, double step) : start_(start), step_(step) {}
    std::string kind() const override { return "arithmetic"; }
    double x(long long k) const override { return k == 0 ? 0.0 : start_ + static_cast<double>(k - 1) * step_; }
    double d(long long k) const override { return k == 1 ? start_ : step_; }
    int period() const override { return 1; }

private:
    double start_, step_;
};

class SumPowerPartition : public PartitionGenerator {
public:
    SumPowerPartition(double p, long long count) : p_(p)
    {
        long long n = std::max<long long>(count, 4096);
        prefix_.resize(n + 1);
        long double s = 0;
        prefix_[0] = 0;
        for (long long k = 1; k <= n; ++k) {
            s += std::pow(static_cast<long double>(k), -static_cast<long double>(p_));
            prefix_[k] = static_cast<double>(s);
        }
    }
    std::string kind() const override { return "sum_power"; }
    double d(long long k) const override { return std::pow(static_cast<double>(k), -p_); }
    int period() const override { return 1; }

    double x(long long k) const override
    {
        long long n0 = static_cast<long long>(prefix_.size()) - 1;
        if (k <= n0)
            return prefix_[k];
        // Euler-Maclaurin continuation from n0.
        double a = static_cast<double>(n0), b = static_cast<double>(k);
        auto f = [&](double t) { return std::pow(t, -p_); };
        auto f1 = [&](double t) { return -p_ * std::pow(t, -p_ - 1); };
        auto f3 = [&](double t) { return -p_ * (p_ + 1) * (p_ + 2) * std::pow(t, -p_ - 3); };
        double integral = (std::abs(p_ - 1) < 1e-15) ? std::log(b / a)
                                                      : (std::pow(b, 1 - p_) - std::pow(a, 1 - p_)) / (1 - p_);
        return prefix_[n0] + integral + (f(b) - f(a)) / 2 + (f1(b) - f1(a)) / 12 - (f3(b) - f3(a)) / 720;
    }

private:
    double p_;
    std::vector<double> prefix_;
};

class PeriodicLengthsPartition : public PartitionGenerator {
public:
    explicit PeriodicLengthsPartition(std::vector<double> lengths) : lengths_(std::move(lengths))
    {
        prefix_.assign(lengths_.size() + 1, 0.0);
        for (std::size_t i = 0; i < lengths_.size(); ++i)
            prefix_[i + 1] = prefix_[i] + lengths_[i];
    }
    std::string kind() const override { return "periodic_lengths"; }
    double x(long long k) const override
    {
        long long m = static_cast<long long>(lengths_.size());
        return static_cast<double>(k / m) * prefix_[m] + prefix_[k % m];
    }
    double d(long long k) const override { return lengths_[(k - 1) % lengths_.size()]; }
    int period() const override { return static_cast<int>(lengths_.size()); }

private:
    std::vector<double> lengths_, prefix_;
};

// x_{2j-1} = j, x_{2j} = j + coeff * j^exponent.
class PairedPartition : public PartitionGenerator {
public:
    PairedPartition(double coeff, double exponent) : c_(coeff), e_(exponent) {}
    std::string kind() const override { return "paired"; }
    double x(long long k) const override
    {
        if (k == 0)
            return 0.0;
        double j = static_cast<double>((k + 1) / 2);
        return (k % 2 == 1) ? j : j + gap(j);
    }
    double d(long long k) const override
    {
        double j = static_cast<double>((k + 1) / 2);
        if (k % 2 == 0)
            return gap(j);
        return j == 1 ? 1.0 : 1.0 - gap(j - 1);
    }
    int period() const override { return 2; }

private:
    double gap(double j) const { return c_ * std::pow(j, e_); }
    double c_, e_;
};

// ---------------------------------------------------------------- strengths

struct Law {
    bool infinite = false;
    double coeff = 0, exponent = 0, offset = 0;
    double at(double j) const { return infinite ? kInf : coeff * std::pow(j, exponent) + offset; }
};

Law parse_law(const json& j, const std::string& ctx)
{
    Law law;
    if (j.is_string() || j.is_number()) {
        double v = parse_extended(j, ctx);
        if (std::isinf(v))
            law.infinite = true;
        else
            law.offset = v;
        return law;
    }
    if (!j.is_object())
        invalid("InvalidConfig", ctx + ": expected a number, \"inf\" or a law object");
    law.coeff = number_or(j, "coeff", 0.0, ctx);
    law.exponent = number_or(j, "exponent", 0.0, ctx);
    law.offset = number_or(j, "offset", 0.0, ctx);
    return law;
}

class LawStrengths : public StrengthGenerator {
public:
    LawStrengths(std::string kind, std::vector<Law> laws) : kind_(std::move(kind)), laws_(std::move(laws)) {}
    std::string kind() const override { return kind_; }
    double beta(long long k) const override
    {
        long long p = static_cast<long long>(laws_.size());
        long long r = (k - 1) % p;
        double j = static_cast<double>((k - 1) / p + 1);
        return laws_[r].at(p == 1 ? static_cast<double>(k) : j);
    }
    int period() const override { return static_cast<int>(laws_.size()); }

private:
    std::string kind_;
    std::vector<Law> laws_;
};

class ScaledStrengths : public StrengthGenerator {
public:
    ScaledStrengths(std::shared_ptr<const StrengthGenerator> base, double h) : base_(std::move(base)), h_(h) {}
    std::string kind() const override { return base_->kind(); }
    double beta(long long k) const override { return h_ * base_->beta(k); }
    int period() const override { return base_->period(); }

private:
    std::shared_ptr<const StrengthGenerator> base_;
    double h_;
};

// ---------------------------------------------------------------- potentials

// Adds the piece [u0, u1] of a window of length len starting at a.  Ends within rounding
// of the window ends are snapped so the pieces cover exactly [0, len] far from the origin.
void push_local(std::vector<LocalPiece>& out, double a, double len, double u0, double u1, double a0, double a1)
{
    double tol = 8 * std::numeric_limits<double>::epsilon() * (std::abs(a) + len);
    u0 = u0 < tol ? 0.0 : u0;
    u1 = u1 > len - tol ? len : u1;
    if (u1 - u0 > tol)
        out.push_back({u0, u1, a0, a1});
}

void clip_absolute(const Piece& p, double a, double len, std::vector<LocalPiece>& out)
{
    double lo = std::max(p.a, a), hi = std::min(p.b, a + len);
    if (hi <= lo)
        return;
    push_local(out, a, len, lo - a, hi - a, p.c0 + p.c1 * a, p.c1);
}

class ZeroPotential : public PotentialGenerator {
public:
    std::string kind() const override { return "zero"; }
    void cell_pieces(long long, double left, double d, std::vector<LocalPiece>& out) const override
    {
        pieces(left, d, out);
    }
    bool global() const override { return true; }
    void pieces(double, double len, std::vector<LocalPiece>& out) const override { out.push_back({0, len, 0, 0}); }
    int period() const override { return 1; }
    bool periodic_bounded() const override { return true; }
};

class RepeatPotential : public PotentialGenerator {
public:
    RepeatPotential(std::vector<Piece> pattern, double period, bool translate)
        : pattern_(std::move(pattern)), period_(period), translate_(translate)
    {
        bounded_ = !translate_ || std::all_of(pattern_.begin(), pattern_.end(), [](const Piece& p) { return p.c1 == 0; });
    }
    std::string kind() const override { return translate_ ? "repeat_translate" : "repeat_periodic"; }
    void cell_pieces(long long, double left, double d, std::vector<LocalPiece>& out) const override
    {
        pieces(left, d, out);
    }
    bool global() const override { return true; }
    int period() const override { return 1; }
    bool periodic_bounded() const override { return bounded_; }
    double x_period() const override { return period_; }

    void pieces(double a, double len, std::vector<LocalPiece>& out) const override
    {
        double m = std::floor(a / period_);
        double end = a + len;
        for (; m * period_ < end; m += 1) {
            double shift = m * period_;
            for (const Piece& p : pattern_) {
                double lo = std::max(shift + p.a, a), hi = std::min(shift + p.b, end);
                if (!(hi > lo))
                    continue;
                double origin = translate_ ? 0.0 : shift;
                // value of c0 + c1 (x - origin) at x = a
                push_local(out, a, len, lo - a, hi - a, p.c0 + p.c1 * (a - origin), p.c1);
            }
        }
    }

private:
    std::vector<Piece> pattern_;
    double period_;
    bool translate_;
    bool bounded_;
};

class TailPiecePotential : public PotentialGenerator {
public:
    explicit TailPiecePotential(std::vector<Piece> pieces) : pieces_(std::move(pieces)) {}
    std::string kind() const override { return "tail_piece"; }
    void cell_pieces(long long, double left, double d, std::vector<LocalPiece>& out) const override
    {
        pieces(left, d, out);
    }
    bool global() const override { return true; }
    int period() const override { return 1; }
    bool periodic_bounded() const override { return pieces_.back().c1 == 0; }
    void pieces(double a, double len, std::vector<LocalPiece>& out) const override
    {
        for (const Piece& p : pieces_)
            clip_absolute(p, a, len, out);
    }

private:
    std::vector<Piece> pieces_;
};

struct PatternEntry {
    double from = 0, to = 1;
    Law c0, c1;
    bool absolute = false;
};

class CellPatternPotential : public PotentialGenerator {
public:
    explicit CellPatternPotential(std::vector<std::vector<PatternEntry>> cells) : cells_(std::move(cells)) {}
    std::string kind() const override { return "cell_pattern"; }
    bool global() const override { return false; }
    int period() const override { return static_cast<int>(cells_.size()); }
    void pieces(double, double, std::vector<LocalPiece>&) const override
    {
        invalid("InvalidConfig", "cell_pattern potential is defined per cell only");
    }
    void cell_pieces(long long k, double left, double d, std::vector<LocalPiece>& out) const override
    {
        long long p = static_cast<long long>(cells_.size());
        const auto& entries = cells_[(k - 1) % p];
        double j = static_cast<double>((k - 1) / p + 1);
        for (const PatternEntry& e : entries) {
            double c0 = e.c0.at(j), c1 = e.c1.at(j);
            double u0 = e.from * d, u1 = e.to * d;
            if (!(u1 > u0))
                continue;
            out.push_back({u0, u1, e.absolute ? c0 + c1 * left : c0, c1});
        }
    }

private:
    std::vector<std::vector<PatternEntry>> cells_;
};

// ---------------------------------------------------------------- parsing helpers

std::vector<Piece> parse_pieces(const json& arr, bool allow_inf_end)
{
    if (!arr.is_array() || arr.empty())
        invalid("InvalidConfig", "potential.pieces must be a non-empty array");
    std::vector<Piece> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const json& p = arr[i];
        std::string ctx = "potential.pieces[" + std::to_string(i) + "]";
        Piece pc{number(p, "from", ctx), number(p, "to", ctx), number_or(p, "c0", 0.0, ctx), number_or(p, "c1", 0.0, ctx)};
        if (!std::isfinite(pc.a) || !std::isfinite(pc.c0) || !std::isfinite(pc.c1))
            invalid("InvalidConfig", ctx + ": non-finite value");
        if (std::isinf(pc.b) && !(allow_inf_end && i + 1 == arr.size()))
            invalid("InvalidConfig", ctx + ": only the last piece may extend to inf");
        if (!(pc.b > pc.a))
            invalid("PieceGap", ctx + ": empty or reversed interval");
        out.push_back(pc);
    }
    if (!near(out.front().a, 0.0))
        invalid("PieceGap", "potential pieces must start at 0");
    out.front().a = 0.0;
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (!near(out[i].a, out[i - 1].b))
            invalid("PieceGap", "potential pieces leave a gap or overlap near x=" + std::to_string(out[i - 1].b));
        out[i].a = out[i - 1].b;
    }
    return out;
}

json pieces_to_json(const std::vector<Piece>& pieces)
{
    json arr = json::array();
    for (const Piece& p : pieces)
        arr.push_back({{"from", p.a}, {"to", extended_to_json(p.b)}, {"c0", p.c0}, {"c1", p.c1}});
    return arr;
}

void check_finite_positive(double v, const std::string& ctx)
{
    if (!std::isfinite(v) || v <= 0)
        invalid("InvalidConfig", ctx + " must be finite and positive");
}

std::shared_ptr<const PartitionGenerator> parse_partition_generator(const json& g, long long& count)
{
    std::string kind = g.value("kind", "");
    count = count_of(g, "partition.generator");
    if (kind == "arithmetic") {
        double step = number(g, "step", "partition.generator");
        double start = number_or(g, "start", step, "partition.generator");
        check_finite_positive(step, "partition.generator.step");
        check_finite_positive(start, "partition.generator.start");
        return std::make_shared<ArithmeticPartition>(start, step);
    }
    if (kind == "sum_power") {
        double p = number(g, "exponent", "partition.generator");
        if (!(p >= 0 && p <= 1))
            invalid("InvalidConfig", "partition.generator.exponent must lie in [0, 1]");
        return std::make_shared<SumPowerPartition>(p, count);
    }
    if (kind == "periodic_lengths") {
        if (!g.contains("lengths") || !g.at("lengths").is_array() || g.at("lengths").empty())
            invalid("InvalidConfig", "partition.generator.lengths must be a non-empty array");
        std::vector<double> lengths;
        for (const auto& v : g.at("lengths")) {
            double l = parse_extended(v, "partition.generator.lengths");
            check_finite_positive(l, "partition.generator.lengths[]");
            lengths.push_back(l);
        }
        return std::make_shared<PeriodicLengthsPartition>(lengths);
    }
    if (kind == "paired") {
        double c = number_or(g, "coeff", 0.5, "partition.generator");
        double e = number_or(g, "exponent", -1.0, "partition.generator");
        if (!(c > 0 && c < 1 && e <= 0))
            invalid("InvalidConfig", "paired partition needs 0 < coeff < 1 and exponent <= 0");
        return std::make_shared<PairedPartition>(c, e);
    }
    invalid("InvalidConfig", "unknown partition generator kind '" + kind + "'");
}

std::shared_ptr<const StrengthGenerator> parse_strength_generator(const json& g)
{
    std::string kind = g.value("kind", "");
    const std::string ctx = "strengths.generator";
    if (kind == "linear") {
        Law l;
        l.coeff = number(g, "slope", ctx);
        l.exponent = 1;
        l.offset = number_or(g, "offset", 0.0, ctx);
        return std::make_shared<LawStrengths>(kind, std::vector<Law>{l});
    }
    if (kind == "constant") {
        if (!g.contains("value"))
            invalid("InvalidConfig", ctx + ": missing 'value'");
        return std::make_shared<LawStrengths>(kind, std::vector<Law>{parse_law(g.at("value"), ctx + ".value")});
    }
    if (kind == "power") {
        Law l;
        l.coeff = number(g, "coeff", ctx);
        l.exponent = number(g, "exponent", ctx);
        return std::make_shared<LawStrengths>(kind, std::vector<Law>{l});
    }
    if (kind == "pattern") {
        if (!g.contains("laws") || !g.at("laws").is_array() || g.at("laws").empty())
            invalid("InvalidConfig", ctx + ".laws must be a non-empty array");
        std::vector<Law> laws;
        for (const auto& l : g.at("laws"))
            laws.push_back(parse_law(l, ctx + ".laws[]"));
        if (g.contains("period") && g.at("period").get<long long>() != static_cast<long long>(laws.size()))
            invalid("InvalidConfig", ctx + ": period must equal the number of laws");
        return std::make_shared<LawStrengths>(kind, laws);
    }
    invalid("InvalidConfig", "unknown strengths generator kind '" + kind + "'");
}

std::shared_ptr<const PotentialGenerator> parse_cell_pattern(const json& cp)
{
    if (!cp.contains("cells") || !cp.at("cells").is_array() || cp.at("cells").empty())
        invalid("InvalidConfig", "potential.cell_pattern.cells must be a non-empty array");
    std::vector<std::vector<PatternEntry>> cells;
    for (const auto& cell : cp.at("cells")) {
        std::vector<PatternEntry> entries;
        double expect = 0;
        for (const auto& e : cell) {
            PatternEntry pe;
            std::string ctx = "potential.cell_pattern.cells[]";
            pe.from = number_or(e, "from_frac", 0.0, ctx);
            pe.to = number_or(e, "to_frac", 1.0, ctx);
            pe.c0 = e.contains("c0") ? parse_law(e.at("c0"), ctx + ".c0") : Law{};
            pe.c1 = e.contains("c1") ? parse_law(e.at("c1"), ctx + ".c1") : Law{};
            if (pe.c0.infinite || pe.c1.infinite)
                invalid("InvalidConfig", ctx + ": potential coefficients must be finite");
            std::string coords = e.value("coords", "local");
            if (coords != "local" && coords != "absolute")
                invalid("InvalidConfig", ctx + ".coords must be 'local' or 'absolute'");
            pe.absolute = coords == "absolute";
            if (!near(pe.from, expect) || !(pe.to > pe.from))
                invalid("PieceGap", ctx + ": fractions must tile [0, 1]");
            expect = pe.to;
            entries.push_back(pe);
        }
        if (entries.empty() || !near(expect, 1.0))
            invalid("PieceGap", "potential.cell_pattern: fractions must tile [0, 1]");
        cells.push_back(entries);
    }
    if (cp.contains("period") && cp.at("period").get<long long>() != static_cast<long long>(cells.size()))
        invalid("InvalidConfig", "potential.cell_pattern: period must equal the number of cell entries");
    return std::make_shared<CellPatternPotential>(cells);
}

void split_at(std::vector<LocalPiece>& pieces)
{
    pieces.erase(std::remove_if(pieces.begin(), pieces.end(), [](const LocalPiece& p) { return !(p.u1 > p.u0); }),
                 pieces.end());
}

}  // namespace

// ---------------------------------------------------------------- public helpers

double parse_extended(const json& v, const std::string& what)
{
    if (v.is_number())
        return v.get<double>();
    if (v.is_string()) {
        std::string s = v.get<std::string>();
        if (s == "inf" || s == "+inf")
            return kInf;
    }
    invalid("InvalidConfig", what + ": expected a number or \"inf\"");
}

json extended_to_json(double v)
{
    if (v == kInf)
        return "inf";
    if (v == -kInf)
        return "-inf";
    return v;
}

bool TailSpec::empty() const
{
    return !d_limit && !d_tol && !d_sup && !beta_coupling_limit && !beta_minus_coupling_limit && !q_mean_limit &&
           !q_minus_mean_limit && !q_cell_mean_limit && !combined_limit && !molchanov && !brinck_sup && !c0_sup &&
           !c1_sup && !recurrent_lengths;
}

namespace {

struct TailField {
    const char* key;
    std::optional<double> TailSpec::*member;
};

const TailField kTailFields[] = {
    {"d_limit", &TailSpec::d_limit},
    {"d_tol", &TailSpec::d_tol},
    {"d_sup", &TailSpec::d_sup},
    {"beta_coupling_limit", &TailSpec::beta_coupling_limit},
    {"beta_minus_coupling_limit", &TailSpec::beta_minus_coupling_limit},
    {"q_mean_limit", &TailSpec::q_mean_limit},
    {"q_minus_mean_limit", &TailSpec::q_minus_mean_limit},
    {"q_cell_mean_limit", &TailSpec::q_cell_mean_limit},
    {"combined_limit", &TailSpec::combined_limit},
    {"molchanov", &TailSpec::molchanov},
    {"brinck_sup", &TailSpec::brinck_sup},
    {"c0_sup", &TailSpec::c0_sup},
    {"c1_sup", &TailSpec::c1_sup},
};

}  // namespace

TailSpec tail_from_json(const json& j)
{
    TailSpec t;
    if (j.is_null())
        return t;
    if (!j.is_object())
        invalid("InvalidConfig", "tail must be an object");
    for (const auto& [key, val] : j.items()) {
        bool known = false;
        for (const TailField& f : kTailFields) {
            if (key == f.key) {
                double v = parse_extended(val, "tail." + key);
                if (std::isnan(v) || v == -kInf)
                    invalid("InvalidTail", "tail." + key + " must be a real or +inf");
                t.*(f.member) = v;
                known = true;
            }
        }
        if (key == "recurrent_lengths") {
            if (!val.is_array())
                invalid("InvalidConfig", "tail.recurrent_lengths must be an array");
            std::vector<double> r;
            for (const auto& x : val)
                r.push_back(parse_extended(x, "tail.recurrent_lengths"));
            t.recurrent_lengths = r;
            known = true;
        }
        if (!known)
            invalid("InvalidConfig", "unknown tail declaration '" + key + "'");
    }
    return t;
}

json tail_to_json(const TailSpec& t)
{
    json j = json::object();
    for (const TailField& f : kTailFields)
        if (t.*(f.member))
            j[f.key] = extended_to_json(*(t.*(f.member)));
    if (t.recurrent_lengths)
        j["recurrent_lengths"] = *t.recurrent_lengths;
    return j;
}

CellIntegrals integrate_local(const std::vector<LocalPiece>& pieces)
{
    CellIntegrals out;
    for (const LocalPiece& p : pieces) {
        double len = p.u1 - p.u0;
        double qa = p.a0 + p.a1 * p.u0, qb = p.a0 + p.a1 * p.u1;
        double plus = 0, minus = 0;
        if (qa >= 0 && qb >= 0) {
            plus = len * (p.a0 + p.a1 * (p.u0 + p.u1) / 2);
        } else if (qa <= 0 && qb <= 0) {
            minus = -len * (p.a0 + p.a1 * (p.u0 + p.u1) / 2);
        } else {
            double t = qa / (qa - qb);  // zero crossing as a fraction of the piece
            if (qa < 0) {
                minus = -t * len * qa / 2;
                plus = (1 - t) * len * qb / 2;
            } else {
                plus = t * len * qa / 2;
                minus = -(1 - t) * len * qb / 2;
            }
        }
        out.q += plus - minus;
        out.q_plus += plus;
        out.q_minus += minus;
        out.q_abs += plus + minus;
    }
    return out;
}

// ---------------------------------------------------------------- OperatorSpec

double OperatorSpec::beta_inv(int k) const
{
    if (k == 0)
        return 0.0;
    double b = beta(k);
    if (std::isinf(b))
        return 0.0;
    if (b == 0)
        return kInf;
    return 1.0 / b;
}

bool OperatorSpec::is_interface(int k) const
{
    double b = beta(k);
    return std::isfinite(b) && b != 0;
}

std::vector<Piece> OperatorSpec::cell_pieces(int k) const
{
    return {pieces_.begin() + cell_first_piece_[k - 1], pieces_.begin() + cell_first_piece_[k]};
}

std::vector<LocalPiece> OperatorSpec::cell_local_pieces(int k) const
{
    return cell_local_pieces_any(k);
}

double OperatorSpec::x_any(long long k) const
{
    if (k <= K())
        return x(static_cast<int>(k));
    if (!partition_gen_)
        undecidable("UndecidableTail", "partition has no generator beyond k=" + std::to_string(K()));
    return partition_gen_->x(k);
}

double OperatorSpec::d_any(long long k) const
{
    if (k <= K())
        return d(static_cast<int>(k));
    if (!partition_gen_)
        undecidable("UndecidableTail", "partition has no generator beyond k=" + std::to_string(K()));
    return partition_gen_->d(k);
}

double OperatorSpec::beta_any(long long k) const
{
    if (k <= K())
        return beta(static_cast<int>(k));
    if (!strength_gen_)
        undecidable("UndecidableTail", "strengths have no generator beyond k=" + std::to_string(K()));
    return strength_gen_->beta(k);
}

double OperatorSpec::beta_inv_any(long long k) const
{
    if (k == 0)
        return 0.0;
    double b = beta_any(k);
    if (std::isinf(b))
        return 0.0;
    if (b == 0)
        return kInf;
    return 1.0 / b;
}

std::vector<LocalPiece> OperatorSpec::cell_local_pieces_any(long long k) const
{
    std::vector<LocalPiece> out;
    if (k <= K() && !potential_gen_) {
        double left = x(static_cast<int>(k - 1));
        for (int i = cell_first_piece_[k - 1]; i < cell_first_piece_[k]; ++i) {
            const Piece& p = pieces_[i];
            out.push_back({p.a - left, p.b - left, p.c0 + p.c1 * left, p.c1});
        }
        out.front().u0 = 0;
        out.back().u1 = d(static_cast<int>(k));
        return out;
    }
    if (!potential_gen_)
        undecidable("UndecidableTail", "potential has no generator beyond k=" + std::to_string(K()));
    potential_gen_->cell_pieces(k, x_any(k - 1), d_any(k), out);
    split_at(out);
    return out;
}

CellIntegrals OperatorSpec::cell_integrals_any(long long k) const
{
    return integrate_local(cell_local_pieces_any(k));
}

int OperatorSpec::structure_period() const
{
    long long p = 1;
    if (partition_gen_)
        p = std::lcm(p, static_cast<long long>(partition_gen_->period()));
    if (strength_gen_)
        p = std::lcm(p, static_cast<long long>(strength_gen_->period()));
    if (potential_gen_)
        p = std::lcm(p, static_cast<long long>(potential_gen_->period()));
    return static_cast<int>(std::min<long long>(p, 64));
}

CellIntegrals cell_integrals(const OperatorSpec& spec, int k)
{
    if (k < 1 || k > spec.K())
        invalid("IndexOutOfRange", "cell index " + std::to_string(k) + " outside 1.." + std::to_string(spec.K()));
    return spec.cell_integrals_any(k);
}

ExtentStats extent_stats(const OperatorSpec& spec)
{
    ExtentStats s;
    const auto& d = spec.lengths();
    s.d_min = *std::min_element(d.begin(), d.end());
    s.d_max = *std::max_element(d.begin(), d.end());
    s.d_min_source = s.d_max_source = "truncation";
    s.nondecreasing = std::is_sorted(d.begin(), d.end());
    s.nonincreasing = std::is_sorted(d.rbegin(), d.rend());

    const TailSpec& t = spec.tail();
    if (t.d_limit) {
        if (*t.d_limit < s.d_min) {
            s.d_min = *t.d_limit;
            s.d_min_source = "declaration d_limit";
        }
        if (*t.d_limit > s.d_max) {
            s.d_max = *t.d_limit;
            s.d_max_source = "declaration d_limit";
        }
    }
    if (t.d_sup && *t.d_sup > s.d_max) {
        s.d_max = *t.d_sup;
        s.d_max_source = "declaration d_sup";
    }
    if (!t.d_limit && spec.partition_extends()) {
        const PartitionGenerator* g = spec.partition_generator();
        auto probes = probe_all([g](long long k) { return g->d(k); }, g->period());
        for (const auto& e : probes) {
            if (e.trend == Trend::Converges) {
                double L = e.converges_to_zero() ? 0.0 : e.limit;
                if (L < s.d_min) {
                    s.d_min = L;
                    s.d_min_source = "generator limit";
                }
                if (L > s.d_max) {
                    s.d_max = L;
                    s.d_max_source = "generator limit";
                }
            } else if (e.trend == Trend::DivergesUp) {
                s.d_max = kInf;
                s.d_max_source = "generator growth";
            }
        }
    }
    return s;
}

// ---------------------------------------------------------------- construction

OperatorSpec spec_from_config(const json& cfg)
{
    if (!cfg.is_object())
        invalid("InvalidConfig", "configuration must be an object");
    for (const auto& [key, val] : cfg.items()) {
        (void)val;
        if (key != "partition" && key != "strengths" && key != "potential" && key != "tail" && key != "name" &&
            key != "description")
            invalid("InvalidConfig", "unknown top-level key '" + key + "'");
    }
    if (!cfg.contains("partition") || !cfg.contains("strengths"))
        invalid("InvalidConfig", "configuration needs 'partition' and 'strengths'");

    OperatorSpec s;
    s.config_ = cfg;

    // partition
    const json& part = cfg.at("partition");
    if (part.contains("points")) {
        if (!part.at("points").is_array() || part.at("points").empty())
            invalid("InvalidConfig", "partition.points must be a non-empty array");
        for (const auto& v : part.at("points")) {
            double x = parse_extended(v, "partition.points");
            if (!std::isfinite(x))
                invalid("InvalidConfig", "partition.points must be finite");
            s.points_.push_back(x);
        }
    } else if (part.contains("generator")) {
        long long count = 0;
        s.partition_gen_ = parse_partition_generator(part.at("generator"), count);
        for (long long k = 1; k <= count; ++k)
            s.points_.push_back(s.partition_gen_->x(k));
    } else {
        invalid("InvalidConfig", "partition needs 'points' or 'generator'");
    }
    double prev = 0;
    for (std::size_t i = 0; i < s.points_.size(); ++i) {
        if (!(s.points_[i] > prev))
            invalid("NonMonotonePartition", "x_" + std::to_string(i + 1) + " = " + std::to_string(s.points_[i]) +
                                                " does not exceed " + std::to_string(prev));
        prev = s.points_[i];
    }
    const int K = s.K();
    s.lengths_.resize(K);
    for (int k = 1; k <= K; ++k)
        s.lengths_[k - 1] = s.partition_gen_ ? s.partition_gen_->d(k) : s.x(k) - s.x(k - 1);

    // strengths
    const json& str = cfg.at("strengths");
    if (str.contains("values")) {
        if (!str.at("values").is_array())
            invalid("InvalidConfig", "strengths.values must be an array");
        for (const auto& v : str.at("values"))
            s.betas_.push_back(parse_extended(v, "strengths.values"));
        if (static_cast<int>(s.betas_.size()) != K)
            invalid("LengthMismatch", std::to_string(s.betas_.size()) + " strengths for " + std::to_string(K) +
                                          " partition points");
    } else if (str.contains("generator")) {
        s.strength_gen_ = parse_strength_generator(str.at("generator"));
        for (int k = 1; k <= K; ++k)
            s.betas_.push_back(s.strength_gen_->beta(k));
    } else {
        invalid("InvalidConfig", "strengths needs 'values' or 'generator'");
    }
    if (str.contains("scale")) {
        double h = parse_extended(str.at("scale"), "strengths.scale");
        check_finite_positive(h, "strengths.scale");
        for (double& b : s.betas_)
            b *= h;
        if (s.strength_gen_)
            s.strength_gen_ = std::make_shared<ScaledStrengths>(s.strength_gen_, h);
    }
    for (double b : s.betas_)
        if (std::isnan(b) || b == -kInf)
            invalid("InvalidStrength", "strengths must be real or +inf");

    // potential
    json pot = cfg.contains("potential") ? cfg.at("potential") : json(nullptr);
    std::vector<Piece> explicit_pieces;
    if (pot.is_null() || (pot.is_object() && pot.empty())) {
        s.potential_gen_ = std::make_shared<ZeroPotential>();
    } else if (pot.contains("cell_pattern")) {
        s.potential_gen_ = parse_cell_pattern(pot.at("cell_pattern"));
    } else if (pot.contains("pieces")) {
        if (pot.contains("repeat")) {
            double period = parse_extended(pot.at("repeat"), "potential.repeat");
            check_finite_positive(period, "potential.repeat");
            std::vector<Piece> pattern = parse_pieces(pot.at("pieces"), false);
            if (!near(pattern.back().b, period))
                invalid("PieceGap", "repeated pieces must tile [0, repeat)");
            pattern.back().b = period;
            std::string mode = pot.value("repeat_mode", "periodic");
            if (mode != "periodic" && mode != "translate")
                invalid("InvalidConfig", "potential.repeat_mode must be 'periodic' or 'translate'");
            s.potential_gen_ = std::make_shared<RepeatPotential>(pattern, period, mode == "translate");
        } else {
            explicit_pieces = parse_pieces(pot.at("pieces"), true);
            if (std::isinf(explicit_pieces.back().b))
                s.potential_gen_ = std::make_shared<TailPiecePotential>(explicit_pieces);
            else if (explicit_pieces.back().b < s.x(K) && !near(explicit_pieces.back().b, s.x(K)))
                invalid("PieceGap", "potential pieces end at " + std::to_string(explicit_pieces.back().b) +
                                        " before x_K = " + std::to_string(s.x(K)));
        }
    } else {
        invalid("InvalidConfig", "potential needs 'pieces' or 'cell_pattern'");
    }

    s.cell_first_piece_.assign(K + 1, 0);
    for (int k = 1; k <= K; ++k) {
        double left = s.x(k - 1), right = s.x(k);
        if (s.potential_gen_) {
            std::vector<LocalPiece> loc;
            s.potential_gen_->cell_pieces(k, left, s.d(k), loc);
            split_at(loc);
            for (std::size_t i = 0; i < loc.size(); ++i) {
                const LocalPiece& lp = loc[i];
                double a = (i == 0) ? left : left + lp.u0;
                double b = (i + 1 == loc.size()) ? right : left + lp.u1;
                s.pieces_.push_back({a, b, lp.a0 - lp.a1 * left, lp.a1});
            }
        } else {
            for (const Piece& p : explicit_pieces) {
                double a = std::max(p.a, left), b = std::min(p.b, right);
                if (near(a, right) || near(b, left) || !(b > a))
                    continue;
                if (near(a, left))
                    a = left;
                if (near(b, right))
                    b = right;
                s.pieces_.push_back({a, b, p.c0, p.c1});
            }
            // snap the ends so the cell is covered exactly
            if (s.pieces_.size() == static_cast<std::size_t>(s.cell_first_piece_[k - 1]))
                invalid("PieceGap", "cell " + std::to_string(k) + " has no potential piece");
            s.pieces_[s.cell_first_piece_[k - 1]].a = left;
            s.pieces_.back().b = right;
        }
        s.cell_first_piece_[k] = static_cast<int>(s.pieces_.size());
    }

    s.d_min_ = *std::min_element(s.lengths_.begin(), s.lengths_.end());
    s.d_max_ = *std::max_element(s.lengths_.begin(), s.lengths_.end());

    // tail
    s.tail_ = tail_from_json(cfg.contains("tail") ? cfg.at("tail") : json(nullptr));
    const TailSpec& t = s.tail_;
    if (t.d_limit) {
        double L = *t.d_limit;
        double tol = t.d_tol ? *t.d_tol : 0.25 * s.d_max_;
        int start = K - std::max(1, K / 10);
        for (int k = start + 1; k <= K; ++k)
            if (std::isinf(L) ? false : std::abs(s.d(k) - L) > tol)
                invalid("TailMismatch", "d_" + std::to_string(k) + " = " + std::to_string(s.d(k)) +
                                            " is not within " + std::to_string(tol) + " of the declared limit " +
                                            std::to_string(L));
    }
    if (t.recurrent_lengths) {
        double dsup = std::max(s.d_max_, t.d_sup.value_or(0.0));
        for (double r : *t.recurrent_lengths)
            if (!(r > 0 && r <= dsup * (1 + 1e-12)))
                invalid("InvalidTail", "recurrent length " + std::to_string(r) + " outside (0, d^*]");
    }
    return s;
}

OperatorSpec build_spec(const std::vector<double>& points, const std::vector<double>& betas,
                        const std::vector<Piece>& pieces, const TailSpec& tail)
{
    json cfg;
    cfg["partition"]["points"] = points;
    json vals = json::array();
    for (double b : betas)
        vals.push_back(extended_to_json(b));
    cfg["strengths"]["values"] = vals;
    if (!pieces.empty())
        cfg["potential"]["pieces"] = pieces_to_json(pieces);
    if (!tail.empty())
        cfg["tail"] = tail_to_json(tail);
    return spec_from_config(cfg);
}

OperatorSpec with_strengths(const OperatorSpec& spec, const std::vector<double>& betas)
{
    json cfg = spec.config();
    json vals = json::array();
    for (double b : betas)
        vals.push_back(extended_to_json(b));
    cfg["strengths"] = json{{"values", vals}};
    return spec_from_config(cfg);
}

OperatorSpec scale_strengths(const OperatorSpec& spec, double h)
{
    json cfg = spec.config();
    double prior = cfg.at("strengths").contains("scale") ? cfg.at("strengths").at("scale").get<double>() : 1.0;
    cfg["strengths"]["scale"] = prior * h;
    return spec_from_config(cfg);
}

}  // namespace dspec
