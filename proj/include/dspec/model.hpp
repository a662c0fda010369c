#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace dspec {

using json = nlohmann::json;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// q(x) = c0 + c1 x on [a, b), absolute coordinates.
struct Piece {
    double a = 0, b = 0, c0 = 0, c1 = 0;
};

// q(base + u) = a0 + a1 u on [u0, u1), coordinates relative to some base point.
struct LocalPiece {
    double u0 = 0, u1 = 0, a0 = 0, a1 = 0;
};

struct CellIntegrals {
    double q = 0, q_minus = 0, q_plus = 0, q_abs = 0;
};

// Declared asymptotics.  A value of kInf stands for the symbol +inf.
struct TailSpec {
    std::optional<double> d_limit;
    std::optional<double> d_tol;
    std::optional<double> d_sup;
    std::optional<double> beta_coupling_limit;
    std::optional<double> beta_minus_coupling_limit;
    std::optional<double> q_mean_limit;
    std::optional<double> q_minus_mean_limit;
    std::optional<double> q_cell_mean_limit;
    std::optional<double> combined_limit;
    std::optional<double> molchanov;
    std::optional<double> brinck_sup;
    std::optional<double> c0_sup;
    std::optional<double> c1_sup;
    std::optional<std::vector<double>> recurrent_lengths;

    bool empty() const;
};

class PartitionGenerator {
public:
    virtual ~PartitionGenerator() = default;
    virtual std::string kind() const = 0;
    // x(0) = 0.  Valid for every k >= 0.
    virtual double x(long long k) const = 0;
    // Cell length computed directly, never as a difference of large x values.
    virtual double d(long long k) const = 0;
    // Period of the cell-length pattern in k (1 if the lengths follow a single law).
    virtual int period() const = 0;
};

class StrengthGenerator {
public:
    virtual ~StrengthGenerator() = default;
    virtual std::string kind() const = 0;
    virtual double beta(long long k) const = 0;
    virtual int period() const = 0;
};

class PotentialGenerator {
public:
    virtual ~PotentialGenerator() = default;
    virtual std::string kind() const = 0;
    // Pieces describing q on cell k = [left, left + d), relative to left.
    virtual void cell_pieces(long long k, double left, double d, std::vector<LocalPiece>& out) const = 0;
    // Whether q is defined on all of [0, inf) independently of the partition.
    virtual bool global() const = 0;
    // Pieces on [a, a + len) relative to a.  Only for global generators.
    virtual void pieces(double a, double len, std::vector<LocalPiece>& out) const = 0;
    virtual int period() const = 0;
    // Periodic with non-growing coefficients, hence bounded.
    virtual bool periodic_bounded() const { return false; }
    // Period length in x for repeated patterns, 0 otherwise.
    virtual double x_period() const { return 0.0; }
};

struct ExtentStats {
    double d_min = 0;
    double d_max = 0;
    bool nondecreasing = false;
    bool nonincreasing = false;
    std::string d_min_source;
    std::string d_max_source;
};

class OperatorSpec {
public:
    int K() const { return static_cast<int>(points_.size()); }
    const std::vector<double>& points() const { return points_; }
    const std::vector<double>& lengths() const { return lengths_; }
    const std::vector<double>& betas() const { return betas_; }
    const std::vector<Piece>& pieces() const { return pieces_; }
    const TailSpec& tail() const { return tail_; }
    const json& config() const { return config_; }

    // 0 <= k <= K.
    double x(int k) const { return k == 0 ? 0.0 : points_[k - 1]; }
    // 1 <= k <= K.
    double d(int k) const { return lengths_[k - 1]; }
    double beta(int k) const { return betas_[k - 1]; }
    // 1/beta_k with 1/inf = 0 and the convention 1/beta_0 = 0.  Returns +inf for beta = 0.
    double beta_inv(int k) const;

    // Pieces of cell k (1 <= k <= K) in absolute coordinates.
    std::vector<Piece> cell_pieces(int k) const;
    std::vector<LocalPiece> cell_local_pieces(int k) const;

    // Interaction points carrying a finite nonzero strength; beta = 0 is continuity.
    bool is_interface(int k) const;

    double d_min() const { return d_min_; }
    double d_max() const { return d_max_; }

    // Infinite-sequence access.  Indices beyond K require the matching generator.
    bool partition_extends() const { return partition_gen_ != nullptr; }
    bool strengths_extend() const { return strength_gen_ != nullptr; }
    bool potential_extends() const { return potential_gen_ != nullptr; }
    bool potential_global() const { return potential_gen_ && potential_gen_->global(); }
    bool extends() const { return partition_extends() && strengths_extend() && potential_extends(); }

    double x_any(long long k) const;
    double d_any(long long k) const;
    double beta_any(long long k) const;
    double beta_inv_any(long long k) const;
    std::vector<LocalPiece> cell_local_pieces_any(long long k) const;
    CellIntegrals cell_integrals_any(long long k) const;

    const PartitionGenerator* partition_generator() const { return partition_gen_.get(); }
    const StrengthGenerator* strength_generator() const { return strength_gen_.get(); }
    const PotentialGenerator* potential_generator() const { return potential_gen_.get(); }

    // Period in k of the joint (d, beta, q) structure; 1 when nothing repeats.
    int structure_period() const;

private:
    friend OperatorSpec spec_from_config(const json& cfg);

    std::vector<double> points_;
    std::vector<double> lengths_;
    std::vector<double> betas_;
    std::vector<Piece> pieces_;
    std::vector<int> cell_first_piece_;  // size K + 1
    TailSpec tail_;
    json config_;
    double d_min_ = 0, d_max_ = 0;
    std::shared_ptr<const PartitionGenerator> partition_gen_;
    std::shared_ptr<const StrengthGenerator> strength_gen_;
    std::shared_ptr<const PotentialGenerator> potential_gen_;
};

// Parses and validates a configuration object (the JSON schema of the config files).
OperatorSpec spec_from_config(const json& cfg);

// Programmatic construction from explicit data.  Pieces use absolute coordinates.
OperatorSpec build_spec(const std::vector<double>& points,
                        const std::vector<double>& betas,
                        const std::vector<Piece>& pieces,
                        const TailSpec& tail = {});

// Same partition and potential with new strengths.
OperatorSpec with_strengths(const OperatorSpec& spec, const std::vector<double>& betas);
// Same spec with strengths multiplied by h (generators are scaled too).
OperatorSpec scale_strengths(const OperatorSpec& spec, double h);

CellIntegrals integrate_local(const std::vector<LocalPiece>& pieces);
CellIntegrals cell_integrals(const OperatorSpec& spec, int k);
ExtentStats extent_stats(const OperatorSpec& spec);

json tail_to_json(const TailSpec& tail);
TailSpec tail_from_json(const json& j);

// Extended reals in configs: numbers or the string "inf".
double parse_extended(const json& v, const std::string& what);
json extended_to_json(double v);

}  // namespace dspec
