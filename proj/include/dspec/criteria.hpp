#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dspec/model.hpp"

namespace dspec {

enum class Status { Holds, Fails, Inconclusive };

std::string status_name(Status s);

struct Witness {
    std::string where;  // e.g. "k=12", "eps=0.25 x=3.5", "declared limit"
    double index = 0;
    double value = 0;  // the violating quantity
    std::string detail;
};

struct Verdict {
    std::string id;
    Status status = Status::Inconclusive;
    std::optional<double> value;  // supremum over the data used, when meaningful
    std::optional<double> limit;  // estimated limit or limsup
    std::optional<Witness> witness;
    std::vector<std::pair<double, double>> trend;  // (index, value) evidence
    std::string source;
    std::string reason;
    std::vector<Verdict> parts;

    bool holds() const { return status == Status::Holds; }
    bool fails() const { return status == Status::Fails; }
};

// Test functions whose Rayleigh quotients decrease without bound.
struct Certificate {
    std::string family;  // "indicator", "step2" or "tent"
    std::vector<long long> indices;
    std::vector<double> quotients;
};

struct CriterionReport {
    double C = 1;
    std::vector<double> epsilons;
    std::vector<Verdict> conditions;
    std::vector<Verdict> theorems;
    std::optional<Certificate> certificate;

    const Verdict& condition(const std::string& id) const;
    const Verdict& theorem(const std::string& id) const;
};

inline const std::vector<double> kDefaultEpsilons{1.0, 0.5, 0.25, 0.125};

Verdict sup_C0(const OperatorSpec& spec);
Verdict sup_C1(const OperatorSpec& spec);
Verdict check_molchanov(const OperatorSpec& spec, const std::vector<double>& epsilons = kDefaultEpsilons);
Verdict check_mean_q_divergence(const OperatorSpec& spec);
Verdict check_combined_divergence(const OperatorSpec& spec);
Verdict check_coupling_vanishes(const OperatorSpec& spec);
Verdict check_q_mean_vanishes(const OperatorSpec& spec);
Verdict check_q_minus_mean_vanishes(const OperatorSpec& spec);
Verdict check_beta_minus_coupling_vanishes(const OperatorSpec& spec);
// sup over x of the integral of q_- on [x, x + 1]; limit holds the limsup estimate.
Verdict brinck_sup(const OperatorSpec& spec);
Verdict d_sup_finite(const OperatorSpec& spec);
Verdict q_bounded(const OperatorSpec& spec);

// Parts: nec_inf_b, nec_1, nec_2, nec_3, evaluated over the truncation.
Verdict check_necessary_semibounded(const OperatorSpec& spec, double C);

std::optional<Certificate> unboundedness_certificate(const OperatorSpec& spec, double bound = 1e6);

CriterionReport theorem_verdicts(const OperatorSpec& spec, double C = 1,
                                 const std::vector<double>& epsilons = kDefaultEpsilons);

}  // namespace dspec
