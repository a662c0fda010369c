#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace dspec {

enum class Trend { DivergesUp, DivergesDown, Converges, Unknown };

struct LimitEstimate {
    Trend trend = Trend::Unknown;
    double limit = 0;  // meaningful for Converges
    int residue = 0;
    // (k, value) pairs actually evaluated
    std::vector<std::pair<double, double>> samples;

    bool converges_to_zero() const;
    std::string describe() const;
};

// Decides the behaviour of a sequence from samples at geometrically spaced indices.
LimitEstimate classify_samples(const std::vector<std::pair<double, double>>& samples);

// Samples f at k = period * (j - 1) + residue for j = 10^3 ... 10^max_exponent.
// Evaluations that throw or return NaN are skipped.
LimitEstimate probe_residue(const std::function<double(long long)>& f, int period, int residue,
                            int max_exponent = 9);

// One estimate per residue class 1..period.
std::vector<LimitEstimate> probe_all(const std::function<double(long long)>& f, int period);

std::string trend_name(Trend t);

}  // namespace dspec
