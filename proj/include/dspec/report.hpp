#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dspec/criteria.hpp"
#include "dspec/eigensolver.hpp"
#include "dspec/forms.hpp"
#include "dspec/model.hpp"
#include "dspec/neumann.hpp"
#include "dspec/scenarios.hpp"
#include "dspec/config.hpp"

namespace dspec {

inline constexpr const char* kToolVersion = "1.0.0";

// Every floating-point value is emitted as {"value": v, "err": e}; infinities as the strings "inf"/"-inf".
json num(double value, double err = 0);
// Wraps every bare floating-point number inside j (objects already of the form {value, err} are kept).
json wrap_numbers(const json& j);

json verdict_json(const Verdict& v);
json criterion_report_json(const CriterionReport& r);
json form_json(const FormBreakdown& f, double rayleigh);
json spectral_json(const SpectralResult& r, double rel_merge = 1e-9);
json ess_json(const EssSpectrumModel& m);
json engine_comparison_json(const EngineComparison& c, int n_lowest);
json scenario_json(const ScenarioReport& r);

// Plain-text summary of a criterion report, one line per verdict.
std::string criterion_report_text(const CriterionReport& r);

// Shortest text that reads back to the same double.
std::string format_double(double v);

// CSV with columns index, lambda, multiplicity, engine, err_est.
std::string spectrum_csv(const std::vector<SpectralResult>& results, double rel_merge = 1e-9);
// CSV with columns lambda, multiplicity, cells.
std::string direct_sum_csv(const std::vector<DirectSumPoint>& points);

struct RunManifest {
    std::string command;
    std::string config_hash;
    json parameters = json::object();
    std::vector<std::string> outputs;
};

// Timestamps come from SOURCE_DATE_EPOCH when set, so manifests can be reproduced byte for byte.
json manifest_json(const RunManifest& m, long long started, long long finished);
long long manifest_clock();

}  // namespace dspec
