#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dspec/criteria.hpp"
#include "dspec/eigensolver.hpp"
#include "dspec/model.hpp"
#include "dspec/neumann.hpp"

namespace dspec {

struct ScenarioCheck {
    std::string name;
    std::string expected;
    std::string observed;
    bool passed = false;
};

// One truncation of the scenario spec.
struct Rung {
    std::string label;
    int K = 0;
    json metrics = json::object();
    SpectralResult spectrum;
};

struct ScenarioReport {
    std::string id;
    json params = json::object();
    json config;  // the spec as a config document; reloading it reproduces the spec
    CriterionReport criteria;
    std::optional<EssSpectrumModel> prediction;
    std::vector<Rung> rungs;
    std::vector<ScenarioCheck> checks;
    json data = json::object();  // scenario-specific evidence

    bool passed() const;
};

struct LadderOptions {
    std::vector<int> truncations{50, 100, 200};
    // Counts are stable when they change by at most max(abs, rel * count).
    double stable_abs = 2;
    double stable_rel = 0.05;
    int jobs = 1;
};

bool count_stable(long long previous, long long current, const LadderOptions& opt);

// sigma_ess prediction: cell-length formula when cell means of |q| vanish, periodic bands otherwise.
EssSpectrumModel predict_ess(const OperatorSpec& spec, double cutoff);

struct KronigPenneyParams {
    double a = 1;
    double c = 0;
    // beta_k = beta_coeff * k^beta_exponent
    double beta_coeff = 1;
    double beta_exponent = 1;
    double cutoff = 0;  // 0: 4 pi^2 / a^2 + c - 1
    double delta = 1;   // cluster half-width
};

struct ShrinkingCellsParams {
    double p = 0.5;  // d_k = k^-p
    double beta_coeff = 1;
    double beta_exponent = 1;
    double cutoff = 50;
    double probe = 1;  // counting-function sample point
};

json kronig_penney_config(const KronigPenneyParams& p, int count);
json shrinking_cells_config(const ShrinkingCellsParams& p, int count);
json example_4_4_config(const std::string& variant, int count);
json sec24_config(int count);
json remark_2_7_config(int count);

ScenarioReport run_kronig_penney(const KronigPenneyParams& p = {}, const LadderOptions& ladder = {});
ScenarioReport run_shrinking_cells(const ShrinkingCellsParams& p = {}, const LadderOptions& ladder = {});
ScenarioReport run_example_4_4(const std::string& variant, int K = 200);
ScenarioReport run_sec24_example(const std::vector<int>& truncations = {20, 40}, int jobs = 1);
ScenarioReport run_remark_2_7(int K = 200);
ScenarioReport run_remark_2_2(const std::vector<long long>& sums = {1000, 10000, 100000}, int K_forms = 1000);
ScenarioReport run_h_stability(const json& config, const std::vector<double>& hs = {0.5, 1, 2},
                               const LadderOptions& ladder = {}, double cutoff = 0, double delta = 1);

std::vector<std::string> scenario_names();
// Runs a named scenario with string parameters (as given on the command line).
ScenarioReport run_scenario(const std::string& name, const std::map<std::string, std::string>& params, int jobs = 1);

}  // namespace dspec
