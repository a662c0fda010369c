#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dspec/model.hpp"

namespace dspec {

enum class BoundaryCondition { Neumann, Dirichlet };

std::string bc_name(BoundaryCondition bc);

// Maximal run of cells between decoupling points (beta = +inf) or the ends of [0, x_K].
struct Block {
    int first_cell = 1;
    int last_cell = 1;
    double a = 0, b = 0;
    bool right_dirichlet = false;
};

struct TruncatedProblem {
    OperatorSpec spec;
    BoundaryCondition right_bc = BoundaryCondition::Neumann;
    std::vector<Block> blocks;
};

// Uses cells 1..K of the spec (K <= 0 means all).
TruncatedProblem make_problem(const OperatorSpec& spec, BoundaryCondition bc = BoundaryCondition::Neumann,
                              int K = 0);

struct Window {
    double lo = 0, hi = 0;
};

struct SpectralResult {
    std::string method;
    std::vector<double> eigenvalues;  // sorted, repeated according to multiplicity
    std::vector<double> errors;       // per eigenvalue
    std::vector<std::pair<double, long long>> counting;  // sampled N(lambda): number below lambda

    // (value, multiplicity) with values closer than rel_tol * max(1, |value|) merged.
    std::vector<std::pair<double, int>> grouped(double rel_tol = 0) const;
};

struct ShootingOptions {
    double tol = 1e-12;
    // Single constant-potential cells use the closed-form lattice.
    bool analytic_cells = true;
    long long count_budget = 400000;
    int jobs = 1;
};

// n-th eigenvalue of -f'' + c f on [0, d] with f'(0) = 0 and f'(d) = 0 (or f(d) = 0).
double neumann_lattice_value(double d, double c, long long n, bool dirichlet_right = false);

Eigen::Matrix2d transfer_matrix(double length, double c, double lambda);
Eigen::Matrix2d interface_matrix(double beta);

double secular(const TruncatedProblem& problem, int block, double lambda, const ShootingOptions& opt = {},
               double lambda_scale = 0);

// Exact number of eigenvalues strictly below lambda (dynamic-stiffness inertia).
long long shooting_count(const TruncatedProblem& problem, double lambda, const ShootingOptions& opt = {},
                         double lambda_scale = 0);

SpectralResult eigenvalues_shooting(const TruncatedProblem& problem, Window window, const ShootingOptions& opt = {});

struct GalerkinOptions {
    double h = 1.0 / 64;
    int levels = 3;  // Richardson levels h, h/2, h/4 (1 = no extrapolation)
};

// Single mesh level (no extrapolation).
SpectralResult galerkin_spectrum(const TruncatedProblem& problem, double h, Window window);
SpectralResult galerkin_extrapolated(const TruncatedProblem& problem, Window window, const GalerkinOptions& opt = {});

// Number of eigenvalues of the Galerkin pencil below lambda.
long long galerkin_count(const TruncatedProblem& problem, double h, double lambda);

// Observed convergence order log2(|e_h| / |e_{h/2}|) for a known exact value.
double observed_order(double exact, double coarse, double fine);

struct OracleOptions {
    double h = 1.0 / 200;
    bool extrapolate = true;
    long long max_points = 20000;
};

SpectralResult dense_oracle(const TruncatedProblem& problem, Window window, const OracleOptions& opt = {});
// All eigenvalues of one oracle level, ascending.
std::vector<double> dense_oracle_level(const TruncatedProblem& problem, double h, long long max_points = 20000);

struct CountingOptions {
    double h = 0;  // 0: chosen from the cell lengths
    double tol = 1e-8;
};

long long counting_function(const TruncatedProblem& problem, double lambda, const CountingOptions& opt = {});

// A lambda below the whole spectrum of the truncated problem.
double spectrum_lower_bound(const TruncatedProblem& problem, const ShootingOptions& opt = {});

// Lowest eigenvalues from all three engines side by side.
struct EngineComparison {
    Window window;  // [below the spectrum, midway between eigenvalue n and n + 1)
    SpectralResult shooting, galerkin, oracle;
    long long count_shooting = 0, count_galerkin = 0, count_oracle = 0;  // eigenvalues below window.hi
    // |a - b| / max(1, |a|) over the compared eigenvalues and engine pairs
    double worst_relative = 0;
    bool counts_agree() const { return count_shooting == count_galerkin && count_galerkin == count_oracle; }
};

EngineComparison compare_engines(const TruncatedProblem& problem, int n_lowest, const ShootingOptions& shooting = {},
                                 const GalerkinOptions& galerkin = {},
                                 const OracleOptions& oracle = {1.0 / 300, true, 20000});

// Random small instance: up to max_cells cells of length in [0.5, 2], piecewise-constant q in [-5, 5]
// (one or two pieces per cell) and strengths with |beta| in [0.2, 3] of either sign.
OperatorSpec random_small_spec(std::uint64_t seed, int max_cells = 6);

}  // namespace dspec
