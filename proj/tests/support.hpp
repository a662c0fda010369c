#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "dspec/errors.hpp"
#include "dspec/forms.hpp"
#include "dspec/model.hpp"

namespace testing {

using dspec::json;

// Runs f and returns the error code it raises, or "" when it succeeds.
inline std::string error_code(const std::function<void()>& f)
{
    try {
        f();
    } catch (const dspec::Error& e) {
        return e.code();
    }
    return "";
}

inline bool close(double a, double b, double rel, double abs = 0)
{
    return std::abs(a - b) <= abs + rel * std::max(std::abs(a), std::abs(b));
}

inline json explicit_config(const std::vector<double>& points, const json& betas, const json& pieces = nullptr)
{
    json cfg = {{"partition", {{"points", points}}}, {"strengths", {{"values", betas}}}};
    if (!pieces.is_null())
        cfg["potential"] = {{"pieces", pieces}};
    return cfg;
}

inline json piece(double from, double to, double c0, double c1 = 0)
{
    return {{"from", from}, {"to", to}, {"c0", c0}, {"c1", c1}};
}

inline double uniform(std::mt19937_64& rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Cubic on [a, b] with the given end values and slopes.
inline dspec::Segment hermite(double a, double b, double v0, double d0, double v1, double d1)
{
    double h = b - a, s = (v1 - v0) / h;
    dspec::Segment seg;
    seg.a = a;
    seg.b = b;
    seg.c = {v0, d0, (3 * s - 2 * d0 - d1) / h, (d0 + d1 - 2 * s) / (h * h)};
    return seg;
}

// Random piecewise cubic on [0, x_K] satisfying f'(0) = 0 and both interface conditions at every x_k.
// Beyond x_K the function is zero, so at x_K it must end with f = f' = 0 unless beta_K = +inf.
inline dspec::PiecewiseFunction random_domain_function(const dspec::OperatorSpec& spec, std::mt19937_64& rng)
{
    const int K = spec.K();
    std::vector<dspec::Segment> segs;
    double v_left = uniform(rng, -2, 2), d_left = 0;
    for (int k = 1; k <= K; ++k) {
        double b = spec.beta(k);
        bool last = k == K;
        double d = (std::isinf(b) || last) ? 0.0 : uniform(rng, -2, 2);
        double v_minus = (last && !std::isinf(b)) ? 0.0 : uniform(rng, -2, 2);
        segs.push_back(hermite(spec.x(k - 1), spec.x(k), v_left, d_left, v_minus, d));
        v_left = std::isinf(b) ? uniform(rng, -2, 2) : v_minus + b * d;
        d_left = d;
    }
    return dspec::make_function(spec, segs);
}

}  // namespace testing
