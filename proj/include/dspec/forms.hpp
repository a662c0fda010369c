#pragma once

#include <array>
#include <string>
#include <vector>

#include "dspec/model.hpp"

namespace dspec {

// Cubic in the local variable t = x - a on [a, b).
struct Segment {
    double a = 0, b = 0;
    std::array<double, 4> c{};

    double value(double x) const;
    double deriv(double x) const;
    double deriv2(double x) const;
};

// One-sided traces at x_k, stored explicitly.
struct Trace {
    double f_minus = 0, f_plus = 0, df_minus = 0, df_plus = 0;
};

struct PiecewiseFunction {
    std::vector<Segment> segments;  // sorted, non-overlapping, each inside one cell
    std::vector<Trace> traces;      // index k - 1 for x_k
    double support_lo = 0, support_hi = 0;
};

struct FormBreakdown {
    double dirichlet = 0;
    double potential = 0;
    double jump_plus = 0;
    double jump_minus = 0;
    double total = 0;
    double norm2 = 0;
};

// Builds a function from segments; traces are derived from the segment ends.
PiecewiseFunction make_function(const OperatorSpec& spec, std::vector<Segment> segments);
std::vector<Trace> derive_traces(const OperatorSpec& spec, const std::vector<Segment>& segments);

FormBreakdown form_energy(const OperatorSpec& spec, const PiecewiseFunction& f);
double indicator_form_value(const OperatorSpec& spec, int k);
double rayleigh_quotient(const OperatorSpec& spec, const PiecewiseFunction& f);
double operator_form_identity_check(const OperatorSpec& spec, const PiecewiseFunction& f);

struct TestFunctionParams {
    int k = 1;                 // indicator cell, tent point, step start
    int j = 2;                 // step end
    double width = 1.0;        // tent support length
    std::vector<double> a;     // ramp amplitudes a_1..a_n
    std::vector<Segment> segments;  // custom
};

// kind: "indicator", "tent", "step", "ramp", "custom".
PiecewiseFunction make_test_function(const OperatorSpec& spec, const std::string& kind,
                                     const TestFunctionParams& params);

// Splits [a, b) at the partition points it contains; coefficients are re-expanded per piece.
std::vector<Segment> split_segment(const OperatorSpec& spec, const Segment& s);

}  // namespace dspec
