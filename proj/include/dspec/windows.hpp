#pragma once

#include <optional>
#include <vector>

#include "dspec/model.hpp"

namespace dspec {

// Sliding-window integrals W(u) = int_u^{u+eps} q for piecewise-affine q.
struct WindowExtremum {
    double x = 0;  // window start
    double value = 0;
};

// Pieces must tile [0, L) in increasing order; u ranges over [u_lo, u_hi] with u_hi + eps <= L.
WindowExtremum window_min(const std::vector<LocalPiece>& q, double eps, double u_lo, double u_hi);
WindowExtremum window_max(const std::vector<LocalPiece>& q, double eps, double u_lo, double u_hi);

// max(-q, 0), split at sign changes.
std::vector<LocalPiece> negative_part(const std::vector<LocalPiece>& q);

// Extremum of W over window starts in group j >= 1 (cells (j-1)P+1 .. jP).  Empty when
// the cells needed are beyond the truncation and no generator is available.
std::optional<WindowExtremum> group_window(const OperatorSpec& spec, long long j, int P, double eps, bool minimum,
                                           bool use_negative_part);

}  // namespace dspec
