#pragma once

namespace dbg {

/// Value and first two derivatives of a scalar function at a point.
struct Jet2 {
  double v = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Mollifier transition S(x) = f(x) / (f(x) + f(1-x)), f(x) = exp(-1/x).
/// S is 0 for x <= 0 and 1 for x >= 1.
Jet2 transition(double x);

/// exp(-1/(x(1-x))) on (0,1), zero elsewhere.
Jet2 interval_bump(double x);

/// Momentum cutoff: 1 on [0,1/3], 0 on [2/3,inf), S(2 - 3s) in between.
Jet2 momentum_cutoff(double s);

}  // namespace dbg
