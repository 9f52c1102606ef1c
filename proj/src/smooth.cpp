#include "dbg/smooth.hpp"

#include <cmath>

namespace dbg {

Jet2 transition(double x) {
  if (x <= 0.0) return {0.0, 0.0, 0.0};
  if (x >= 1.0) return {1.0, 0.0, 0.0};
  // S is the logistic function of L = log f(x) - log f(1-x).
  const double y = 1.0 - x;
  const double L = -1.0 / x + 1.0 / y;
  const double Lp = 1.0 / (x * x) + 1.0 / (y * y);
  const double Lpp = -2.0 / (x * x * x) + 2.0 / (y * y * y);
  const double e = std::exp(-std::abs(L));
  const double sig = L >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
  const double w = e / ((1.0 + e) * (1.0 + e));
  return {sig, w * Lp, w * (1.0 - 2.0 * sig) * Lp * Lp + w * Lpp};
}

Jet2 interval_bump(double x) {
  if (x <= 0.0 || x >= 1.0) return {0.0, 0.0, 0.0};
  const double m = x * (1.0 - x);
  const double mp = 1.0 - 2.0 * x;
  const double B = std::exp(-1.0 / m);
  const double m2 = m * m;
  return {B, B * mp / m2, B * (mp * mp - 2.0 * m2 - 2.0 * m * mp * mp) / (m2 * m2)};
}

Jet2 momentum_cutoff(double s) {
  const Jet2 t = transition(2.0 - 3.0 * s);
  return {t.v, -3.0 * t.d1, 9.0 * t.d2};
}

}  // namespace dbg
