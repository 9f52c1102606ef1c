#pragma once

#include <cmath>

namespace dbg {

/// Forward-mode dual number v + d*eps with eps^2 = 0.
struct Dual {
  double v = 0.0;
  double d = 0.0;
  constexpr Dual() = default;
  constexpr Dual(double value) : v(value) {}  // NOLINT: implicit lift of constants
  constexpr Dual(double value, double deriv) : v(value), d(deriv) {}
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator-(Dual a) { return {-a.v, -a.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.v * b.d + a.d * b.v}; }
inline Dual operator/(Dual a, Dual b) {
  return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
}
inline Dual& operator+=(Dual& a, Dual b) { return a = a + b; }
inline Dual& operator-=(Dual& a, Dual b) { return a = a - b; }
inline Dual& operator*=(Dual& a, Dual b) { return a = a * b; }
inline Dual sqrt(Dual a) {
  const double s = std::sqrt(a.v);
  return {s, a.d / (2.0 * s)};
}

inline double sqrt(double x) { return std::sqrt(x); }

inline double value_of(double x) { return x; }
inline double value_of(Dual x) { return x.v; }

/// Compose a scalar function known through (f, f', f'') with the argument x.
/// Returns f(x) and f'(x) in the argument's number type.
inline void lift(double, double f, double fp, double, double& out_f, double& out_fp) {
  out_f = f;
  out_fp = fp;
}
inline void lift(Dual x, double f, double fp, double fpp, Dual& out_f, Dual& out_fp) {
  out_f = Dual(f, fp * x.d);
  out_fp = Dual(fp, fpp * x.d);
}

}  // namespace dbg
