#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <string>

#include "dbg/conformal.hpp"
#include "dbg/dual.hpp"
#include "dbg/error.hpp"
#include "dbg/smooth.hpp"

namespace dbg {

enum class HamiltonianKind { Flat, ConformalKinetic, PerturbedKinetic, Relativistic };

const char* to_string(HamiltonianKind kind);
HamiltonianKind hamiltonian_kind_from_string(const std::string& name);

/// Flat: |p|^2/2. ConformalKinetic: |p|^2 / (2 s (g^2 + delta)) with s = metric_scale.
/// PerturbedKinetic: |p|^2/2 + eps (1 - g^2) xi(|p|^2). Relativistic: -sqrt(1 - 2 H_eps).
struct HamiltonianSpec {
  HamiltonianKind kind = HamiltonianKind::Flat;
  std::shared_ptr<const RadialMetric> metric;
  double eps = 0.0;
  double metric_scale = 1.0;
};

inline double nearest_lattice_offset(double x) { return x - 2.0 * std::round(0.5 * x); }

template <std::size_t N>
class Hamiltonian {
 public:
  explicit Hamiltonian(HamiltonianSpec spec) : spec_(std::move(spec)) {
    const bool needs_metric = spec_.kind == HamiltonianKind::ConformalKinetic ||
                              (spec_.kind != HamiltonianKind::Flat && spec_.eps != 0.0);
    if (needs_metric && !spec_.metric) throw InvalidArgument("Hamiltonian needs a metric");
    if (spec_.eps < 0.0) throw InvalidArgument("eps must be non-negative");
    if (!(spec_.metric_scale > 0.0)) throw InvalidArgument("metric scale must be positive");
    potential_ = spec_.eps != 0.0 && spec_.metric && !spec_.metric->is_flat() &&
                 (spec_.kind == HamiltonianKind::PerturbedKinetic ||
                  spec_.kind == HamiltonianKind::Relativistic);
  }

  const HamiltonianSpec& spec() const { return spec_; }

  /// Throws EnergyOutOfRange for Relativistic when 2 H_eps >= 1.
  double value(const double* q, const double* p) const {
    double s = 0.0, u = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      s += p[i] * p[i];
      const double w = nearest_lattice_offset(q[i]);
      u += w * w;
    }
    switch (spec_.kind) {
      case HamiltonianKind::Flat:
        return 0.5 * s;
      case HamiltonianKind::ConformalKinetic:
        return 0.5 * s / factor(u);
      case HamiltonianKind::PerturbedKinetic:
        return perturbed_value(s, u);
      case HamiltonianKind::Relativistic: {
        const double w2 = 1.0 - 2.0 * perturbed_value(s, u);
        if (!(w2 > 0.0)) throw EnergyOutOfRange("relativistic Hamiltonian needs 2 H_eps < 1");
        return -std::sqrt(w2);
      }
    }
    return 0.0;
  }

  /// Hamilton's equations dq = dH/dp, dp = -dH/dq; T is double or Dual.
  template <class T>
  void field(const T* q, const T* p, T* dq, T* dp) const {
    T s = T(0.0);
    for (std::size_t i = 0; i < N; ++i) s += p[i] * p[i];
    std::array<T, N> w;
    T u = T(0.0);
    for (std::size_t i = 0; i < N; ++i) {
      w[i] = q[i] - T(2.0 * std::round(0.5 * value_of(q[i])));
      u += w[i] * w[i];
    }
    switch (spec_.kind) {
      case HamiltonianKind::Flat:
        for (std::size_t i = 0; i < N; ++i) {
          dq[i] = p[i];
          dp[i] = T(0.0);
        }
        return;
      case HamiltonianKind::ConformalKinetic: {
        const MetricJet j = spec_.metric->jet_u(value_of(u));
        T g, gu;
        lift(u, j.g, j.g_u, j.g_uu, g, gu);
        const double sc = spec_.metric_scale;
        const T G = T(sc) * (g * g + T(spec_.metric->delta()));
        const T Gu = T(2.0 * sc) * g * gu;
        const T inv = T(1.0) / G;
        const T coeff = s * Gu * inv * inv;
        for (std::size_t i = 0; i < N; ++i) {
          dq[i] = p[i] * inv;
          dp[i] = coeff * w[i];
        }
        return;
      }
      case HamiltonianKind::PerturbedKinetic:
      case HamiltonianKind::Relativistic: {
        T h_eps = T(0.5) * s;
        for (std::size_t i = 0; i < N; ++i) {
          dq[i] = p[i];
          dp[i] = T(0.0);
        }
        const double sv = value_of(s);
        if (potential_ && sv < 2.0 / 3.0) {
          const Jet2 x = momentum_cutoff(sv);
          T xi, xi_d;
          lift(s, x.v, x.d1, x.d2, xi, xi_d);
          const MetricJet j = spec_.metric->jet_u(value_of(u));
          T g, gu;
          lift(u, j.g, j.g_u, j.g_uu, g, gu);
          const T eps = T(spec_.eps);
          const T V0 = T(1.0) - g * g;
          const T V0u = T(-2.0) * g * gu;
          h_eps += eps * V0 * xi;
          const T a = T(2.0) * eps * V0 * xi_d;
          const T b = T(2.0) * eps * xi * V0u;
          for (std::size_t i = 0; i < N; ++i) {
            dq[i] += a * p[i];
            dp[i] -= b * w[i];
          }
        }
        if (spec_.kind == HamiltonianKind::Relativistic) {
          const T w2 = T(1.0) - T(2.0) * h_eps;
          if (!(value_of(w2) > 0.0)) {
            throw EnergyOutOfRange("relativistic Hamiltonian needs 2 H_eps < 1");
          }
          const T inv = T(1.0) / sqrt(w2);
          for (std::size_t i = 0; i < N; ++i) {
            dq[i] *= inv;
            dp[i] *= inv;
          }
        }
        return;
      }
    }
  }

  /// Radius beyond which the Hamiltonian does not depend on q (0 if it never does).
  double free_radius() const {
    if (spec_.kind == HamiltonianKind::ConformalKinetic) {
      return spec_.metric->is_flat() ? 0.0 : spec_.metric->r2();
    }
    return potential_ ? spec_.metric->r2() : 0.0;
  }

  /// True when the flow through this momentum is a straight line everywhere.
  bool momentum_free(const double* p) const {
    switch (spec_.kind) {
      case HamiltonianKind::Flat:
        return true;
      case HamiltonianKind::ConformalKinetic:
        return spec_.metric->is_flat();
      default: {
        if (!potential_) return true;
        double s = 0.0;
        for (std::size_t i = 0; i < N; ++i) s += p[i] * p[i];
        return s >= 2.0 / 3.0;
      }
    }
  }

 private:
  double factor(double u) const { return spec_.metric_scale * spec_.metric->factor_u(u); }

  double perturbed_value(double s, double u) const {
    double h = 0.5 * s;
    if (potential_ && s < 2.0 / 3.0) {
      const double g = spec_.metric->jet_u(u).g;
      h += spec_.eps * (1.0 - g * g) * momentum_cutoff(s).v;
    }
    return h;
  }

  HamiltonianSpec spec_;
  bool potential_ = false;
};

}  // namespace dbg
