#pragma once

#include <algorithm>
#include <array>
#include <climits>
#include <cmath>
#include <cstddef>
#include <string>

#include "dbg/error.hpp"

namespace dbg {

enum class Scheme { ImplicitMidpoint, Gauss4, Gauss6 };

const char* to_string(Scheme scheme);
Scheme scheme_from_string(const std::string& name);

/// Butcher tableau of an s-stage Gauss-Legendre collocation method (s <= 3).
struct Tableau {
  int s = 1;
  double a[3][3] = {};
  double b[3] = {};
  double c[3] = {};
};

const Tableau& tableau(Scheme scheme);

/// Leading components that evolve independently of the rest: Field::base_dim when
/// declared, otherwise all of them.
template <class Field>
constexpr std::size_t base_dim() {
  if constexpr (requires { Field::base_dim; }) {
    return Field::base_dim;
  } else {
    return Field::dim;
  }
}

/// Fixed-step Gauss-Legendre collocation (symplectic and symmetric) with
/// fixed-point stage iteration and dense output from the collocation polynomial.
///
/// Field must provide `static constexpr std::size_t dim`, `void operator()(const
/// State&, State&) const` and `bool free_step(const State& y, const State& f, double h)
/// const`, the latter reporting that the vector field is constant along the straight
/// segment y + t f, t in [0, h].
template <class Field>
class CollocationStepper {
 public:
  static constexpr std::size_t D = Field::dim;
  static constexpr std::size_t B = base_dim<Field>();
  using State = std::array<double, D>;

  explicit CollocationStepper(const Field& field, Scheme scheme = Scheme::Gauss6,
                              double tol = 1e-13, int max_iter = 60)
      : field_(field), tab_(tableau(scheme)), tol_(tol), max_iter_(max_iter) {
    // Lagrange basis on the collocation nodes and its antiderivative.
    const int s = tab_.s;
    for (int j = 0; j < s; ++j) {
      std::array<double, 3> poly{1.0, 0.0, 0.0};
      double denom = 1.0;
      for (int m = 0; m < s; ++m) {
        if (m == j) continue;
        std::array<double, 3> next{0.0, 0.0, 0.0};
        for (int k = 0; k < 2; ++k) {
          next[k + 1] += poly[k];
          next[k] -= tab_.c[m] * poly[k];
        }
        poly = next;
        denom *= tab_.c[j] - tab_.c[m];
      }
      for (int k = 0; k < 3; ++k) {
        basis_[j][k] = poly[k] / denom;
        integral_[j][k + 1] = basis_[j][k] / (k + 1);
      }
      integral_[j][0] = 0.0;
    }
  }

  const Field& field() const { return field_; }

  /// Advance y by h (h may be negative). Throws StepRejected.
  void step(State& y, double h) {
    const int s = tab_.s;
    y0_ = y;
    h_ = h;
    State f0{};
    field_(y, f0);
    if (field_.free_step(y, f0, h)) {
      for (int i = 0; i < s; ++i) K_[i] = f0;
      for (std::size_t d = 0; d < D; ++d) y[d] += h * f0[d];
      free_ = true;
      iterations_ = 0;
      remember(h);
      return;
    }
    free_ = false;
    if (have_prev_ && h / prev_h_ > 0.0) {
      std::array<State, 3> guess;
      for (int i = 0; i < s; ++i) {
        const double theta = 1.0 + tab_.c[i] * h / prev_h_;
        guess[i].fill(0.0);
        for (int j = 0; j < s; ++j) {
          const double l = poly_eval(basis_[j], theta);
          for (std::size_t d = 0; d < D; ++d) guess[i][d] += l * K_[j][d];
        }
      }
      for (int i = 0; i < s; ++i) K_[i] = guess[i];
    } else {
      for (int i = 0; i < s; ++i) K_[i] = f0;
    }

    // Stages are iterated until components [lo, hi) reach a fixed point; components
    // from `from` on are updated. With a base/variational split the base converges
    // first and is then held, so its iterates never depend on the variational part.
    std::array<State, 3> Knew;
    State Y;
    int it = 0;
    auto iterate = [&](std::size_t lo, std::size_t hi, std::size_t from, double scale) {
      for (std::size_t d = lo; d < hi; ++d) scale = std::max(scale, std::abs(y0_[d]));
      double prev_diff = INFINITY;
      double diff = INFINITY;
      for (int k = 0; k < max_iter_; ++k) {
        ++it;
        for (int i = 0; i < s; ++i) {
          for (std::size_t d = 0; d < D; ++d) {
            double z = 0.0;
            for (int j = 0; j < s; ++j) z += tab_.a[i][j] * K_[j][d];
            Y[d] = y0_[d] + h * z;
          }
          field_(Y, Knew[i]);
        }
        // Rounding in the field scales with the increments as well as the state.
        diff = 0.0;
        for (int i = 0; i < s; ++i) {
          for (std::size_t d = lo; d < hi; ++d) {
            diff = std::max(diff, std::abs(h * (Knew[i][d] - K_[i][d])));
            scale = std::max(scale, std::abs(h * Knew[i][d]));
          }
          for (std::size_t d = from; d < D; ++d) K_[i][d] = Knew[i][d];
        }
        if (!std::isfinite(diff)) break;
        if (diff <= 8.0 * 2.220446049250313e-16 * scale ||
            (diff <= tol_ * scale && diff >= 0.5 * prev_diff)) {
          return;
        }
        prev_diff = diff;
      }
      if (!(diff <= tol_ * scale)) {
        throw StepRejected("stage iteration did not converge (update " + std::to_string(diff) +
                           ", h = " + std::to_string(h) + ")");
      }
    };
    try {
      if constexpr (B < D) {
        iterate(0, B, 0, 1.0);
        iterate(B, D, B, 0.0);
      } else {
        iterate(0, D, 0, 1.0);
      }
    } catch (const EnergyOutOfRange& e) {
      throw StepRejected(std::string("stage left the energy domain: ") + e.what());
    }
    iterations_ = it;
    for (std::size_t d = 0; d < D; ++d) {
      double z = 0.0;
      for (int j = 0; j < s; ++j) z += tab_.b[j] * K_[j][d];
      y[d] = y0_[d] + h * z;
    }
    remember(h);
  }

  /// State at t0 + theta h of the last step, theta in [0, 1].
  State dense(double theta) const {
    State out = y0_;
    for (int j = 0; j < tab_.s; ++j) {
      const double beta = h_ * poly_eval4(integral_[j], theta);
      for (std::size_t d = 0; d < D; ++d) out[d] += beta * K_[j][d];
    }
    return out;
  }

  /// Drop the stage history used to predict the next step (after jumps).
  void forget() { have_prev_ = false; }

  bool last_was_free() const { return free_; }
  int last_iterations() const { return iterations_; }
  double last_h() const { return h_; }
  const State& last_start() const { return y0_; }

 private:
  static double poly_eval(const std::array<double, 3>& c, double x) {
    return c[0] + x * (c[1] + x * c[2]);
  }
  static double poly_eval4(const std::array<double, 4>& c, double x) {
    return c[0] + x * (c[1] + x * (c[2] + x * c[3]));
  }
  void remember(double h) {
    prev_h_ = h;
    have_prev_ = true;
  }

  const Field& field_;
  const Tableau& tab_;
  double tol_;
  int max_iter_;
  std::array<std::array<double, 3>, 3> basis_{};
  std::array<std::array<double, 4>, 3> integral_{};
  std::array<State, 3> K_{};
  State y0_{};
  double h_ = 0.0;
  double prev_h_ = 0.0;
  bool have_prev_ = false;
  bool free_ = false;
  int iterations_ = 0;
};

/// Bisection on theta in [0, 1] of the last step for a sign change of fn along
/// the dense output, to time_tol in time.
template <class Stepper, class Fn>
double locate_sign_change(const Stepper& st, Fn&& fn, double time_tol) {
  double lo = 0.0, hi = 1.0;
  const double flo = fn(st.dense(0.0));
  const double h = std::abs(st.last_h());
  while ((hi - lo) * h > time_tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = fn(st.dense(mid));
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace dbg
