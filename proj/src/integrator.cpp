#include "dbg/integrator.hpp"

#include <cmath>

namespace dbg {

namespace {

Tableau make_midpoint() {
  Tableau t;
  t.s = 1;
  t.a[0][0] = 0.5;
  t.b[0] = 1.0;
  t.c[0] = 0.5;
  return t;
}

Tableau make_gauss4() {
  const double r = std::sqrt(3.0) / 6.0;
  Tableau t;
  t.s = 2;
  t.a[0][0] = 0.25;
  t.a[0][1] = 0.25 - r;
  t.a[1][0] = 0.25 + r;
  t.a[1][1] = 0.25;
  t.b[0] = t.b[1] = 0.5;
  t.c[0] = 0.5 - r;
  t.c[1] = 0.5 + r;
  return t;
}

Tableau make_gauss6() {
  const double r = std::sqrt(15.0);
  Tableau t;
  t.s = 3;
  t.a[0][0] = 5.0 / 36.0;
  t.a[0][1] = 2.0 / 9.0 - r / 15.0;
  t.a[0][2] = 5.0 / 36.0 - r / 30.0;
  t.a[1][0] = 5.0 / 36.0 + r / 24.0;
  t.a[1][1] = 2.0 / 9.0;
  t.a[1][2] = 5.0 / 36.0 - r / 24.0;
  t.a[2][0] = 5.0 / 36.0 + r / 30.0;
  t.a[2][1] = 2.0 / 9.0 + r / 15.0;
  t.a[2][2] = 5.0 / 36.0;
  t.b[0] = 5.0 / 18.0;
  t.b[1] = 4.0 / 9.0;
  t.b[2] = 5.0 / 18.0;
  t.c[0] = 0.5 - r / 10.0;
  t.c[1] = 0.5;
  t.c[2] = 0.5 + r / 10.0;
  return t;
}

}  // namespace

const Tableau& tableau(Scheme scheme) {
  static const Tableau midpoint = make_midpoint();
  static const Tableau gauss4 = make_gauss4();
  static const Tableau gauss6 = make_gauss6();
  switch (scheme) {
    case Scheme::ImplicitMidpoint:
      return midpoint;
    case Scheme::Gauss4:
      return gauss4;
    case Scheme::Gauss6:
      return gauss6;
  }
  return gauss6;
}

const char* to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::ImplicitMidpoint:
      return "midpoint";
    case Scheme::Gauss4:
      return "gauss4";
    case Scheme::Gauss6:
      return "gauss6";
  }
  return "?";
}

Scheme scheme_from_string(const std::string& name) {
  if (name == "midpoint") return Scheme::ImplicitMidpoint;
  if (name == "gauss4") return Scheme::Gauss4;
  if (name == "gauss6") return Scheme::Gauss6;
  throw InvalidArgument("unknown integration scheme: " + name);
}

}  // namespace dbg
