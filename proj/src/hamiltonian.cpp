#include "dbg/hamiltonian.hpp"

namespace dbg {

const char* to_string(HamiltonianKind kind) {
  switch (kind) {
    case HamiltonianKind::Flat:
      return "Flat";
    case HamiltonianKind::ConformalKinetic:
      return "ConformalKinetic";
    case HamiltonianKind::PerturbedKinetic:
      return "PerturbedKinetic";
    case HamiltonianKind::Relativistic:
      return "Relativistic";
  }
  return "?";
}

HamiltonianKind hamiltonian_kind_from_string(const std::string& name) {
  for (auto k : {HamiltonianKind::Flat, HamiltonianKind::ConformalKinetic,
                 HamiltonianKind::PerturbedKinetic, HamiltonianKind::Relativistic}) {
    if (name == to_string(k)) return k;
  }
  throw InvalidArgument("unknown Hamiltonian kind: " + name);
}

}  // namespace dbg
