#include "dbg/report.hpp"

namespace dbg {

void CertificateReport::add(std::string name, bool pass, double residual, std::string detail) {
  checks_.push_back({std::move(name), pass, residual, std::move(detail)});
}

bool CertificateReport::passed() const {
  for (const auto& c : checks_) {
    if (!c.pass) return false;
  }
  return !checks_.empty();
}

const CheckEntry* CertificateReport::find(const std::string& name) const {
  for (const auto& c : checks_) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

}  // namespace dbg
