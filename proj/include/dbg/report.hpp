#pragma once

#include <string>
#include <vector>

namespace dbg {

struct CheckEntry {
  std::string name;
  bool pass = false;
  double residual = 0.0;
  std::string detail;
};

/// Named pass/fail checks with their worst residuals.
class CertificateReport {
 public:
  void add(std::string name, bool pass, double residual, std::string detail = {});
  bool passed() const;
  const CheckEntry* find(const std::string& name) const;
  const std::vector<CheckEntry>& checks() const { return checks_; }

 private:
  std::vector<CheckEntry> checks_;
};

}  // namespace dbg
