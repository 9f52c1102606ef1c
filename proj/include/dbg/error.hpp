#pragma once

#include <stdexcept>
#include <string>

namespace dbg {

/// Base class for all library failures; code() names the failure kind.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define DBG_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                    \
   public:                                                       \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  }

DBG_DEFINE_ERROR(InvalidArgument);
DBG_DEFINE_ERROR(NormalizationFailed);
DBG_DEFINE_ERROR(SingularityFailure);
DBG_DEFINE_ERROR(CapTooLarge);
DBG_DEFINE_ERROR(EnergyOutOfRange);
DBG_DEFINE_ERROR(StepRejected);
DBG_DEFINE_ERROR(OutsideCap);
DBG_DEFINE_ERROR(ChordTooShallow);
DBG_DEFINE_ERROR(DegenerateCovector);
DBG_DEFINE_ERROR(TangentRay);
DBG_DEFINE_ERROR(MissesBall);
DBG_DEFINE_ERROR(BranchConflict);

#undef DBG_DEFINE_ERROR

}  // namespace dbg
