#pragma once

#include <stdexcept>
#include <string>

namespace hcc {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define HCC_DEFINE_ERROR(Name)                                   \
  struct Name : Error {                                          \
    explicit Name(const std::string& msg) : Error(#Name ": " + msg) {} \
  }

HCC_DEFINE_ERROR(NonFiniteValue);
HCC_DEFINE_ERROR(ZeroDimInput);
HCC_DEFINE_ERROR(OutOfRange);
HCC_DEFINE_ERROR(DegeneratePath);
HCC_DEFINE_ERROR(DimensionMismatch);
HCC_DEFINE_ERROR(InvalidDistribution);
HCC_DEFINE_ERROR(UnknownDivergence);
HCC_DEFINE_ERROR(NonFiniteState);
HCC_DEFINE_ERROR(QuadratureFailure);
HCC_DEFINE_ERROR(NonPositiveR);
HCC_DEFINE_ERROR(NoConvergence);
HCC_DEFINE_ERROR(SingularJacobian);
HCC_DEFINE_ERROR(ZeroDenominator);
HCC_DEFINE_ERROR(DomainError);
HCC_DEFINE_ERROR(InvalidMetric);
HCC_DEFINE_ERROR(Infeasible);
HCC_DEFINE_ERROR(EmptySolutionSet);
HCC_DEFINE_ERROR(EmptyFeasibleSet);
HCC_DEFINE_ERROR(ProjectionFailure);
HCC_DEFINE_ERROR(ConfigError);

struct DomainGuardViolation : Error {
  double time;
  DomainGuardViolation(double t, const std::string& msg)
      : Error("DomainGuardViolation at t=" + std::to_string(t) + ": " + msg), time(t) {}
};

#undef HCC_DEFINE_ERROR

}  // namespace hcc
