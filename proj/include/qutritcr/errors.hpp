#pragma once

#include <stdexcept>
#include <string>

namespace qutritcr {

// Base for every failure raised by the library. Each subclass names one
// contract violation so callers (and tests) can catch precisely.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define QUTRITCR_DEFINE_ERROR(Name)            \
  class Name : public Error {                  \
   public:                                     \
    explicit Name(const std::string& what)     \
        : Error(std::string(#Name ": ") + what) {} \
  }

QUTRITCR_DEFINE_ERROR(NotHermitian);
QUTRITCR_DEFINE_ERROR(NotUnitary);
QUTRITCR_DEFINE_ERROR(DimMismatch);
QUTRITCR_DEFINE_ERROR(NotNormalized);
QUTRITCR_DEFINE_ERROR(InvalidParams);
QUTRITCR_DEFINE_ERROR(OutOfRange);
QUTRITCR_DEFINE_ERROR(StepFailure);
QUTRITCR_DEFINE_ERROR(NormDrift);
QUTRITCR_DEFINE_ERROR(SingularDenominator);
QUTRITCR_DEFINE_ERROR(UnknownGate);
QUTRITCR_DEFINE_ERROR(NoOscillation);
QUTRITCR_DEFINE_ERROR(CalibrationFailed);
QUTRITCR_DEFINE_ERROR(NotDensityMatrix);
QUTRITCR_DEFINE_ERROR(BadDistribution);
QUTRITCR_DEFINE_ERROR(ConfigError);

#undef QUTRITCR_DEFINE_ERROR

}  // namespace qutritcr
