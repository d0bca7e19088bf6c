#pragma once

#include <stdexcept>
#include <string>

namespace ansnse {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define ANSNSE_DEFINE_ERROR(Name)            \
  class Name : public Error {                \
   public:                                   \
    using Error::Error;                      \
  }

ANSNSE_DEFINE_ERROR(InvalidGridError);
ANSNSE_DEFINE_ERROR(InvalidFieldError);
ANSNSE_DEFINE_ERROR(ZeroModeError);
ANSNSE_DEFINE_ERROR(InvalidExponentError);
ANSNSE_DEFINE_ERROR(PreconditionError);
ANSNSE_DEFINE_ERROR(RangeError);
ANSNSE_DEFINE_ERROR(AdmissibilityError);
ANSNSE_DEFINE_ERROR(DegenerateSpectrumError);
ANSNSE_DEFINE_ERROR(DegenerateSampleError);
ANSNSE_DEFINE_ERROR(InadmissibleFieldError);
ANSNSE_DEFINE_ERROR(InsufficientDataError);
ANSNSE_DEFINE_ERROR(InvalidProfileError);
ANSNSE_DEFINE_ERROR(EmptySuiteError);
ANSNSE_DEFINE_ERROR(FormatError);
ANSNSE_DEFINE_ERROR(ConfigError);

#undef ANSNSE_DEFINE_ERROR

}  // namespace ansnse
