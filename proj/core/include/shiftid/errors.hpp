#pragma once

#include <stdexcept>
#include <string>

namespace shiftid {

// Base class for every error raised by the library. The CLI maps any of these
// to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SHIFTID_DEFINE_ERROR(Name)          \
  class Name : public Error {               \
   public:                                  \
    using Error::Error;                     \
  }

SHIFTID_DEFINE_ERROR(ParseError);
SHIFTID_DEFINE_ERROR(DimensionMismatch);
SHIFTID_DEFINE_ERROR(ValidationError);
SHIFTID_DEFINE_ERROR(EmptyInput);
SHIFTID_DEFINE_ERROR(InvalidAlpha);
SHIFTID_DEFINE_ERROR(DegenerateSample);
SHIFTID_DEFINE_ERROR(GroupSizeMismatch);
SHIFTID_DEFINE_ERROR(DegenerateLabels);
SHIFTID_DEFINE_ERROR(ZeroReferencePrior);
SHIFTID_DEFINE_ERROR(MissingLabels);
SHIFTID_DEFINE_ERROR(EmptyClassNeeded);
SHIFTID_DEFINE_ERROR(InvalidSpec);

#undef SHIFTID_DEFINE_ERROR

}  // namespace shiftid
