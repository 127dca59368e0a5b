#pragma once

#include <stdexcept>
#include <string>

namespace semrd {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SEMRD_DEFINE_ERROR(Name)          \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

SEMRD_DEFINE_ERROR(DomainError);
SEMRD_DEFINE_ERROR(DimensionMismatch);
SEMRD_DEFINE_ERROR(IndexOutOfRange);
SEMRD_DEFINE_ERROR(ZeroMassSymbol);
SEMRD_DEFINE_ERROR(ZeroMassOutput);
SEMRD_DEFINE_ERROR(LengthMismatch);
SEMRD_DEFINE_ERROR(EmptySequence);
SEMRD_DEFINE_ERROR(HypothesisViolated);
SEMRD_DEFINE_ERROR(NonfiniteDistortion);
SEMRD_DEFINE_ERROR(DegenerateChannel);
SEMRD_DEFINE_ERROR(IndexBeyondTruncation);
SEMRD_DEFINE_ERROR(ParseError);

#undef SEMRD_DEFINE_ERROR

}  // namespace semrd
