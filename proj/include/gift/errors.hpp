#ifndef GIFT_ERRORS_HPP
#define GIFT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gift {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define GIFT_DEFINE_ERROR(Name)           \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

GIFT_DEFINE_ERROR(SyntaxError);     // malformed JSON text
GIFT_DEFINE_ERROR(SchemaError);     // missing field, wrong type or arity
GIFT_DEFINE_ERROR(InvariantError);  // structurally complete but semantically invalid
GIFT_DEFINE_ERROR(RangeError);
GIFT_DEFINE_ERROR(ShapeError);
GIFT_DEFINE_ERROR(MissingVelocity);
GIFT_DEFINE_ERROR(NonFinite);
GIFT_DEFINE_ERROR(ConfigError);
GIFT_DEFINE_ERROR(EmptyInput);
GIFT_DEFINE_ERROR(KeyMismatch);
GIFT_DEFINE_ERROR(IoError);

#undef GIFT_DEFINE_ERROR

}  // namespace gift

#endif  // GIFT_ERRORS_HPP
