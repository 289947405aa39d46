#ifndef MVAE_ERRORS_HPP
#define MVAE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mvae {

// Base of every exception this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operand shapes are incompatible; the message names both shapes.
struct ShapeError : Error { using Error::Error; };

// An operation ran out of order, e.g. backward before forward.
struct StateError : Error { using Error::Error; };

// A value is NaN or infinite where a finite number is required.
struct NumericError : Error { using Error::Error; };

// A label or index is outside its valid range.
struct IndexError : Error { using Error::Error; };

// An argument is outside the mathematical domain of the operation.
struct DomainError : Error { using Error::Error; };

// A file is malformed: wrong magic, bad header, stray trailing bytes.
struct FormatError : Error { using Error::Error; };

// A file ended before the payload its header promised.
struct TruncationError : FormatError { using FormatError::FormatError; };

// A file is well formed but its payload is unusable.
struct DataError : Error { using Error::Error; };

// A dataset violates one of its documented invariants.
struct ValidationError : Error { using Error::Error; };

// A dataset or derived set lacks the variety an operation needs.
struct DegenerateDataError : ValidationError { using ValidationError::ValidationError; };

// A config file has an unknown key or an unparsable value.
struct ConfigError : Error { using Error::Error; };

// The operating system refused a read, write, or directory operation.
struct IoError : Error { using Error::Error; };

}  // namespace mvae

#endif
