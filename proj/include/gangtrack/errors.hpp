#pragma once

#include <stdexcept>
#include <string>

namespace gangtrack {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// A likelihood or density was requested without any observed history.
class EmptyHistory : public Error {
 public:
  using Error::Error;
};

/// Fewer recent locations than an operation needs (e.g. an empty hull input).
class InsufficientHistory : public Error {
 public:
  using Error::Error;
};

/// A location falls outside the analysis grid.
class OutOfRegion : public Error {
 public:
  using Error::Error;
};

/// The posterior has put all of its mass on the expert marker.
class DegeneratePosterior : public Error {
 public:
  using Error::Error;
};

/// Assessment records of two variants do not cover the same instances.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace gangtrack
