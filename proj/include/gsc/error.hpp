#pragma once

#include <stdexcept>
#include <string>

namespace gsc {

/// Malformed input file (bad header, missing property, wrong schema).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Well-formed input whose values violate an invariant.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A mask whose region contains no pixel with finite rendered depth.
class UncoveredMaskError : public DataError {
 public:
  using DataError::DataError;
};

/// Bad command-line usage; the CLI maps this to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gsc
