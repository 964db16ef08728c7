#pragma once

#include <stdexcept>
#include <string>

namespace tilemul {

/// Malformed textual input (hex, decimal, config files).
class ParseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A value is outside the range an operation accepts (e.g. operand wider than
/// its declared bit width).
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An 80-bit accumulator lane left its signed range.
class AccumulatorOverflow : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// A data-structure invariant does not hold (e.g. a limb >= 2^31).
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace tilemul
