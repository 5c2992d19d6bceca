#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace seqcore {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke a precondition (dimension mismatch, inconsistent plan, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Invalid hyperparameter or configuration value.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// A loss or gradient evaluated to a non-finite value.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, std::ptrdiff_t index = -1)
      : Error(index >= 0 ? what + " (point " + std::to_string(index) + ")" : what), index_(index) {}
  std::ptrdiff_t index() const { return index_; }

 private:
  std::ptrdiff_t index_;
};

// Anchor with zero mean loss; the layer thresholds collapse.
class DegenerateAnchorError : public Error {
 public:
  using Error::Error;
};

// Requested budget cannot give every non-empty layer a sample.
class InfeasibleBudgetError : public Error {
 public:
  using Error::Error;
};

// Malformed CSV or spec input. row is 1-based, 0 when not row specific.
class IngestionError : public Error {
 public:
  IngestionError(const std::string& what, std::size_t row = 0)
      : Error(row > 0 ? "row " + std::to_string(row) + ": " + what : what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

// Host failure inside a sequential segment.
class SegmentError : public Error {
 public:
  SegmentError(const std::string& what, int segment)
      : Error("segment " + std::to_string(segment) + ": " + what), segment_(segment) {}
  int segment() const { return segment_; }

 private:
  int segment_;
};

}  // namespace seqcore
