#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace commpool {

// Every error the library raises derives from this, so callers can catch
// the whole family at a stage boundary.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  ShapeError(const std::string& op, std::size_t lr, std::size_t lc, std::size_t rr, std::size_t rc)
      : Error(op + ": shape mismatch " + std::to_string(lr) + "x" + std::to_string(lc) + " vs " +
              std::to_string(rr) + "x" + std::to_string(rc)),
        lhs_rows(lr), lhs_cols(lc), rhs_rows(rr), rhs_cols(rc) {}

  std::size_t lhs_rows, lhs_cols, rhs_rows, rhs_cols;
};

// A precondition the caller was responsible for.
class ContractError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class IngestionError : public Error {
 public:
  IngestionError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), file(path) {}
  std::string file;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& path, std::size_t line_no, const std::string& what)
      : Error(path + ":" + std::to_string(line_no) + ": " + what), file(path), line(line_no) {}
  std::string file;
  std::size_t line;
};

class TrainingError : public Error {
 public:
  TrainingError(const std::string& stage, std::size_t at_epoch, double at_loss)
      : Error(stage + ": non-finite loss " + std::to_string(at_loss) + " at epoch " +
              std::to_string(at_epoch)),
        epoch(at_epoch), loss(at_loss) {}
  std::size_t epoch;
  double loss;
};

// Raised by exhaustive oracles when an instance is too large to enumerate.
class GuardError : public Error {
 public:
  using Error::Error;
};

}  // namespace commpool
