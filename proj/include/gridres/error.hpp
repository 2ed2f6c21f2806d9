#ifndef GRIDRES_ERROR_HPP_
#define GRIDRES_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace gridres {

// Malformed input file or inconsistent data. Carries the 1-based line number
// when the problem can be pinned to a line (0 otherwise).
class DataError : public std::runtime_error {
 public:
  DataError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what
                                    : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Non-finite activation, loss or gradient.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// AHP pairwise matrix whose consistency ratio exceeds the accepted bound.
class InconsistencyError : public std::runtime_error {
 public:
  InconsistencyError(const std::string& what, double consistency_ratio)
      : std::runtime_error(what), consistency_ratio_(consistency_ratio) {}
  double consistency_ratio() const { return consistency_ratio_; }

 private:
  double consistency_ratio_;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gridres

#endif  // GRIDRES_ERROR_HPP_
