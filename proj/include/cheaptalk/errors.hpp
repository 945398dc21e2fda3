#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cheaptalk {

// Malformed input: wrong lengths, empty sets, out-of-domain parameters.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public InvalidArgument {
 public:
  DimensionMismatch(std::size_t expected, std::size_t got)
      : InvalidArgument("dimension mismatch: expected " + std::to_string(expected) + ", got " +
                        std::to_string(got)) {}
};

// A quantization bin lost (almost) all of its probability mass.
class BinDeath : public std::runtime_error {
 public:
  BinDeath(std::size_t index, double mass)
      : std::runtime_error("bin " + std::to_string(index) + " died (mass " + std::to_string(mass) +
                           ")"),
        index_(index),
        mass_(mass) {}
  std::size_t index() const { return index_; }
  double mass() const { return mass_; }

 private:
  std::size_t index_;
  double mass_;
};

// No equilibrium with the requested number of bins exists for a bounded support.
class Infeasible : public std::runtime_error {
 public:
  Infeasible(const std::string& what, std::size_t max_feasible)
      : std::runtime_error(what), max_feasible_(max_feasible) {}
  std::size_t max_feasible() const { return max_feasible_; }

 private:
  std::size_t max_feasible_;
};

// The requested budget cannot deliver the stderr the estimator needs.
class BudgetExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cheaptalk
