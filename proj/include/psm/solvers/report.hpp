#pragma once

#include "psm/core.hpp"

#include <chrono>
#include <optional>
#include <string>
#include <vector>

namespace psm {

struct FlowTrace {
  std::vector<double> losses;      ///< loss after each accepted step, losses[0] at the start
  std::vector<double> step_norms;  ///< |x_{n+1} - x_n|
  std::vector<Vector> iterates;    ///< only filled when requested
  double tau = 0.0;                ///< final step size
  int halvings = 0;
};

struct SolveReport {
  Vector x;
  bool converged = false;
  bool non_unique = false;
  std::string message;
  double final_loss = 0.0;
  int iterations = 0;
  double seconds = 0.0;
  FlowTrace trace;
  std::optional<double> min_eigenvalue;
  std::optional<double> condition_estimate;
};

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail
}  // namespace psm
