#pragma once

#include <cstdint>
#include <vector>

#include "ganduf/tensor.hpp"

namespace ganduf {

/// Bias-corrected Adam moments for one parameter group.
struct AdamState {
  double learning_rate = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;

  AdamState() = default;
  AdamState(double learning_rate, double beta1, double beta2, double epsilon);

  /// Throws ContractError when a hyperparameter is out of range.
  void validate() const;
};

/// One Adam update over `params` using their accumulated gradients. A
/// parameter with no gradient is an error (named in the message). Gradients
/// are left in place; callers clear them before the next backward pass.
void adam_step(std::vector<ad::Tensor>& params, AdamState& state);

/// Drops accumulated gradients.
void zero_grad(std::vector<ad::Tensor>& params);

}  // namespace ganduf
