#include "ganduf/adam.hpp"

#include <cmath>

#include "ganduf/error.hpp"

namespace ganduf {

AdamState::AdamState(double lr, double b1, double b2, double eps)
    : learning_rate(lr), beta1(b1), beta2(b2), epsilon(eps) {
  validate();
}

void AdamState::validate() const {
  if (!(learning_rate > 0)) throw ContractError("adam: learning rate must be positive");
  if (!(beta1 > 0 && beta1 < 1)) throw ContractError("adam: beta1 must lie in (0, 1)");
  if (!(beta2 > 0 && beta2 < 1)) throw ContractError("adam: beta2 must lie in (0, 1)");
  if (!(epsilon > 0)) throw ContractError("adam: epsilon must be positive");
}

void adam_step(std::vector<ad::Tensor>& params, AdamState& state) {
  state.validate();
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (!params[p].has_grad()) {
      const auto& name = params[p].name();
      throw ContractError("adam: parameter '" + (name.empty() ? std::to_string(p) : name) + "' has no gradient");
    }
  }
  if (state.first_moment.empty()) {
    for (const auto& t : params) {
      state.first_moment.emplace_back(t.numel(), 0.0);
      state.second_moment.emplace_back(t.numel(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ContractError("adam: state tracks " + std::to_string(state.first_moment.size()) + " parameters, got " +
                        std::to_string(params.size()));
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (state.first_moment[p].size() != params[p].numel()) {
      throw ContractError("adam: moment buffer for '" + params[p].name() + "' does not match its shape " +
                          ad::to_string(params[p].shape()));
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto values = params[p].mutable_data();
    auto grads = params[p].grad();
    auto& m = state.first_moment[p];
    auto& v = state.second_moment[p];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grads[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      values[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

void zero_grad(std::vector<ad::Tensor>& params) {
  for (auto& p : params) p.clear_grad();
}

}  // namespace ganduf
