#include "ganduf/nn.hpp"

#include <cmath>

namespace ganduf::nn {

ad::Tensor& ParameterSet::add_weight(const std::string& name, ad::Shape shape, std::size_t fan_in,
                                     std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  auto values = rng.uniform_vector(ad::numel(shape), -limit, limit);
  auto t = ad::Tensor::from(std::move(shape), std::move(values), true);
  t.set_name(name);
  tensors_.push_back(t);
  return tensors_.back();
}

ad::Tensor& ParameterSet::add_zeros(const std::string& name, ad::Shape shape) {
  auto t = ad::Tensor::zeros(std::move(shape), true);
  t.set_name(name);
  tensors_.push_back(t);
  return tensors_.back();
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.numel();
  return n;
}

ParameterSet ParameterSet::clone() const {
  ParameterSet out;
  for (const auto& t : tensors_) {
    auto c = ad::Tensor::from(t.shape(), std::vector<double>(t.data().begin(), t.data().end()), t.requires_grad());
    c.set_name(t.name());
    out.tensors_.push_back(c);
  }
  return out;
}

LinearRef add_linear(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
  LinearRef r;
  r.weight = params.size();
  params.add_weight(name + ".weight", {in, out}, in, out, rng);
  r.bias = params.size();
  params.add_zeros(name + ".bias", {out});
  return r;
}

ConvRef add_conv(ParameterSet& params, const std::string& name, std::size_t k, std::size_t in, std::size_t out,
                 Rng& rng) {
  ConvRef r;
  r.kernel = params.size();
  params.add_weight(name + ".kernel", {k, k, in, out}, k * k * in, k * k * out, rng);
  r.bias = params.size();
  params.add_zeros(name + ".bias", {out});
  return r;
}

}  // namespace ganduf::nn
