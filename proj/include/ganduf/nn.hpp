#pragma once

#include <string>
#include <vector>

#include "ganduf/rng.hpp"
#include "ganduf/tensor.hpp"

namespace ganduf::nn {

/// Ordered, named collection of trainable tensors.
class ParameterSet {
 public:
  /// Glorot-uniform initialised weight with the given fan-in/fan-out.
  ad::Tensor& add_weight(const std::string& name, ad::Shape shape, std::size_t fan_in, std::size_t fan_out,
                         Rng& rng);
  ad::Tensor& add_zeros(const std::string& name, ad::Shape shape);

  std::vector<ad::Tensor>& tensors() { return tensors_; }
  const std::vector<ad::Tensor>& tensors() const { return tensors_; }
  std::size_t size() const { return tensors_.size(); }
  std::size_t scalar_count() const;

  /// Deep copy of every value (fresh tensors, same names).
  ParameterSet clone() const;

 private:
  std::vector<ad::Tensor> tensors_;
};

struct Linear {
  ad::Tensor weight;  // [in, out]
  ad::Tensor bias;    // [out]

  ad::Tensor operator()(const ad::Tensor& x) const { return ad::matmul(x, weight) + bias; }
};

struct Conv {
  ad::Tensor kernel;  // [k, k, in, out]
  ad::Tensor bias;    // [out]

  ad::Tensor operator()(const ad::Tensor& x) const { return ad::conv2d(x, kernel) + bias; }
};

/// Indices into a ParameterSet, so layers survive cloning of the set.
struct LinearRef {
  std::size_t weight = 0, bias = 0;
  Linear bind(const ParameterSet& p) const { return {p.tensors()[weight], p.tensors()[bias]}; }
};

struct ConvRef {
  std::size_t kernel = 0, bias = 0;
  Conv bind(const ParameterSet& p) const { return {p.tensors()[kernel], p.tensors()[bias]}; }
};

LinearRef add_linear(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, Rng& rng);
ConvRef add_conv(ParameterSet& params, const std::string& name, std::size_t k, std::size_t in, std::size_t out,
                 Rng& rng);

}  // namespace ganduf::nn
