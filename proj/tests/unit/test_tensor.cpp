#include <cmath>

#include "doctest.h"
#include "ganduf/error.hpp"
#include "ganduf/rng.hpp"
#include "ganduf/tensor.hpp"
#include "oracles.hpp"

namespace ad = ganduf::ad;
using ad::Tensor;

namespace {

void check_grad(Tensor& param, const std::function<Tensor()>& loss_fn) {
  ad::Tape::current().clear();
  param.clear_grad();
  ad::backward(loss_fn());
  REQUIRE(param.has_grad());
  std::vector<double> analytic(param.grad().begin(), param.grad().end());
  auto numeric = oracle::finite_difference(param, [&] { return loss_fn().item(); });
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    INFO("element " << i << " analytic " << analytic[i] << " numeric " << numeric[i]);
    CHECK(oracle::gradients_close(analytic[i], numeric[i], 1e-5, 1e-8));
  }
}

Tensor random_tensor(ad::Shape shape, ganduf::Rng& rng, bool grad = true) {
  const auto n = ad::numel(shape);
  return Tensor::from(std::move(shape), rng.normal_vector(n), grad);
}

}  // namespace

TEST_CASE("matmul with identity returns the input") {
  auto a = Tensor::from({2, 2}, {1, 2, 3, 4});
  auto eye = Tensor::from({2, 2}, {1, 0, 0, 1});
  auto c = ad::matmul(a, eye);
  CHECK(c.shape() == ad::Shape{2, 2});
  CHECK(std::vector<double>(c.data().begin(), c.data().end()) == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("primitive values") {
  CHECK(ad::sigmoid(Tensor::scalar(0.0)).item() == doctest::Approx(0.5).epsilon(1e-15));
  auto joined = ad::concat({Tensor::from({2}, {1, 2}), Tensor::from({1}, {3})}, 0);
  CHECK(ad::sum(joined).item() == 6.0);
  CHECK(ad::softplus(Tensor::scalar(0.0)).item() == doctest::Approx(std::log(2.0)));
  CHECK(ad::softplus(Tensor::scalar(800.0)).item() == doctest::Approx(800.0));
  CHECK(std::isfinite(ad::softplus(Tensor::scalar(-800.0)).item()));
}

TEST_CASE("broadcasting follows numpy rules") {
  auto a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  auto row = Tensor::from({3}, {10, 20, 30});
  auto col = Tensor::from({2, 1}, {100, 200});
  auto r = a + row;
  CHECK(std::vector<double>(r.data().begin(), r.data().end()) == std::vector<double>{11, 22, 33, 14, 25, 36});
  auto c = a * col;
  CHECK(std::vector<double>(c.data().begin(), c.data().end()) ==
        std::vector<double>{100, 200, 300, 800, 1000, 1200});
  CHECK((a - 1.0)[5] == 5.0);
}

TEST_CASE("shape mismatches raise a dimension error naming both shapes") {
  auto a = Tensor::zeros({2, 3});
  auto b = Tensor::zeros({4});
  try {
    (void)(a + b);
    FAIL("expected DimensionError");
  } catch (const ganduf::DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2, 3]") != std::string::npos);
    CHECK(msg.find("[4]") != std::string::npos);
  }
  CHECK_THROWS_AS(ad::matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), ganduf::DimensionError);
  CHECK_THROWS_AS(ad::concat({Tensor::zeros({2, 3}), Tensor::zeros({3, 3})}, 1), ganduf::DimensionError);
  CHECK_THROWS_AS(ad::reshape(Tensor::zeros({2, 3}), {4}), ganduf::DimensionError);
  CHECK_THROWS_AS(Tensor::from({2}, {1.0}), ganduf::DimensionError);
}

TEST_CASE("backward on simple losses") {
  SUBCASE("sum of squares") {
    auto w = Tensor::from({2}, {1, 2}, true);
    ad::backward(ad::sum(w * w));
    CHECK(w.grad()[0] == doctest::Approx(2.0));
    CHECK(w.grad()[1] == doctest::Approx(4.0));
  }
  SUBCASE("sigmoid at zero") {
    auto w = Tensor::scalar(0.0, true);
    ad::backward(ad::sigmoid(w) * 1.0);
    CHECK(w.grad()[0] == doctest::Approx(0.25));
  }
  SUBCASE("shared subexpression accumulates") {
    auto w = Tensor::scalar(3.0, true);
    auto y = w * w;
    ad::backward(y + y);
    CHECK(w.grad()[0] == doctest::Approx(12.0));
  }
}

TEST_CASE("backward contract") {
  auto w = Tensor::from({2}, {1, 2}, true);
  CHECK_THROWS_AS(ad::backward(w * 2.0), ganduf::ContractError);
  ad::Tape::current().clear();
  CHECK_THROWS_AS(ad::backward(Tensor::scalar(1.0)), ganduf::ContractError);
  auto loss = ad::sum(w);
  CHECK(!ad::Tape::current().empty());
  ad::backward(loss);
  CHECK(ad::Tape::current().empty());
}

TEST_CASE("no-grad evaluation records nothing and leaves parameters alone") {
  ad::Tape::current().clear();
  auto w = Tensor::from({2, 2}, {1, 2, 3, 4}, true);
  const std::vector<double> before(w.data().begin(), w.data().end());
  {
    ad::NoGradGuard guard;
    auto y = ad::tanh(ad::matmul(w, w));
    CHECK(!y.requires_grad());
  }
  CHECK(ad::Tape::current().empty());
  CHECK(std::vector<double>(w.data().begin(), w.data().end()) == before);
  CHECK(ad::grad_enabled());
}

TEST_CASE("every primitive passes a finite-difference check") {
  ganduf::Rng rng(7);
  auto x = random_tensor({3, 4}, rng);
  auto y = random_tensor({3, 4}, rng);
  auto row = random_tensor({4}, rng);
  auto pos = Tensor::from({3, 4}, rng.uniform_vector(12, 0.5, 2.0), true);
  auto m = random_tensor({4, 2}, rng);

  check_grad(x, [&] { return ad::sum(ad::tanh(x) * y); });
  check_grad(y, [&] { return ad::sum(ad::sigmoid(x * y)); });
  check_grad(row, [&] { return ad::sum(ad::square(x + row)); });
  check_grad(row, [&] { return ad::sum(ad::square(x - row) / (ad::square(row) + 1.0)); });
  check_grad(pos, [&] { return ad::sum(ad::log(pos) * y); });
  check_grad(x, [&] { return ad::mean(ad::exp(x * 0.5)); });
  check_grad(x, [&] { return ad::sum(ad::softplus(x) * y); });
  check_grad(x, [&] { return ad::sum(ad::leaky_relu(x, 0.2) * y); });
  check_grad(x, [&] { return ad::sum(ad::clamp(x, -0.5, 0.5) * y); });
  check_grad(m, [&] { return ad::sum(ad::square(ad::matmul(x, m))); });
  check_grad(x, [&] { return ad::sum(ad::square(ad::matmul(x, m))); });
  check_grad(x, [&] { return ad::sum(ad::square(ad::sum(x, 0))) + ad::sum(ad::square(ad::mean(x, 1))); });
  check_grad(x, [&] { return ad::sum(ad::square(ad::concat({x, y, x}, 1))); });
  check_grad(y, [&] { return ad::sum(ad::square(ad::concat({x, y}, 0)) * 0.3); });
  check_grad(x, [&] { return ad::sum(ad::reshape(x, {2, 6}) * ad::reshape(y, {2, 6})); });
}

TEST_CASE("image ops pass a finite-difference check") {
  ganduf::Rng rng(11);
  auto img = random_tensor({2, 4, 6, 3}, rng);
  auto kernel = random_tensor({3, 3, 3, 2}, rng);
  auto probe = random_tensor({2, 4, 6, 2}, rng, false);
  check_grad(img, [&] { return ad::sum(ad::conv2d(img, kernel) * probe); });
  check_grad(kernel, [&] { return ad::sum(ad::conv2d(img, kernel) * probe); });

  auto pool_probe = random_tensor({2, 2, 3, 3}, rng, false);
  check_grad(img, [&] { return ad::sum(ad::avg_pool2(img) * pool_probe); });

  auto up_probe = random_tensor({2, 8, 12, 3}, rng, false);
  check_grad(img, [&] { return ad::sum(ad::upsample2(img) * up_probe); });
}

TEST_CASE("conv2d matches a direct sliding-window sum") {
  ganduf::Rng rng(3);
  auto img = random_tensor({1, 5, 4, 2}, rng, false);
  auto kernel = random_tensor({3, 3, 2, 1}, rng, false);
  auto out = ad::conv2d(img, kernel);
  for (int h = 0; h < 5; ++h)
    for (int w = 0; w < 4; ++w) {
      double s = 0.0;
      for (int kh = 0; kh < 3; ++kh)
        for (int kw = 0; kw < 3; ++kw) {
          const int sh = h + kh - 1, sw = w + kw - 1;
          if (sh < 0 || sh >= 5 || sw < 0 || sw >= 4) continue;
          for (int c = 0; c < 2; ++c) s += img[(sh * 4 + sw) * 2 + c] * kernel[(kh * 3 + kw) * 2 + c];
        }
      CHECK(out[h * 4 + w] == doctest::Approx(s).epsilon(1e-12));
    }
}

TEST_CASE("upsample preserves constants and pooling averages") {
  auto c = Tensor::full({1, 3, 3, 2}, 1.5);
  auto up = ad::upsample2(c);
  CHECK(up.shape() == ad::Shape{1, 6, 6, 2});
  for (double v : up.data()) CHECK(v == doctest::Approx(1.5).epsilon(1e-15));
  auto p = ad::avg_pool2(Tensor::from({1, 2, 2, 1}, {1, 2, 3, 6}));
  CHECK(p.item() == doctest::Approx(3.0));
}

TEST_CASE("random small networks match finite differences") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto report = oracle::check_random_network(seed);
    INFO("seed " << seed << " worst rel " << report.worst_rel);
    CHECK(report.failures == 0);
  }
}

TEST_CASE("identical op sequences are bitwise deterministic") {
  auto run = [] {
    ganduf::Rng rng(99);
    auto w = Tensor::from({8, 8}, rng.normal_vector(64), true);
    auto x = Tensor::from({4, 8}, rng.normal_vector(32));
    ad::backward(ad::sum(ad::tanh(ad::matmul(x, w))));
    return std::vector<double>(w.grad().begin(), w.grad().end());
  };
  CHECK(run() == run());
}
