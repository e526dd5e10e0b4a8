#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "helpers.hpp"
#include "ratebench/kernel/attention.hpp"
#include "ratebench/kernel/ops.hpp"
#include "ratebench/kernel/rng.hpp"
#include "ratebench/kernel/tensor.hpp"

using namespace ratebench::kernel;

namespace {

// Central finite difference of a scalar loss with respect to one tensor,
// compared element-wise against the analytic gradient. The loss closure must
// recompute the full forward pass from the (mutated) tensor.
void check_against_fd(Tensor& input, const Tensor& analytic,
                      const std::function<double()>& loss, double tol = 1e-6,
                      double h = 1e-6) {
  REQUIRE(input.same_shape(analytic));
  for (std::size_t i = 0; i < input.size(); ++i) {
    const double keep = input[i];
    input[i] = keep + h;
    const double up = loss();
    input[i] = keep - h;
    const double down = loss();
    input[i] = keep;
    const double fd = (up - down) / (2.0 * h);
    const double err = testutil::rel_err(analytic[i], fd);
    if (err >= tol) {
      CAPTURE(i);
      CAPTURE(analytic[i]);
      CAPTURE(fd);
    }
    REQUIRE(err < tol);
  }
}

// Scalarizer: L = sum(r * y) so that dL/dy = r.
double dot_all(const Tensor& r, const Tensor& y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) acc += r[i] * y[i];
  return acc;
}

}  // namespace

TEST_SUITE("kernel.grad") {

TEST_CASE("dense forward matches a naive product") {
  Tensor x({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor w({3, 2}, {1, 0, 0, 1, 1, 1});
  Tensor b({2}, {10, 20});
  const Tensor y = dense_forward(x, w, b);
  CHECK(y.shape() == std::vector<std::size_t>{2, 2});
  CHECK(y.at(0, 0) == 1 + 3 + 10);
  CHECK(y.at(0, 1) == 2 + 3 + 20);
  CHECK(y.at(1, 0) == 4 + 6 + 10);
  CHECK(y.at(1, 1) == 5 + 6 + 20);
}

TEST_CASE("dense gradients match finite differences over several shapes") {
  Rng rng(101);
  const std::size_t shapes[][3] = {{1, 1, 1}, {2, 3, 4}, {5, 2, 3}, {3, 7, 1}};
  for (const auto& s : shapes) {
    const std::size_t n = s[0], d_in = s[1], d_out = s[2];
    Tensor x({n, d_in}), w({d_in, d_out}), b({d_out}), r({n, d_out});
    rng.fill_normal(x, 0.0, 1.0);
    rng.fill_normal(w, 0.0, 1.0);
    rng.fill_normal(b, 0.0, 1.0);
    rng.fill_normal(r, 0.0, 1.0);

    const auto loss = [&] { return dot_all(r, dense_forward(x, w, b)); };

    Tensor gx({n, d_in}), gw({d_in, d_out}), gb({d_out});
    dense_backward(x, w, r, &gx, gw, gb);
    check_against_fd(x, gx, loss);
    check_against_fd(w, gw, loss);
    check_against_fd(b, gb, loss);
  }
}

TEST_CASE("dense backward accepts a null input gradient") {
  Tensor x({2, 2}, {1, 2, 3, 4});
  Tensor w({2, 2}, {1, 0, 0, 1});
  Tensor gy({2, 2}, {1, 1, 1, 1});
  Tensor gw({2, 2}), gb({2});
  dense_backward(x, w, gy, nullptr, gw, gb);
  CHECK(gb[0] == 2.0);
}

TEST_CASE("relu gradient matches finite differences away from the kink") {
  Rng rng(7);
  Tensor x({4, 5}), r({4, 5});
  rng.fill_normal(x, 0.0, 1.0);
  rng.fill_normal(r, 0.0, 1.0);
  // Keep every input away from zero so the subgradient is unambiguous.
  for (double& v : x.values()) {
    if (std::fabs(v) < 0.05) v = v < 0 ? v - 0.1 : v + 0.1;
  }
  const auto loss = [&] { return dot_all(r, relu_forward(x)); };
  Tensor gx({4, 5});
  relu_backward(x, r, gx);
  check_against_fd(x, gx, loss);
}

TEST_CASE("layer norm gradients match finite differences") {
  Rng rng(13);
  const std::size_t shapes[][2] = {{1, 4}, {3, 8}, {2, 16}};
  for (const auto& s : shapes) {
    const std::size_t n = s[0], d = s[1];
    Tensor x({n, d}), gain({d}), bias({d}), r({n, d});
    rng.fill_normal(x, 0.0, 2.0);
    rng.fill_uniform(gain, 0.5, 1.5);
    rng.fill_normal(bias, 0.0, 0.5);
    rng.fill_normal(r, 0.0, 1.0);

    const auto loss = [&] {
      LayerNormCache cache;
      return dot_all(r, layer_norm_forward(x, gain, bias, cache));
    };

    LayerNormCache cache;
    layer_norm_forward(x, gain, bias, cache);
    Tensor gx({n, d}), ggain({d}), gbias({d});
    layer_norm_backward(cache, gain, r, gx, ggain, gbias);
    // Layer norm mixes a 1e-5 epsilon into the denominator; finite
    // differences see that nonlinearity, so the tolerance is a bit looser.
    check_against_fd(x, gx, loss, 1e-5, 1e-6);
    check_against_fd(gain, ggain, loss, 1e-5, 1e-6);
    check_against_fd(bias, gbias, loss, 1e-5, 1e-6);
  }
}

TEST_CASE("softmax rows are normalized and order preserving") {
  Tensor t({2, 3}, {1.0, 2.0, 3.0, -5.0, 0.0, 5.0});
  softmax_rows_inplace(t);
  for (std::size_t i = 0; i < 2; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < 3; ++j) sum += t.at(i, j);
    CHECK(testutil::rel_err(sum, 1.0) < 1e-12);
    CHECK(t.at(i, 0) < t.at(i, 1));
    CHECK(t.at(i, 1) < t.at(i, 2));
  }
  // Extreme logits must not overflow.
  Tensor big({1, 2}, {1000.0, -1000.0});
  softmax_rows_inplace(big);
  CHECK(big.all_finite());
  CHECK(big.at(0, 0) > 0.999);
}

TEST_CASE("cross entropy gradient matches finite differences") {
  Rng rng(29);
  for (int target = 0; target < 5; ++target) {
    Tensor logits({5});
    rng.fill_normal(logits, 0.0, 2.0);
    Tensor grad({5});
    const double base = cross_entropy_5way(logits, target, grad);
    CHECK(base > 0.0);
    const auto loss = [&] { return cross_entropy_5way(logits, target); };
    check_against_fd(logits, grad, loss);
  }
  CHECK_THROWS_AS(cross_entropy_5way(Tensor({5}), 9), std::invalid_argument);
}

TEST_CASE("mse value and gradient match the definition") {
  Tensor pred({3}, {1.0, 2.0, 4.0});
  Tensor label({3}, {1.5, 2.0, 3.0});
  Tensor grad({3});
  const double loss = mse(pred, label, grad);
  CHECK(testutil::rel_err(loss, (0.25 + 0.0 + 1.0) / 3.0) < 1e-12);
  const auto loss_fn = [&] { return mse(pred, label); };
  check_against_fd(pred, grad, loss_fn);
}

TEST_CASE("dropout scales kept values and zeroes the rest") {
  Rng rng(3);
  Tensor x = Tensor::full({1000}, 1.0);
  Tensor mask({1000});
  dropout_forward_inplace(x, 0.25, rng, mask);
  std::size_t kept = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != 0.0) {
      ++kept;
      CHECK(testutil::rel_err(x[i], 1.0 / 0.75) < 1e-12);
    }
    CHECK(mask[i] == x[i]);  // input was all ones
  }
  CHECK(kept > 650);
  CHECK(kept < 850);

  // p = 0 is the identity and an all-ones mask.
  Tensor y = Tensor::full({4}, 2.0);
  Tensor m2({4});
  dropout_forward_inplace(y, 0.0, rng, m2);
  CHECK(y[0] == 2.0);
  CHECK(m2[0] == 1.0);

  Tensor g = Tensor::full({1000}, 1.0);
  dropout_backward_inplace(mask, g);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == mask[i]);
}

TEST_CASE("attention gradients match finite differences, padding included") {
  Rng rng(47);
  struct Case {
    std::size_t len, d, heads;
    std::vector<std::uint8_t> valid;
  };
  const std::vector<Case> cases = {
      {1, 4, 1, {1}},
      {3, 4, 2, {1, 1, 1}},
      {4, 6, 3, {1, 1, 0, 1}},
      {5, 8, 2, {0, 1, 1, 0, 1}},
      {2, 4, 4, {1, 0}},
  };
  for (const Case& c : cases) {
    Tensor x({c.len, c.d}), r({c.len, c.d});
    rng.fill_normal(x, 0.0, 1.0);
    rng.fill_normal(r, 0.0, 1.0);
    Tensor wq({c.d, c.d}), wk({c.d, c.d}), wv({c.d, c.d}), wo({c.d, c.d});
    Tensor bq({c.d}), bk({c.d}), bv({c.d}), bo({c.d});
    for (Tensor* t : {&wq, &wk, &wv, &wo}) rng.fill_normal(*t, 0.0, 0.5);
    for (Tensor* t : {&bq, &bk, &bv, &bo}) rng.fill_normal(*t, 0.0, 0.2);
    const AttentionWeights w{&wq, &bq, &wk, &bk, &wv, &bv, &wo, &bo};

    const auto loss = [&] {
      AttentionCache cache;
      return dot_all(r, attention_forward(x, c.valid, w, c.heads, cache));
    };

    AttentionCache cache;
    attention_forward(x, c.valid, w, c.heads, cache);
    Tensor gx({c.len, c.d});
    Tensor gwq({c.d, c.d}), gwk({c.d, c.d}), gwv({c.d, c.d}), gwo({c.d, c.d});
    Tensor gbq({c.d}), gbk({c.d}), gbv({c.d}), gbo({c.d});
    const AttentionGrads grads{&gwq, &gbq, &gwk, &gbk, &gwv, &gbv, &gwo, &gbo};
    attention_backward(cache, w, r, grads, gx);

    check_against_fd(x, gx, loss, 1e-5);
    check_against_fd(wq, gwq, loss, 1e-5);
    check_against_fd(wk, gwk, loss, 1e-5);
    check_against_fd(wv, gwv, loss, 1e-5);
    check_against_fd(wo, gwo, loss, 1e-5);
    check_against_fd(bq, gbq, loss, 1e-5);
    check_against_fd(bk, gbk, loss, 1e-5);
    check_against_fd(bv, gbv, loss, 1e-5);
    check_against_fd(bo, gbo, loss, 1e-5);
  }
}

TEST_CASE("attention output is zero on padded rows and ignores padded keys") {
  Rng rng(5);
  const std::size_t len = 4, d = 6;
  Tensor x({len, d});
  rng.fill_normal(x, 0.0, 1.0);
  Tensor wq({d, d}), wk({d, d}), wv({d, d}), wo({d, d});
  Tensor bq({d}), bk({d}), bv({d}), bo({d});
  for (Tensor* t : {&wq, &wk, &wv, &wo}) rng.fill_normal(*t, 0.0, 0.5);
  const AttentionWeights w{&wq, &bq, &wk, &bk, &wv, &bv, &wo, &bo};

  std::vector<std::uint8_t> valid = {1, 1, 0, 1};
  AttentionCache cache;
  const Tensor y = attention_forward(x, valid, w, 2, cache);
  for (std::size_t j = 0; j < d; ++j) CHECK(y.at(2, j) == 0.0);

  // Changing a padded slot's input must not change any valid output.
  Tensor x2 = x;
  for (std::size_t j = 0; j < d; ++j) x2.at(2, j) += 37.0;
  AttentionCache cache2;
  const Tensor y2 = attention_forward(x2, valid, w, 2, cache2);
  for (std::size_t i = 0; i < len; ++i) {
    if (i == 2) continue;
    for (std::size_t j = 0; j < d; ++j) CHECK(y.at(i, j) == y2.at(i, j));
  }

  CHECK_THROWS_AS(attention_forward(x, {0, 0, 0, 0}, w, 2, cache),
                  std::invalid_argument);
  CHECK_THROWS_AS(attention_forward(x, valid, w, 4, cache),  // 6 % 4 != 0
                  std::invalid_argument);
}

}  // TEST_SUITE
