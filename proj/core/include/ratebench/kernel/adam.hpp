#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "ratebench/kernel/tensor.hpp"

namespace ratebench::kernel {

/// Raised when training hits a non-finite loss or gradient; carries enough
/// context for the harness to emit a diagnostic report.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A trainable tensor with its gradient and Adam state. All four tensors are
/// shape-equal; gradients are zeroed between steps by the training loop.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor adam_m;
  Tensor adam_v;
  std::int64_t step_count = 0;

  Parameter(std::string param_name, Tensor initial)
      : name(std::move(param_name)),
        value(std::move(initial)),
        grad(value.shape()),
        adam_m(value.shape()),
        adam_v(value.shape()) {}
};

/// Owns a model's named parameters. Pointers stay stable across registration.
class ParameterStore {
 public:
  Parameter& add(std::string name, Tensor initial);
  Parameter* find(const std::string& name);

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::size_t total_values() const;
  void zero_grads();

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // L2 penalty, added to the gradient before the moment updates
};

/// Standard bias-corrected Adam update on one parameter. Throws
/// TrainingError on a non-finite gradient.
void adam_step(Parameter& param, const AdamConfig& config, bool decay = true);

}  // namespace ratebench::kernel
