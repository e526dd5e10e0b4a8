#include "ratebench/kernel/adam.hpp"

#include <cmath>

namespace ratebench::kernel {

Parameter& ParameterStore::add(std::string name, Tensor initial) {
  for (const auto& p : params_) {
    if (p->name == name) throw std::invalid_argument("duplicate parameter name: " + name);
  }
  params_.push_back(std::make_unique<Parameter>(std::move(name), std::move(initial)));
  return *params_.back();
}

Parameter* ParameterStore::find(const std::string& name) {
  for (const auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

std::vector<Parameter*> ParameterStore::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterStore::all() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::size_t ParameterStore::total_values() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParameterStore::zero_grads() {
  for (const auto& p : params_) p->grad.zero();
}

void adam_step(Parameter& param, const AdamConfig& config, bool decay) {
  param.step_count += 1;
  const double b1 = config.beta1, b2 = config.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(param.step_count));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(param.step_count));
  const double wd = decay ? config.weight_decay : 0.0;

  double* w = param.value.data();
  double* g = param.grad.data();
  double* m = param.adam_m.data();
  double* v = param.adam_v.data();
  const std::size_t n = param.value.size();
  for (std::size_t i = 0; i < n; ++i) {
    double gi = g[i];
    if (!std::isfinite(gi)) {
      throw TrainingError("non-finite gradient in parameter '" + param.name + "'");
    }
    if (wd != 0.0) gi += wd * w[i];
    m[i] = b1 * m[i] + (1.0 - b1) * gi;
    v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    w[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

}  // namespace ratebench::kernel
