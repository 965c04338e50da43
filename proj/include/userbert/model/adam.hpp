#pragma once

#include <cmath>

#include "userbert/model/params.hpp"

namespace userbert {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second-moment accumulators mirroring the parameter shapes.
template <class S>
struct AdamState {
  Parameters<S> m, v;
  int64_t step = 0;
  AdamConfig cfg;

  AdamState() = default;
  explicit AdamState(const Parameters<S>& params, AdamConfig c = {})
      : m(Parameters<S>::like(params)), v(Parameters<S>::like(params)), cfg(c) {}
};

/// Standard bias-corrected Adam update.
template <class S>
void adam_step(Parameters<S>& params, Parameters<S>& grads, AdamState<S>& state) {
  auto p = params.tensors();
  auto g = grads.tensors();
  auto m = state.m.tensors();
  auto v = state.v.tensors();
  if (p.size() != g.size() || p.size() != m.size())
    throw ValidationError("adam_step: parameter/gradient/state shape mismatch");
  ++state.step;
  const S b1 = S(state.cfg.beta1), b2 = S(state.cfg.beta2);
  const S bc1 = S(1) - S(std::pow(state.cfg.beta1, double(state.step)));
  const S bc2 = S(1) - S(std::pow(state.cfg.beta2, double(state.step)));
  const S lr = S(state.cfg.lr), eps = S(state.cfg.eps);
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i]->rows() != g[i]->rows() || p[i]->cols() != g[i]->cols())
      throw ValidationError("adam_step: tensor shape mismatch at index " + std::to_string(i));
    m[i]->array() = b1 * m[i]->array() + (S(1) - b1) * g[i]->array();
    v[i]->array() = b2 * v[i]->array() + (S(1) - b2) * g[i]->array().square();
    p[i]->array() -=
        lr * (m[i]->array() / bc1) / ((v[i]->array() / bc2).sqrt() + eps);
  }
}

}  // namespace userbert
