#pragma once

// Central finite-difference gradient checker shared by the unit tests and
// the acceptance suite. The oracle is independent of the backward rules: it
// only re-evaluates the forward function.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "sbm/tensor.hpp"

namespace sbm::testutil {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst;  // where the worst error occurred
};

inline double rel_err(double analytic, double fd) {
  double denom = std::max({std::abs(analytic), std::abs(fd), 1e-6});
  return std::abs(analytic - fd) / denom;
}

// `fn` must rebuild the computation from the given inputs on every call and
// return a scalar. Inputs are mutated in place for the FD probes and
// restored afterwards.
inline GradCheckReport check_gradients(
    const std::function<nn::Tensor(const std::vector<nn::Tensor>&)>& fn,
    std::vector<nn::Tensor>& inputs, double h = 1e-5) {
  using namespace sbm::nn;
  for (auto& t : inputs) t.set_requires_grad();
  zero_grad(inputs);
  Tensor loss = fn(inputs);
  backward(loss);
  std::vector<std::vector<double>> analytic;
  for (auto& t : inputs) analytic.push_back(t.grad());

  GradCheckReport report;
  NoGradGuard no_grad;
  for (size_t i = 0; i < inputs.size(); ++i) {
    auto& data = inputs[i].mutable_data();
    for (size_t j = 0; j < data.size(); ++j) {
      double saved = data[j];
      data[j] = saved + h;
      double fp = fn(inputs).item();
      data[j] = saved - h;
      double fm = fn(inputs).item();
      data[j] = saved;
      double fd = (fp - fm) / (2.0 * h);
      double e = rel_err(analytic[i][j], fd);
      if (e > report.max_rel_err) {
        report.max_rel_err = e;
        report.worst = "input " + std::to_string(i) + " elem " +
                       std::to_string(j) + " analytic " +
                       std::to_string(analytic[i][j]) + " fd " +
                       std::to_string(fd);
      }
    }
  }
  return report;
}

}  // namespace sbm::testutil
