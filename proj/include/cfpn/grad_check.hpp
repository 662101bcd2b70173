#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace cfpn {

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_parameter_index = 0;
  double epsilon_used = 0.0;
};

/// Loss over a flat parameter vector. When `grad` is non-empty it has the
/// same length as `params` and receives the analytic gradient.
using DifferentiableLoss = std::function<double(std::span<const double> params, std::span<double> grad)>;

/// Compares the analytic gradient against central finite differences,
/// element by element, with relative error |a-n| / max(|a|, |n|, 1e-8).
/// Throws NumericError if the loss is ever non-finite.
GradCheckReport grad_check(const DifferentiableLoss& loss, std::vector<double> params,
                           double epsilon = 1e-5);

}  // namespace cfpn
