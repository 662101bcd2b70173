#include "cfpn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cfpn/errors.hpp"

namespace cfpn {

GradCheckReport grad_check(const DifferentiableLoss& loss, std::vector<double> params,
                           double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("grad_check epsilon must be positive");

  auto checked = [&](std::span<double> grad) {
    const double v = loss(params, grad);
    if (!std::isfinite(v)) throw NumericError("grad_check: loss is not finite");
    return v;
  };

  std::vector<double> analytic(params.size(), 0.0);
  checked(analytic);

  GradCheckReport report;
  report.epsilon_used = epsilon;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + epsilon;
    const double up = checked({});
    params[i] = saved - epsilon;
    const double down = checked({});
    params[i] = saved;

    const double numeric = (up - down) / (2.0 * epsilon);
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    const double err = std::abs(analytic[i] - numeric) / scale;
    if (err > report.max_relative_error) {
      report.max_relative_error = err;
      report.worst_parameter_index = i;
    }
  }
  return report;
}

}  // namespace cfpn
