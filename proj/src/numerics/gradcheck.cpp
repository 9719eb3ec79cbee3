#include "dmvcr/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dmvcr/errors.hpp"

namespace dmvcr {
namespace {

double evaluate(const ScalarFn& f, const Tensor& x) {
  const Tensor y = f(x);
  if (y.numel() != 1) throw ContractError("finite_difference_check: f must return a scalar");
  const double v = y.item();
  if (!std::isfinite(v)) throw NumericError("finite_difference_check: non-finite f(x)");
  return v;
}

}  // namespace

double finite_difference_check(const ScalarFn& f, Tensor x, double eps) {
  if (!(eps > 0.0)) throw ContractError("finite_difference_check: eps must be positive");
  if (!x.requires_grad()) throw ContractError("finite_difference_check: x must require grad");

  x.zero_grad();
  const Tensor root = f(x);
  if (root.numel() != 1) throw ContractError("finite_difference_check: f must return a scalar");
  backward(root);
  std::vector<double> analytic(x.grad().begin(), x.grad().end());
  x.zero_grad();

  auto data = x.mutable_data();
  double worst = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double saved = data[i];
    data[i] = saved + eps;
    const double up = evaluate(f, x);
    data[i] = saved - eps;
    const double down = evaluate(f, x);
    data[i] = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace dmvcr
