#pragma once

#include <functional>
#include <string>
#include <vector>

namespace supremal {

/// Real function of one real variable with its first two derivatives.
class ScalarFunction {
 public:
  using Fn = std::function<double(double)>;

  ScalarFunction(std::string name, Fn value, Fn d1, Fn d2);

  /// sum_k coeffs[k] t^k
  static ScalarFunction polynomial(std::vector<double> coeffs);
  static ScalarFunction identity();
  static ScalarFunction cube();
  static ScalarFunction sinh();

  double operator()(double t) const { return value_(t); }
  double d1(double t) const { return d1_(t); }
  double d2(double t) const { return d2_(t); }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  Fn value_, d1_, d2_;
};

/// Root of an increasing function g: expands a bracket around `guess`, then
/// runs Newton steps safeguarded by bisection until |g| <= tol or the
/// bracket collapses to rounding. Throws NumericalError if no sign change
/// is found.
double find_increasing_root(const std::function<double(double)>& g,
                            const std::function<double(double)>& dg, double guess = 0.0,
                            double tol = 1e-12);

}  // namespace supremal
