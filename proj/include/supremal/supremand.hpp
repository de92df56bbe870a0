#pragma once

// Supremand functions F(x, eta, p, xi), their families, and sampled checks of
// the structural hypotheses the solver relies on.

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "supremal/grid.hpp"
#include "supremal/scalar_function.hpp"

namespace supremal {

/// Reduced jet argument z = (eta, p_1, .., p_n, xi), size n + 2.
using JetVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 4, 1>;
using JetMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;

JetVector make_jet_argument(int dim, double eta, const Vec2& p, double xi);

struct SupremandValue {
  double value = 0.0;
  JetVector gradient;  // partials in z
  JetMatrix hessian;   // second partials in z
};

class SupremandSpec {
 public:
  /// Fills `out.value`; also `out.gradient` when order >= 1 and
  /// `out.hessian` when order >= 2.
  using Evaluator = std::function<void(const Vec2& x, const JetVector& z, int order, SupremandValue& out)>;
  using ZeroLevel = std::function<double(const Vec2& x, double eta, const Vec2& p)>;

  struct Definition {
    std::string name;
    int dim = 1;
    Evaluator evaluate;
    ZeroLevel zero_level;  // optional; root finding in xi otherwise
    double monotonicity = 1.0;  // lower bound c of dF/dxi
    double growth_exponent = 0.5;
    bool depends_on_gradient = true;
    std::function<double(double)> envelope;  // optional increasing bound C
  };

  explicit SupremandSpec(Definition def);

  const std::string& name() const { return def_.name; }
  int dim() const { return def_.dim; }
  int jet_size() const { return def_.dim + 2; }
  int xi_index() const { return def_.dim + 1; }
  double c() const { return def_.monotonicity; }
  double alpha() const { return def_.growth_exponent; }
  bool depends_on_gradient() const { return def_.depends_on_gradient; }
  const std::function<double(double)>& envelope() const { return def_.envelope; }

  double value(const Vec2& x, const JetVector& z) const;
  SupremandValue evaluate(const Vec2& x, const JetVector& z, int order = 2) const;
  /// Unique root in xi of F(x, eta, p, .) = 0.
  double zero_level(const Vec2& x, double eta, const Vec2& p) const;

  /// For a wrapped spec Phi o F: the inner F, which has the same minimizers
  /// and is what the solver optimizes. Otherwise *this.
  const SupremandSpec& optimization_target() const { return inner_ ? *inner_ : *this; }
  bool is_wrapped() const { return inner_ != nullptr; }
  /// Phi(t) for wrapped specs, t otherwise.
  double outer(double t) const { return phi_ ? (*phi_)(t) : t; }

 private:
  friend SupremandSpec wrap_phi(const SupremandSpec& spec, const ScalarFunction& phi);

  Definition def_;
  std::shared_ptr<const SupremandSpec> inner_;
  std::optional<ScalarFunction> phi_;
};

/// a(x, eta) together with its first two eta-derivatives.
using StateTerm = std::function<std::array<double, 3>(const Vec2& x, double eta)>;

/// amplitude * prod_k sin(frequency * pi * x_k) + sum_k eta_coeffs[k] eta^k
StateTerm oscillating_state_term(int dim, double amplitude, double frequency, std::vector<double> eta_coeffs);
/// scale * exp(rate * eta)
StateTerm exponential_state_term(double scale, double rate);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Sampling box over x and the reduced jet variables.
struct SampleBox {
  int dim = 1;
  Vec2 x_lower{0.0, 0.0};
  Vec2 x_upper{1.0, 1.0};
  Interval eta{-1.0, 1.0};
  std::array<Interval, 2> p{Interval{-1.0, 1.0}, Interval{-1.0, 1.0}};
  Interval xi{-1.0, 1.0};
};

struct SamplePoint {
  Vec2 x;
  JetVector z;
};

/// Tensor lattice with `per_axis` points on every active axis of the box.
std::vector<SamplePoint> lattice_samples(const SampleBox& box, int per_axis);
std::vector<SamplePoint> random_samples(const SampleBox& box, int count, std::uint64_t seed);

SupremandSpec pure_xi(int dim);
/// F = a(x, eta) + A(xi). The monotonicity constant is the minimum of A'
/// over [-xi_range, xi_range]; throws if it is not positive.
SupremandSpec make_additive(int dim, StateTerm a, ScalarFunction big_a, double xi_range = 10.0);
/// F = a(x, eta) A(xi) with a > 0 on the box and A' > 0 on box.xi.
SupremandSpec make_multiplicative(int dim, StateTerm a, ScalarFunction big_a, const SampleBox& box);
/// Phi o F for an odd, strictly increasing Phi (checked on samples).
SupremandSpec wrap_phi(const SupremandSpec& spec, const ScalarFunction& phi);
/// User-supplied spec; accepted only if its partials pass validate_partials
/// with tolerance 1e-6 on `box`.
SupremandSpec make_custom(SupremandSpec::Definition def, const SampleBox& box, std::uint64_t seed = 1);

/// Largest relative mismatch between supplied partials (first and second)
/// and central differences, over `count` random points.
double validate_partials(const SupremandSpec& spec, const SampleBox& box, int count, std::uint64_t seed);

/// Gradient and Hessian in z of |F|^p from the supplied partials.
struct PowerDerivatives {
  double value = 0.0;
  JetVector gradient;
  JetMatrix hessian;
};
PowerDerivatives power_derivatives(const SupremandValue& f, double p);

struct ConvexityCertificate {
  SampleBox box;
  std::optional<double> p_bar;
  /// Smallest eigenvalue at the certified exponent (or at the last candidate).
  double worst_eigenvalue = 0.0;
  int sample_count = 0;
  std::vector<double> candidates;
  std::vector<double> candidate_worst;  // per candidate
};

/// Smallest candidate for which F d2F + (p-1) dF dF^T >= -1e-9 at every sample.
ConvexityCertificate certify_convexity(const SupremandSpec& spec, const SampleBox& box,
                                       const std::vector<double>& candidates, int per_axis);

struct EigenframeReport {
  bool pass = false;
  double max_coupling = 0.0;
  double min_sigma1 = 0.0;
  double min_sigma2 = 0.0;
  /// Exponent from which the frame condition implies the matrix inequality.
  double implied_p_bar = 2.0;
  int sample_count = 0;
  std::vector<std::array<double, 2>> sigma_samples;
};

/// Requires a spec without gradient dependence; throws InvalidArgument otherwise.
EigenframeReport check_eigenframe_condition(const SupremandSpec& spec, const SampleBox& box, int per_axis);

struct AssumptionCheck {
  std::string name;
  bool pass = true;
  double worst = 0.0;  // worst value of the checked quantity
  SamplePoint witness;
  std::string detail;
};

struct AssumptionReport {
  bool heuristic = true;  // sampling only
  std::vector<AssumptionCheck> checks;
  bool all_pass() const;
  const AssumptionCheck& find(const std::string& name) const;
};

AssumptionReport check_assumptions(const SupremandSpec& spec, const SampleBox& box, int per_axis);

}  // namespace supremal
