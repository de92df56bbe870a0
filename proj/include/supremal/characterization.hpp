#pragma once

// Checks of a candidate pair (u, f) against the optimality system: the sign
// law |F(J^2 u)| = F_inf sgn f, the weak dual equation, constancy of |F|,
// the structure of {f = 0}, and falsification probes.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "supremal/lp_energy.hpp"

namespace supremal {

struct NodalSet {
  std::vector<Vec2> points;                     // 1D crossings, 2D segment midpoints
  std::vector<std::array<Vec2, 2>> segments;    // 2D only
  int crossing_cells = 0;
  double measure_proxy = 0.0;                   // crossing cells times cell volume
};

/// Linear-interpolation crossings (1D) or marching squares (2D).
NodalSet nodal_set(const ScalarField& f);

/// Per-node flag: within `width` of the nodal set.
std::vector<char> nodal_band(const NodalSet& set, const Grid& grid, double width);

struct SignLawReport {
  double f_inf = 0.0;
  double residual = 0.0;           // max outside the band of |F - F_inf sgn f|
  double relative_residual = 0.0;  // residual / F_inf
  int sign_violations = 0;         // outside the band
  int worst_node = -1;
  int band_nodes = 0;
  /// Weighted measure of nodes (band included) where |F - F_inf sgn f| > 1e-6 F_inf.
  double defect_measure = 0.0;
};

/// Throws InvalidArgument if f vanishes identically.
SignLawReport check_sign_law(const Problem& problem, const ScalarField& u, const ScalarField& f,
                             double band_cells = 2.0);

struct AronssonReport {
  double osc = 0.0;                // max - min of |F(J^2 u)|
  double gradient_max = 0.0;       // max |D |F(J^2 u)|| at interior nodes
  double osc_outside_band = 0.0;
  /// Weighted measure of nodes where |F| < max |F| (1 - 1e-6).
  double defect_measure = 0.0;
};

AronssonReport aronsson_constancy(const Problem& problem, const ScalarField& u,
                                  const std::vector<char>* band = nullptr);

/// psi(x) = (1 - |x - c|^2 / R^2)^3 on the ball, zero outside.
struct TestBump {
  Vec2 center{0.0, 0.0};
  double radius = 1.0;

  double value(const Vec2& x, int dim) const;
  Vec2 gradient(const Vec2& x, int dim) const;
  /// Hessian entries (xx, xy, yy).
  std::array<double, 3> hessian(const Vec2& x, int dim) const;
};

/// Radii 4h, 6h, 8h with centers on a lattice of spacing R, supports inside the box.
std::vector<TestBump> bump_family(const Grid& grid);

struct WeakResidualReport {
  double max_residual = 0.0;
  int worst_bump = -1;
  int family_size = 0;
};

WeakResidualReport weak_residual(const Problem& problem, const ScalarField& u, const ScalarField& f,
                                 const std::vector<TestBump>& bumps);

struct ProbeFamilyConfig {
  int count = 100;
  int smoothing_passes = 20;
  double theta = 200.0;  // bound on the third differences after normalization
  std::uint64_t seed = 7;
};

/// Random clamped-zero fields: smoothed noise times a boundary cutoff,
/// scaled to max |A:D^2 psi| = 1.
std::vector<ScalarField> probe_family(const Problem& problem, const ProbeFamilyConfig& cfg);

/// Scales psi so that max |A:D^2 psi| = 1 (variation jet).
ScalarField normalize_probe(const Problem& problem, const ScalarField& psi);

/// max over nodes of sgn(f) (dF/deta psi + dF/dp . D psi + dF/dxi A:D^2 psi) at J^2 u.
/// Throws InvalidArgument if psi does not vanish on the boundary.
double theta_value(const Problem& problem, const ScalarField& u, const ScalarField& f, const ScalarField& psi);

struct ThetaReport {
  double min_value = 0.0;
  int argmin = -1;
  std::vector<double> values;
};

ThetaReport theta_probe(const Problem& problem, const ScalarField& u, const ScalarField& f,
                        const std::vector<ScalarField>& variations);

struct ProbeViolation {
  int probe = 0;
  double t = 0.0;
  double sup_before = 0.0;
  double sup_after = 0.0;
};

struct ProbeReport {
  int probes = 0;
  std::vector<double> t_grid;
  std::vector<ProbeViolation> violations;
};

std::vector<double> default_t_factors();  // +-1e-3, +-1e-2, +-1e-1

/// Evaluates the discrete sup at u + t psi for t in t_factors * F_inf(u);
/// records strict decreases beyond `slack`.
ProbeReport minimality_probe(const Problem& problem, const ScalarField& u, const std::vector<ScalarField>& family,
                             const std::vector<double>& t_factors = default_t_factors(), double slack = 1e-9);

/// f or -f, whichever makes the weighted sum of f F(J^2 u) nonnegative. The
/// dual equation is homogeneous, so only the sign law fixes the orientation.
ScalarField orient_dual(const Problem& problem, const ScalarField& u, const ScalarField& f, bool* flipped = nullptr);

enum class Verdict { kPass, kFail, kInconclusive };
std::string to_string(Verdict v);

struct CertificationOptions {
  double eq18_tolerance = 0.05;  // relative to F_inf
  double weak_tolerance = 1e-3;
  double band_cells = 2.0;
  ProbeFamilyConfig probes;
  int theta_count = 50;
  std::vector<double> t_factors = default_t_factors();
  /// Probe decreases count as violations beyond slack * F_inf.
  double slack = 1e-4;
  /// Directions added to the random probe family.
  std::vector<ScalarField> extra_probes;
};

struct CertificationReport {
  double f_inf = 0.0;
  double wrapped_f_inf = 0.0;
  SignLawReport sign_law;
  WeakResidualReport weak;
  AronssonReport aronsson;
  NodalSet nodal;
  double band_width = 0.0;
  ThetaReport theta;
  ProbeReport probes;
  bool dual_flipped = false;
  Verdict verdict = Verdict::kPass;
  std::vector<std::string> reasons;
};

/// Full certification. When F vanishes identically the system holds
/// trivially and f may be absent.
CertificationReport certify(const Problem& problem, const ScalarField& u, const std::optional<ScalarField>& f,
                            const CertificationOptions& options);

}  // namespace supremal
