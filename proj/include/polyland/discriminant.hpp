#pragma once

// Discriminant geometry: eigenvalue coincidences along matrix pencils (focal
// points), explicit discriminant polynomials for 2x2 teachers, the distance
// landscape of an ellipse, and a randomized stability probe around a baseline
// configuration.

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "polyland/rng.hpp"

namespace polyland::discriminant {

// ---- focal points along a pencil ---------------------------------------------------

struct FocalPoint {
  double alpha = 0.0;    // pencil parameter in (0, 1]
  int multiplicity = 0;  // binom(c, 2) for a c-fold eigenvalue coincidence
};

/// Parameters alpha in (0, 1] where alpha T + (1 - alpha) S has a repeated
/// eigenvalue. Commuting pairs use the closed-form branch crossings; otherwise
/// coincidences are located by scanning the sorted-eigenvalue gaps.
std::vector<FocalPoint> focal_points_on_segment(const Eigen::MatrixXd& S,
                                                const Eigen::MatrixXd& T);

// ---- explicit 2x2 discriminants -----------------------------------------------------

/// Frobenius-metric discriminant of a symmetric 2x2 teacher:
/// ((t00 - t11)^2 + 4 t01^2)^3. Vanishes exactly on repeated-eigenvalue teachers.
double discriminant_2x2_frobenius(const Eigen::Matrix2d& T);

/// I.i.d.-metric discriminant of a symmetric 2x2 teacher; degree 6 in the teacher
/// entries, vanishing where rank-one critical points collide.
double discriminant_2x2_iid(const Eigen::Matrix2d& T, double mu2, double mu4);

/// Sum of absolute term magnitudes of the discriminant at the same arguments: a
/// natural scale against which to judge whether a computed value vanishes.
double discriminant_2x2_iid_scale(const Eigen::Matrix2d& T, double mu2, double mu4);

// ---- ellipse distance landscape -----------------------------------------------------

struct EllipseCriticalPoint {
  double theta = 0.0;
  Eigen::Vector2d point = Eigen::Vector2d::Zero();
  double value = 0.0;        // squared distance (s(theta) - t)^T Sigma (s(theta) - t)
  std::optional<int> index;  // 0 = local min, 1 = local max; empty when degenerate
  bool on_discriminant = false;
};

/// Critical points of theta -> (s(theta) - t)^T Sigma (s(theta) - t) on the
/// ellipse s(theta) = (a cos theta, b sin theta), located by sign-change
/// bracketing of the derivative and bisection. A vanishing second derivative
/// marks the focus point as lying on the discriminant.
std::vector<EllipseCriticalPoint> ellipse_critical_points(const Eigen::Vector2d& t,
                                                          const Eigen::Matrix2d& sigma,
                                                          double a, double b);

// ---- stability probe ---------------------------------------------------------------

struct StabilityReport {
  bool stable = false;
  bool baseline_degenerate = false;
  int baseline_count = 0;
  std::vector<int> observed_counts;  // critical point count per probe
  int trials = 0;
};

/// Perturbs (t, Sigma) by entrywise uniform noise of the given radius and checks
/// whether the critical point structure persists: same count, same index
/// multiset, and every point within 100 * radius of its baseline match. A
/// baseline on the discriminant is reported as unstable with the flag set.
StabilityReport stability_probe(const Eigen::Vector2d& t, const Eigen::Matrix2d& sigma,
                                double a, double b, double radius, int trials, Rng& rng);

}  // namespace polyland::discriminant
