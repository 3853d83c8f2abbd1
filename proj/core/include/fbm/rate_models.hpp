#pragma once

#include <Eigen/Dense>

#include "fbm/kernel.hpp"

namespace fbm {

/// A(t, x, q) = A0 for all arguments. Throws ValidationError if A0 is not a
/// valid rate matrix.
RateField constant_rate_field(const Eigen::MatrixXd& a0);

/// Switching rates that respond to herding and to the log price.
///
/// For i != j:
///   a_ij(t, x, q) = m(t) [ base_ij + herd_ij x_j + feedback_ij sigma(kappa (q - q_ref)) ]
/// with sigma the logistic function and m(t) = 1 + amplitude sin(frequency t).
/// Diagonals close the rows. The limits q -> +-inf exist, which is what the
/// fixed-point search needs at the x_1 = 0 face.
struct FeedbackRates {
  Eigen::MatrixXd base;
  Eigen::MatrixXd herd;
  Eigen::MatrixXd feedback;
  double kappa = 1.0;
  double q_ref = 0.0;
  double amplitude = 0.0;  // |amplitude| < 1 keeps rates nonnegative
  double frequency = 0.0;

  void validate() const;
  RateField field() const;
};

}  // namespace fbm
