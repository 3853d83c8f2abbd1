#pragma once

#include <cstdint>
#include <functional>

#include "fbm/types.hpp"

namespace fbm {

using PriceCoefficient = std::function<double(double t, const SimplexPoint& x, double q)>;

/// g(t, x, q) = phi(t, x, q) q + psi(t, x, q). The same type carries the
/// finite-population pair (phi_N, psi_N).
struct PriceMechanism {
  PriceCoefficient phi;
  PriceCoefficient psi;

  /// phi = c_phi, psi = c_psi everywhere.
  static PriceMechanism constant(double c_phi, double c_psi);
};

double eval_g(const PriceMechanism& m, double t, const SimplexPoint& x, double q);

/// One tick of the log-price recursion: q + g_N(t_next, x_next, q) / N.
/// The new empirical distribution is paired with the previous log price.
double price_step(double q, double t_next, const SimplexPoint& x_next, const PriceMechanism& m_N,
                  std::int64_t N);

/// Finite-population version with coefficients frozen on ticks:
/// phi_N(t, .) = phi(floor(N t) / N, .), likewise psi.
PriceMechanism discretize(const PriceMechanism& m, std::int64_t N);

}  // namespace fbm
