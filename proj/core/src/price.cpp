#include "fbm/price.hpp"

#include <cmath>

#include "fbm/error.hpp"

namespace fbm {

PriceMechanism PriceMechanism::constant(double c_phi, double c_psi) {
  return {[c_phi](double, const SimplexPoint&, double) { return c_phi; },
          [c_psi](double, const SimplexPoint&, double) { return c_psi; }};
}

double eval_g(const PriceMechanism& m, double t, const SimplexPoint& x, double q) {
  return m.phi(t, x, q) * q + m.psi(t, x, q);
}

double price_step(double q, double t_next, const SimplexPoint& x_next, const PriceMechanism& m_N,
                  std::int64_t N) {
  if (N < 1) throw ValidationError("price_step needs N >= 1");
  if (!std::isfinite(q)) throw ValidationError("price_step needs a finite log price");
  return q + eval_g(m_N, t_next, x_next, q) / static_cast<double>(N);
}

PriceMechanism discretize(const PriceMechanism& m, std::int64_t N) {
  if (N < 1) throw ValidationError("discretization needs N >= 1");
  auto freeze = [N](PriceCoefficient f) -> PriceCoefficient {
    return [f = std::move(f), N](double t, const SimplexPoint& x, double q) {
      return f(static_cast<double>(tick_index(t, N)) / static_cast<double>(N), x, q);
    };
  };
  return {freeze(m.phi), freeze(m.psi)};
}

}  // namespace fbm
