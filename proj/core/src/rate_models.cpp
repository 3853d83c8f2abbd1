#include "fbm/rate_models.hpp"

#include <cmath>

#include "fbm/error.hpp"

namespace fbm {

RateField constant_rate_field(const Eigen::MatrixXd& a0) {
  RateMatrix checked(a0);
  return [checked](double, const SimplexPoint& x, double) {
    if (x.size() != checked.size()) throw ValidationError("rate field dimension mismatch");
    return checked;
  };
}

void FeedbackRates::validate() const {
  const auto r = base.rows();
  if (r < 2 || base.cols() != r || herd.rows() != r || herd.cols() != r || feedback.rows() != r ||
      feedback.cols() != r) {
    throw ValidationError("feedback rates need three square matrices of one size");
  }
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < r; ++j) {
      if (i == j) continue;
      if (base(i, j) < 0 || herd(i, j) < 0 || base(i, j) + std::min(feedback(i, j), 0.0) < 0) {
        throw ValidationError("feedback rates would produce a negative off-diagonal rate");
      }
    }
  }
  if (!(std::abs(amplitude) < 1.0)) throw ValidationError("rate amplitude must satisfy |a| < 1");
  if (!std::isfinite(kappa) || !std::isfinite(q_ref) || !std::isfinite(frequency)) {
    throw ValidationError("feedback rate parameters must be finite");
  }
}

RateField FeedbackRates::field() const {
  validate();
  return [p = *this](double t, const SimplexPoint& x, double q) {
    const auto r = p.base.rows();
    if (static_cast<Eigen::Index>(x.size()) != r) throw ValidationError("rate field dimension mismatch");
    // sigma(z) evaluated so that both tails saturate without overflow
    const double z = p.kappa * (q - p.q_ref);
    const double sigma = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    const double m = 1.0 + p.amplitude * std::sin(p.frequency * t);
    Eigen::MatrixXd a(r, r);
    for (Eigen::Index i = 0; i < r; ++i) {
      double off = 0.0;
      for (Eigen::Index j = 0; j < r; ++j) {
        if (i == j) continue;
        const double v = m * (p.base(i, j) + p.herd(i, j) * x[static_cast<std::size_t>(j)] +
                              p.feedback(i, j) * sigma);
        a(i, j) = std::max(v, 0.0);
        off += a(i, j);
      }
      a(i, i) = -off;
    }
    return RateMatrix(std::move(a));
  };
}

}  // namespace fbm
