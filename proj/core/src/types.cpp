#include "fbm/types.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "fbm/error.hpp"

namespace fbm {

CountVector::CountVector(std::vector<std::int64_t> counts) : counts_(std::move(counts)) {
  if (counts_.size() < 2) {
    throw ValidationError("count vector needs at least 2 types, got " +
                          std::to_string(counts_.size()));
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (counts_[i] < 0) {
      throw ValidationError("negative count at type " + std::to_string(i + 1));
    }
    total_ += counts_[i];
  }
  if (total_ < 2) {
    throw ValidationError("population must be at least 2 agents, got " + std::to_string(total_));
  }
}

std::string SimplexViolation::describe() const {
  std::ostringstream os;
  switch (kind) {
    case SimplexViolationKind::kNegative:
      os << "coordinate " << index << " is negative by " << amount;
      break;
    case SimplexViolationKind::kSum:
      os << "coordinates sum to 1 " << (amount >= 0 ? "+ " : "") << amount;
      break;
    case SimplexViolationKind::kNonFinite:
      os << "coordinate " << index << " is not finite";
      break;
    case SimplexViolationKind::kTooFewTypes:
      os << "simplex point needs at least 2 coordinates";
      break;
  }
  return os.str();
}

std::optional<SimplexViolation> validate_simplex(std::span<const double> x, double tol) {
  if (x.size() < 2) return SimplexViolation{SimplexViolationKind::kTooFewTypes, 0, 0.0};
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) return SimplexViolation{SimplexViolationKind::kNonFinite, i, 0.0};
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < -tol) return SimplexViolation{SimplexViolationKind::kNegative, i, -x[i]};
  }
  // Sum in index order; the reported amount is signed (sum - 1).
  const double excess = std::accumulate(x.begin(), x.end(), 0.0) - 1.0;
  if (std::abs(excess) > tol) return SimplexViolation{SimplexViolationKind::kSum, 0, excess};
  return std::nullopt;
}

SimplexPoint::SimplexPoint(std::vector<double> coords, double tol) : coords_(std::move(coords)) {
  if (auto v = validate_simplex(coords_, tol)) {
    throw ValidationError("not a simplex point: " + v->describe());
  }
}

void Trajectory::push_back(double t, MarketState state) {
  if (!grid_.empty() && !(t > grid_.back())) {
    throw ValidationError("trajectory grid must be strictly increasing");
  }
  if (!states_.empty() && state.x.size() != states_.front().x.size()) {
    throw ValidationError("trajectory states must share one dimension");
  }
  grid_.push_back(t);
  states_.push_back(std::move(state));
}

void Trajectory::reserve(std::size_t n) {
  grid_.reserve(n);
  states_.reserve(n);
}

SimplexPoint normalize_counts(const CountVector& n) {
  const double total = static_cast<double>(n.total());
  std::vector<double> x(n.types());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(n[i]) / total;
  return SimplexPoint(std::move(x));
}

}  // namespace fbm
