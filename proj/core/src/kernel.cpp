#include "fbm/kernel.hpp"

#include <cmath>
#include <string>

#include "fbm/error.hpp"

namespace fbm {
namespace {

double binomial_coefficient(std::int64_t n, std::int64_t k) {
  return std::round(std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)));
}

// All compositions of m into r nonnegative parts, in lexicographic order.
void compositions(std::int64_t m, std::size_t r, std::vector<std::int64_t>& current,
                  std::vector<std::vector<std::int64_t>>& out) {
  if (current.size() + 1 == r) {
    current.push_back(m);
    out.push_back(current);
    current.pop_back();
    return;
  }
  for (std::int64_t k = m; k >= 0; --k) {
    current.push_back(k);
    compositions(m - k, r, current, out);
    current.pop_back();
  }
}

double log_factorial(std::int64_t k) { return std::lgamma(static_cast<double>(k) + 1.0); }

}  // namespace

RateMatrix::RateMatrix(Eigen::MatrixXd entries) : a_(std::move(entries)) {
  if (a_.rows() != a_.cols() || a_.rows() < 2) {
    throw ValidationError("rate matrix must be square with at least 2 types");
  }
  for (Eigen::Index i = 0; i < a_.rows(); ++i) {
    for (Eigen::Index j = 0; j < a_.cols(); ++j) {
      if (!std::isfinite(a_(i, j))) throw ValidationError("rate matrix has a non-finite entry");
      if (i != j && a_(i, j) < 0.0) {
        throw ValidationError("rate matrix off-diagonal entry (" + std::to_string(i + 1) + "," +
                              std::to_string(j + 1) + ") is negative");
      }
    }
    const double row_sum = a_.row(i).sum();
    if (std::abs(row_sum) > kRowRepairTol) {
      throw ValidationError("rate matrix row " + std::to_string(i + 1) + " sums to " +
                            std::to_string(row_sum) + ", not 0");
    }
    a_(i, i) -= row_sum;
  }
}

StochasticMatrix::StochasticMatrix(Eigen::MatrixXd entries) : p_(std::move(entries)) {
  if (p_.rows() != p_.cols() || p_.rows() < 2) {
    throw ValidationError("stochastic matrix must be square with at least 2 types");
  }
  for (Eigen::Index i = 0; i < p_.rows(); ++i) {
    for (Eigen::Index j = 0; j < p_.cols(); ++j) {
      const double v = p_(i, j);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ValidationError("stochastic matrix entry (" + std::to_string(i + 1) + "," +
                              std::to_string(j + 1) + ") outside [0,1]");
      }
    }
    if (std::abs(p_.row(i).sum() - 1.0) > kRowTol) {
      throw ValidationError("stochastic matrix row " + std::to_string(i + 1) + " does not sum to 1");
    }
  }
}

RateField discretize(RateField field, std::int64_t N) {
  if (N < 1) throw ValidationError("discretization needs N >= 1");
  return [field = std::move(field), N](double t, const SimplexPoint& x, double q) {
    return field(static_cast<double>(tick_index(t, N)) / static_cast<double>(N), x, q);
  };
}

StochasticMatrix build_transition(const RateMatrix& a, std::int64_t N) {
  if (N < 1) throw ValidationError("build_transition needs N >= 1");
  const double dn = static_cast<double>(N);
  Eigen::MatrixXd p = a.entries() / dn;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double diag = 1.0 + p(i, i);
    if (diag < 0.0) {
      throw NotStochastic("1 + a_" + std::to_string(i + 1) + std::to_string(i + 1) + "/N = " +
                          std::to_string(diag) + " < 0 at N = " + std::to_string(N));
    }
    p(i, i) = diag;
  }
  return StochasticMatrix(std::move(p));
}

void step_counts_into(std::span<const std::int64_t> n, const StochasticMatrix& P, StreamKey key,
                      std::span<std::int64_t> out) {
  const std::size_t r = n.size();
  if (P.size() != r || out.size() != r) throw ValidationError("step_counts: dimension mismatch");
  std::fill(out.begin(), out.end(), 0);
  // Small fixed buffers cover the usual r; larger r falls back to the heap.
  std::int64_t stack_draw[16];
  double stack_row[16];
  std::vector<std::int64_t> heap_draw;
  std::vector<double> heap_row;
  std::span<std::int64_t> draw(stack_draw, r <= 16 ? r : 0);
  std::span<double> row(stack_row, r <= 16 ? r : 0);
  if (r > 16) {
    heap_draw.resize(r);
    heap_row.resize(r);
    draw = heap_draw;
    row = heap_row;
  }
  const Eigen::MatrixXd& p = P.entries();
  for (std::size_t i = 0; i < r; ++i) {
    if (n[i] == 0) continue;
    for (std::size_t j = 0; j < r; ++j) {
      row[j] = p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    key.type = i;
    CounterRng rng(key);
    sample_multinomial(rng, n[i], row, draw);
    for (std::size_t j = 0; j < r; ++j) out[j] += draw[j];
  }
}

CountVector step_counts(const CountVector& n, const StochasticMatrix& P, StreamKey key) {
  std::vector<std::int64_t> out(n.types());
  step_counts_into(n.counts(), P, key, out);
  return CountVector(std::move(out));
}

CountDistribution enumerate_one_step(const CountVector& n, const StochasticMatrix& P) {
  const std::size_t r = n.types();
  if (P.size() != r) throw ValidationError("enumerate_one_step: dimension mismatch");
  double work = 1.0;
  for (std::size_t i = 0; i < r; ++i) {
    work *= binomial_coefficient(n[i] + static_cast<std::int64_t>(r) - 1, static_cast<std::int64_t>(r) - 1);
  }
  if (work > kEnumerationBudget) {
    throw TooLarge("enumeration needs " + std::to_string(work) + " outcomes, budget is 1e6");
  }

  std::map<std::vector<std::int64_t>, double> acc{{std::vector<std::int64_t>(r, 0), 1.0}};
  for (std::size_t i = 0; i < r; ++i) {
    if (n[i] == 0) continue;
    std::vector<std::vector<std::int64_t>> parts;
    std::vector<std::int64_t> scratch;
    compositions(n[i], r, scratch, parts);

    // pmf of Multinomial(n_i, P_i.) on each composition
    std::vector<double> pmf(parts.size());
    for (std::size_t c = 0; c < parts.size(); ++c) {
      double logp = log_factorial(n[i]);
      double prob = 1.0;
      bool possible = true;
      for (std::size_t j = 0; j < r; ++j) {
        const std::int64_t k = parts[c][j];
        logp -= log_factorial(k);
        if (k > 0) {
          const double pij = P(i, j);
          if (pij == 0.0) {
            possible = false;
            break;
          }
          prob *= std::pow(pij, static_cast<double>(k));
        }
      }
      pmf[c] = possible ? std::exp(logp) * prob : 0.0;
    }

    std::map<std::vector<std::int64_t>, double> next;
    for (const auto& [base, mass] : acc) {
      for (std::size_t c = 0; c < parts.size(); ++c) {
        if (pmf[c] == 0.0) continue;
        std::vector<std::int64_t> key = base;
        for (std::size_t j = 0; j < r; ++j) key[j] += parts[c][j];
        next[key] += mass * pmf[c];
      }
    }
    acc = std::move(next);
  }

  CountDistribution out;
  for (auto& [counts, mass] : acc) out.emplace(CountVector(counts), mass);
  return out;
}

Eigen::VectorXd conditional_mean(const CountVector& n, const StochasticMatrix& P) {
  const std::size_t r = n.types();
  if (P.size() != r) throw ValidationError("conditional_mean: dimension mismatch");
  Eigen::VectorXd counts(static_cast<Eigen::Index>(r));
  for (std::size_t i = 0; i < r; ++i) counts(static_cast<Eigen::Index>(i)) = static_cast<double>(n[i]);
  return P.entries().transpose() * counts;
}

double conditional_squared_increment(const CountVector& n, const StochasticMatrix& P, std::size_t i) {
  const std::size_t r = n.types();
  if (P.size() != r) throw ValidationError("conditional_squared_increment: dimension mismatch");
  if (i >= r) throw ValidationError("type index out of range");
  const auto col = static_cast<Eigen::Index>(i);
  double mean_i = 0.0;
  double thinning = 0.0;
  for (std::size_t j = 0; j < r; ++j) {
    const double pji = P.entries()(static_cast<Eigen::Index>(j), col);
    const double nj = static_cast<double>(n[j]);
    mean_i += nj * pji;
    thinning += pji * pji * nj;
  }
  const double ni = static_cast<double>(n[i]);
  return mean_i * mean_i + mean_i - thinning - 2.0 * mean_i * ni + ni * ni;
}

}  // namespace fbm
