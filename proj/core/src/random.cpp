#include "fbm/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fbm/error.hpp"

namespace fbm {
namespace {

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// log(k!) - [(k + 1/2) log(k + 1) - (k + 1) + log(sqrt(2 pi))]
double stirling_tail(double k) {
  if (k <= 15.0) {
    return std::lgamma(k + 1.0) -
           ((k + 0.5) * std::log(k + 1.0) - (k + 1.0) + 0.5 * std::log(2.0 * std::numbers::pi));
  }
  const double kp1sq = (k + 1.0) * (k + 1.0);
  return (1.0 / 12 - (1.0 / 360 - 1.0 / 1260 / kp1sq) / kp1sq) / (k + 1.0);
}

// p <= 0.5; sequential search over the pmf from 0.
std::int64_t binomial_inversion(CounterRng& rng, std::int64_t n, double p) {
  const double q = 1.0 - p;
  const double ratio = p / q;
  const double start = std::exp(static_cast<double>(n) * std::log1p(-p));
  for (;;) {
    double u = rng.uniform();
    double f = start;
    std::int64_t k = 0;
    while (u > f) {
      u -= f;
      if (k >= n) break;  // u exceeded the total mass through rounding; redraw
      f *= ratio * static_cast<double>(n - k) / static_cast<double>(k + 1);
      ++k;
    }
    if (u <= f) return k;
  }
}

// p <= 0.5 and n * p >= 10.
std::int64_t binomial_btrs(CounterRng& rng, std::int64_t count, double p) {
  const double n = static_cast<double>(count);
  const double spq = std::sqrt(n * p * (1.0 - p));
  const double b = 1.15 + 2.53 * spq;
  const double a = -0.0873 + 0.0248 * b + 0.01 * p;
  const double c = n * p + 0.5;
  const double v_r = 0.92 - 4.2 / b;
  const double r = p / (1.0 - p);
  const double alpha = (2.83 + 5.1 / b) * spq;
  const double m = std::floor((n + 1.0) * p);
  const double tail_m = stirling_tail(m) + stirling_tail(n - m);
  const double head = (m + 0.5) * std::log((m + 1.0) / (r * (n - m + 1.0)));

  for (;;) {
    const double u = rng.uniform() - 0.5;
    double v = rng.uniform_open();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + c);
    if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(k);
    if (k < 0.0 || k > n) continue;
    v = std::log(v * alpha / (a / (us * us) + b));
    const double bound = head + (n + 1.0) * std::log((n - m + 1.0) / (n - k + 1.0)) +
                         (k + 0.5) * std::log(r * (n - k + 1.0) / (k + 1.0)) + tail_m -
                         stirling_tail(k) - stirling_tail(n - k);
    if (v <= bound) return static_cast<std::int64_t>(k);
  }
}

}  // namespace

CounterRng::CounterRng(const StreamKey& key) {
  std::uint64_t h = mix64(key.seed + kGamma);
  h = mix64(h ^ (key.replica + 0x632be59bd9b4e019ULL));
  h = mix64(h ^ (key.tick + 0x85157af5ULL));
  h = mix64(h ^ (key.type + 0x2545f4914f6cdd1dULL));
  key_ = h;
}

CounterRng::result_type CounterRng::operator()() {
  ++counter_;
  return mix64(key_ + counter_ * kGamma);
}

double CounterRng::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double CounterRng::uniform_open() {
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

std::int64_t sample_binomial(CounterRng& rng, std::int64_t n, double p) {
  if (n < 0 || !(p >= 0.0 && p <= 1.0)) {
    throw ValidationError("binomial parameters out of range");
  }
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  const bool flip = p > 0.5;
  const double pp = flip ? 1.0 - p : p;
  const std::int64_t k =
      static_cast<double>(n) * pp < 10.0 ? binomial_inversion(rng, n, pp) : binomial_btrs(rng, n, pp);
  return flip ? n - k : k;
}

void sample_multinomial(CounterRng& rng, std::int64_t n, std::span<const double> prob,
                        std::span<std::int64_t> out) {
  const std::size_t r = prob.size();
  double total = 0.0;
  for (double p : prob) {
    if (!(p >= 0.0)) throw ValidationError("multinomial probabilities must be nonnegative");
    total += p;
  }
  if (!(total > 0.0)) throw ValidationError("multinomial probabilities sum to zero");

  std::int64_t left = n;
  for (std::size_t j = 0; j < r; ++j) {
    if (left == 0) {
      out[j] = 0;
      continue;
    }
    // Mass strictly after j, summed directly so exact zeros stay zero.
    double tail = 0.0;
    for (std::size_t i = j + 1; i < r; ++i) tail += prob[i];
    if (tail == 0.0) {
      out[j] = left;
      left = 0;
      continue;
    }
    if (prob[j] == 0.0) {
      out[j] = 0;
      continue;
    }
    out[j] = sample_binomial(rng, left, prob[j] / (prob[j] + tail));
    left -= out[j];
  }
}

}  // namespace fbm
