// Shared plumbing: error types, counter-based random streams, deterministic
// sample-parallel execution and a few summary statistics.
#ifndef SHARPDECAY_CORE_HPP
#define SHARPDECAY_CORE_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace sharpdecay {

/// Precondition violation on caller-supplied data ("rejected input").
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative numerical procedure failed to converge.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Internal inconsistency that indicates a bug rather than bad input.
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Orbit reached a state from which the computation cannot continue in a
/// statistically meaningful way (exact fixed point, billiard corner, ...).
/// Samplers catch this and restart from a fresh seeded point.
class Resample : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

// ---------------------------------------------------------------------------
// Philox4x32-10 (Salmon et al., SC'11). Keyed by the experiment seed; the
// 128-bit counter holds (draw index, stream index), so the value of every
// draw is a pure function of (seed, stream, draw) and parallel decomposition
// never changes the sample set.

using Philox4x32Block = std::array<std::uint32_t, 4>;

inline Philox4x32Block philox4x32_10(Philox4x32Block ctr, std::array<std::uint32_t, 2> key) {
  constexpr std::uint64_t kM0 = 0xD2511F53u;
  constexpr std::uint64_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    const std::uint64_t p0 = kM0 * ctr[0];
    const std::uint64_t p1 = kM1 * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
  }
  return ctr;
}

/// Counter-based generator for one stream. Cheap to construct; copyable.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  std::uint64_t next_u64() {
    if (cached_ == 0) refill();
    --cached_;
    return buffer_[cached_];
  }

  /// Uniform on [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0,1).
  double uniform_open() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  void refill() {
    const Philox4x32Block ctr = {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                 static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    const auto out = philox4x32_10(ctr, {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
    ++block_;
    buffer_[1] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    buffer_[0] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
    cached_ = 2;
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int cached_ = 0;
};

/// Stream ids used by different stages of one experiment are kept apart by
/// mixing a purpose tag into the high bits.
constexpr std::uint64_t stream_id(std::uint64_t purpose, std::uint64_t index) { return (purpose << 48) ^ index; }

// ---------------------------------------------------------------------------
// Worker pool semantics: `map_streams` evaluates fn(0..n-1) on up to `workers`
// threads and returns results in stream order. Callers reduce the returned
// vector with `tree_reduce`, whose pairing depends only on its length.

int default_workers();

template <class Fn>
auto map_streams(std::size_t n_streams, int workers, Fn&& fn) -> std::vector<decltype(fn(std::size_t{0}))> {
  using Result = decltype(fn(std::size_t{0}));
  std::vector<Result> out(n_streams);
  if (workers <= 0) workers = default_workers();
  const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(workers), n_streams);
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < n_streams; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n_streams) return;
        try {
          out[i] = fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(n_streams);
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

template <class T, class Combine>
T tree_reduce(std::vector<T> parts, Combine&& combine) {
  require(!parts.empty(), "tree_reduce: empty input");
  while (parts.size() > 1) {
    std::vector<T> next;
    next.reserve((parts.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < parts.size(); i += 2) next.push_back(combine(std::move(parts[i]), std::move(parts[i + 1])));
    if (parts.size() % 2 == 1) next.push_back(std::move(parts.back()));
    parts = std::move(next);
  }
  return std::move(parts.front());
}

// ---------------------------------------------------------------------------
// Summary statistics.

struct Moments {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

Moments sample_moments(const std::vector<double>& xs);

/// Half-width of the Wilson score interval for k successes in n trials.
double wilson_halfwidth(double k, double n, double z = 1.959963984540054);

/// Kolmogorov-Smirnov distance between the empirical law of `xs` and `cdf`.
template <class Cdf>
double ks_distance(std::vector<double> xs, Cdf&& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return d;
}

/// Standard deviation of the KS statistic under the null, sqrt-n scaled
/// Kolmogorov law: sd(sqrt(n) D) ~= 0.2603.
inline double ks_sigma(std::size_t n) { return 0.2603 / std::sqrt(static_cast<double>(n)); }

/// Mean of the Kolmogorov law for sqrt(n) D: sqrt(pi/2) ln 2.
inline double ks_mean(std::size_t n) { return 0.8687 / std::sqrt(static_cast<double>(n)); }

}  // namespace sharpdecay

#endif  // SHARPDECAY_CORE_HPP
