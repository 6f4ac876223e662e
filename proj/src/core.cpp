#include "sharpdecay/core.hpp"

namespace sharpdecay {

int default_workers() {
  if (const char* env = std::getenv("SHARPDECAY_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

Moments sample_moments(const std::vector<double>& xs) {
  Moments m;
  m.count = xs.size();
  if (xs.size() < 4) throw InvalidArgument("sample_moments: need at least 4 samples");
  const double n = static_cast<double>(xs.size());
  double s = 0.0;
  for (double x : xs) s += x;
  m.mean = s / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d = x - m.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  m.variance = m2 * n / (n - 1.0);
  m.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
  m.excess_kurtosis = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;
  return m;
}

double wilson_halfwidth(double k, double n, double z) {
  if (n <= 0.0) return 0.0;
  const double p = k / n;
  const double z2 = z * z;
  return z / (1.0 + z2 / n) * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
}

}  // namespace sharpdecay
