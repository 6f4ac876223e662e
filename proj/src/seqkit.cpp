#include "sharpdecay/seqkit.hpp"

#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace sharpdecay::seq {

double rate_tail_majorant(double p, int log_power, Index N) {
  require(p > 1, "rate_tail_majorant: p must exceed 1 for a finite tail");
  require(N >= 1, "rate_tail_majorant: N must be at least 1");
  const double x = static_cast<double>(N);
  // The summand must already be decreasing at N for the integral test.
  require(log_power == 0 || std::log(x) >= log_power / p, "rate_tail_majorant: N too small for monotone summand");
  // I_s = int_N^inf x^{-p} (ln x)^s dx = N^{1-p}(ln N)^s/(p-1) + s/(p-1) I_{s-1}.
  double integral = std::pow(x, 1.0 - p) / (p - 1.0);
  for (int s = 1; s <= log_power; ++s) integral = std::pow(x, 1.0 - p) * std::pow(std::log(x), s) / (p - 1.0) + s / (p - 1.0) * integral;
  return integral;
}

RealSeq b_seq(const RealSeq& tail_phi, double mean_phi) {
  require(mean_phi > 0, "b_seq: mean must be positive");
  require(tail_phi.size() >= 1, "b_seq: empty tail");
  require(tail_phi(0) <= 1.0 + 1e-12, "b_seq: tail_0 must not exceed 1");
  for (Index n = 1; n < tail_phi.size(); ++n)
    if (tail_phi(n) > tail_phi(n - 1)) throw InvalidArgument("b_seq: tail is not nonincreasing at n=" + std::to_string(n));
  const TailSums sums = tail_sum_seq(tail_phi);
  return (1.0 + sums.values.array() / mean_phi).matrix();
}

RealSeq gamma_seq(double beta_prime, const RealSeq& sigma_tail) {
  require(beta_prime > 1, "gamma_seq: beta' must exceed 1");
  require((sigma_tail.array() >= 0).all(), "gamma_seq: sigma_n must be nonnegative");
  return convolve(rate_seq(beta_prime, 0, sigma_tail.size() - 1), sigma_tail);
}

double sup_ratio(const RealSeq& num, const RealSeq& den, Index n0, Index n1) {
  require(num.size() == den.size(), "sup_ratio: length mismatch");
  require(0 <= n0 && n0 <= n1 && n1 < num.size(), "sup_ratio: window outside range");
  double best = 0.0;
  for (Index n = n0; n <= n1; ++n) {
    require(den(n) > 0, "sup_ratio: denominator must be positive in the window");
    best = std::max(best, num(n) / den(n));
  }
  return best;
}

void write_csv(std::ostream& os, const RealSeq& s, const std::string& header_comment) {
  os << "# " << header_comment << "\n";
  os << "n,value\n";
  std::ostringstream line;
  line.precision(17);
  for (Index n = 0; n < s.size(); ++n) {
    line.str("");
    line << n << "," << s(n) << "\n";
    os << line.str();
  }
}

RealSeq read_csv(std::istream& is) {
  std::vector<double> values;
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("n,", 0) == 0) continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw InvalidArgument("read_csv: malformed line '" + line + "'");
    const long n = std::stol(line.substr(0, comma));
    if (n != static_cast<long>(values.size())) throw InvalidArgument("read_csv: indices must be 0,1,2,...");
    const auto rest = line.substr(comma + 1);
    values.push_back(std::stod(rest.substr(0, rest.find(','))));
  }
  return Eigen::Map<RealSeq>(values.data(), static_cast<Index>(values.size()));
}

}  // namespace sharpdecay::seq
