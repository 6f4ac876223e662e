#include "sharpdecay/inducing.hpp"

namespace sharpdecay::inducing {

std::int64_t induced_phi(const std::vector<std::int64_t>& h_sequence, std::int64_t sigma) {
  require(sigma >= 1, "induced_phi: sigma must be at least 1");
  require(static_cast<std::int64_t>(h_sequence.size()) >= sigma, "induced_phi: h sequence shorter than sigma");
  std::int64_t phi = 0;
  for (std::int64_t l = 0; l < sigma; ++l) {
    require(h_sequence[static_cast<std::size_t>(l)] >= 1, "induced_phi: return times must be at least 1");
    phi += h_sequence[static_cast<std::size_t>(l)];
  }
  return phi;
}

double birkhoff_scale(Scaling s, double n, double beta) {
  require(n >= 2.0, "birkhoff_scale: n must be at least 2");
  switch (s) {
    case Scaling::SqrtN:
      return std::sqrt(n);
    case Scaling::NLogNSqrt:
      return std::sqrt(n * std::log(n));
    case Scaling::NPowOneOverBeta:
      require(beta > 1.0, "birkhoff_scale: beta must exceed 1");
      return std::pow(n, 1.0 / beta);
  }
  throw InvalidArgument("birkhoff_scale: unknown scaling");
}

Scaling parse_scaling(const std::string& name) {
  if (name == "sqrt_n") return Scaling::SqrtN;
  if (name == "n_logn_sqrt") return Scaling::NLogNSqrt;
  if (name == "n_pow_1_over_beta") return Scaling::NPowOneOverBeta;
  throw InvalidArgument("unknown scaling '" + name + "' (expected sqrt_n, n_logn_sqrt or n_pow_1_over_beta)");
}

}  // namespace sharpdecay::inducing
