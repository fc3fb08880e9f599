#include "aet/asymptotics.hpp"

#include <cmath>

namespace aet {

double ratio_at_n(double n, double e_train, double e_nn, double e_base, double lambda) {
  if (!(n >= 1.0)) throw ValidationError("ratio undefined below one deployed instance");
  if (!(e_base > 0.0)) throw ValidationError("e_base must be > 0");
  if (!(lambda > 0.0)) throw ValidationError("lambda must be > 0");
  // lambda cancels between numerator and denominator; it deliberately
  // never enters the arithmetic below.
  return (e_train + n * e_nn) / (n * e_base);
}

double asymptotic_ratio(double e_nn, double e_base) {
  if (!(e_base > 0.0)) throw ValidationError("e_base must be > 0");
  return e_nn / e_base;
}

double convergence_residual(double n, double e_train, double e_base) {
  if (!(n >= 1.0)) throw ValidationError("residual undefined below one deployed instance");
  if (!(e_base > 0.0)) throw ValidationError("e_base must be > 0");
  return e_train / (n * e_base);
}

double embodied_rate_g_per_instance(const HardwareSpec& spec, double tau_inst_per_s) {
  if (!(tau_inst_per_s > 0.0)) throw ValidationError("throughput must be > 0");
  return spec.embodied_g() / (tau_inst_per_s * spec.lifetime_s());
}

double carbon_asymptotic_ratio(double e_nn, double e_base, double ci_g_per_kwh,
                               double embodied_rate_nn_g, double embodied_rate_base_g) {
  if (!(ci_g_per_kwh >= 0.0)) throw ValidationError("grid intensity must be >= 0");
  if (!(embodied_rate_nn_g >= 0.0) || !(embodied_rate_base_g >= 0.0))
    throw ValidationError("embodied rates must be >= 0");
  const double num = e_nn * ci_g_per_kwh / 1000.0 + embodied_rate_nn_g;
  const double den = e_base * ci_g_per_kwh / 1000.0 + embodied_rate_base_g;
  if (!(den > 0.0))
    throw ValidationError("carbon ratio denominator must be positive");
  return num / den;
}

double carbon_asymptotic_ratio(double e_nn, double e_base, double ci_g_per_kwh,
                               const HardwareSpec& spec_nn, const HardwareSpec& spec_base,
                               double tau_nn, double tau_base) {
  return carbon_asymptotic_ratio(e_nn, e_base, ci_g_per_kwh,
                                 embodied_rate_g_per_instance(spec_nn, tau_nn),
                                 embodied_rate_g_per_instance(spec_base, tau_base));
}

std::vector<double> log_spaced(double n_min, double n_max, int points) {
  if (!(n_min > 0.0) || !(n_max > n_min))
    throw ValidationError("log spacing needs 0 < n_min < n_max");
  if (points < 2) throw ValidationError("log spacing needs at least 2 points");
  std::vector<double> out;
  out.reserve(points);
  const double l0 = std::log10(n_min);
  const double l1 = std::log10(n_max);
  for (int i = 0; i < points; ++i)
    out.push_back(std::pow(10.0, l0 + (l1 - l0) * i / (points - 1)));
  out.front() = n_min;
  out.back() = n_max;
  return out;
}

}  // namespace aet
