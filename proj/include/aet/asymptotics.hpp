#pragma once

#include <vector>

#include "aet/model.hpp"

namespace aet {

// Cumulative-energy ratio at deployment volume n. The symmetric overhead
// lambda is accepted for interface parity and provably cancels: it never
// enters the value.
double ratio_at_n(double n, double e_train, double e_nn, double e_base, double lambda);

// Limit of the ratio as n grows: the per-instance marginal ratio.
double asymptotic_ratio(double e_nn, double e_base);

// ratio_at_n - asymptotic_ratio, exactly e_train / (n * e_base).
double convergence_residual(double n, double e_train, double e_base);

// Per-instance embodied carbon rate C_h / (tau * T_h), grams per instance.
double embodied_rate_g_per_instance(const HardwareSpec& spec, double tau_inst_per_s);

// Carbon-variant limit with asymmetric embodied terms; finite and
// training-cost-independent, but not guaranteed below one.
double carbon_asymptotic_ratio(double e_nn, double e_base, double ci_g_per_kwh,
                               double embodied_rate_nn_g, double embodied_rate_base_g);
double carbon_asymptotic_ratio(double e_nn, double e_base, double ci_g_per_kwh,
                               const HardwareSpec& spec_nn, const HardwareSpec& spec_base,
                               double tau_nn, double tau_base);

// Logarithmically spaced sample points, endpoints included.
std::vector<double> log_spaced(double n_min, double n_max, int points);

}  // namespace aet
