#include "aet/stats.hpp"

#include <algorithm>

#include "aet/common.hpp"

namespace aet {

double median(std::vector<double> values) {
  if (values.empty()) throw ValidationError("median of empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::pair<double, double> tukey_hinges(std::vector<double> values) {
  if (values.empty()) throw ValidationError("hinges of empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n == 1) return {values[0], values[0]};
  std::vector<double> lower(values.begin(), values.begin() + n / 2);
  std::vector<double> upper(values.begin() + (n + 1) / 2, values.end());
  return {median(std::move(lower)), median(std::move(upper))};
}

}  // namespace aet
