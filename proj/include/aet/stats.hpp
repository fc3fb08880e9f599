#pragma once

#include <utility>
#include <vector>

namespace aet {

// Median of a list; even lengths take the mean of the two central order
// statistics. Throws ValidationError on an empty list.
double median(std::vector<double> values);

// Tukey hinges (Q1, Q3): medians of the lower/upper halves, the median
// itself excluded for odd lengths. A single element is its own hinge pair.
std::pair<double, double> tukey_hinges(std::vector<double> values);

}  // namespace aet
