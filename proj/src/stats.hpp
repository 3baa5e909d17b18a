#pragma once

#include <span>
#include <vector>

namespace nmfs {

// Standard normal CDF.
double normal_cdf(double x);

// Standard normal density.
double normal_pdf(double x);

// Inverse standard normal CDF for p in (0,1). Rational initial guess refined
// by Newton steps against the erfc-based CDF; accurate to machine precision.
double normal_quantile(double p);

// Numerically stable logistic 1/(1+exp(-x)).
double logistic(double x);

double mean(std::span<const double> v);

// Sample standard deviation (n-1 denominator); 0 for fewer than two values.
double sample_sd(std::span<const double> v);

}  // namespace nmfs
