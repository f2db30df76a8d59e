#pragma once

#include <cmath>

#include "ontram/errors.hpp"

namespace ontram {

// CDF of the standard logistic distribution, evaluated without overflow
// for either sign of z.
inline double latent_cdf(double z) {
  if (!std::isfinite(z)) throw numeric_error("latent_cdf: non-finite input");
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Density of the standard logistic, f(z) = F(z)(1 - F(z)).
inline double latent_pdf(double z) {
  if (!std::isfinite(z)) throw numeric_error("latent_pdf: non-finite input");
  const double e = std::exp(-std::abs(z));
  const double d = 1.0 + e;
  return e / (d * d);
}

inline double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw numeric_error("logit: argument outside (0,1)");
  return std::log(p / (1.0 - p));
}

}  // namespace ontram
