#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace plfl {

class DegenerateDenominator : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Forecasts aligned with actuals. `actuals` carries `lag` extra leading
/// points so that the lag-L persistence reference x_{t-L} exists for every
/// scored t: forecasts[k] is scored against actuals[k + lag].
struct ForecastSeries {
  std::vector<double> forecasts;
  std::vector<double> actuals;
  std::size_t lag = 1;
};

/// Mean absolute scaled error against the lag-L persistence forecast:
///   sum_t |xhat_t - x_t| / sum_t |x_{t-L} - x_t|.
inline double mase(const ForecastSeries& fs) {
  if (fs.forecasts.empty()) throw std::invalid_argument("mase: no forecasts");
  if (fs.lag == 0) throw std::invalid_argument("mase: lag must be >= 1");
  if (fs.actuals.size() != fs.forecasts.size() + fs.lag) {
    throw std::invalid_argument("mase: actuals must hold forecasts.size() + lag points");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < fs.forecasts.size(); ++k) {
    const double x = fs.actuals[k + fs.lag];
    num += std::abs(fs.forecasts[k] - x);
    den += std::abs(fs.actuals[k] - x);
  }
  if (den == 0.0) {
    throw DegenerateDenominator("mase: persistence error is zero (actuals are lag-" + std::to_string(fs.lag) +
                                " periodic); MASE undefined");
  }
  return num / den;
}

inline double mse(std::span<const double> forecasts, std::span<const double> actuals) {
  if (forecasts.size() != actuals.size()) throw std::invalid_argument("mse: length mismatch");
  if (forecasts.empty()) throw std::invalid_argument("mse: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    const double d = forecasts[i] - actuals[i];
    acc += d * d;
  }
  return acc / static_cast<double>(forecasts.size());
}

}  // namespace plfl
