#include "sspfield/schedule.hpp"

#include <cmath>
#include <string>

#include "sspfield/errors.hpp"

namespace sspfield {

double lr_schedule(int t, int warmup_epochs, int total_epochs, double eta_max,
                   double eta_min) {
  if (warmup_epochs < 0 || warmup_epochs >= total_epochs)
    throw ConfigError("warmup must be shorter than the total epoch count");
  if (t < 0 || t > total_epochs)
    throw RangeError("schedule epoch " + std::to_string(t) + " outside [0, " +
                     std::to_string(total_epochs) + "]");
  if (t <= warmup_epochs) {
    if (warmup_epochs == 0) return eta_max;
    return eta_max * static_cast<double>(t) / static_cast<double>(warmup_epochs);
  }
  double tp = static_cast<double>(t - warmup_epochs);
  double span = static_cast<double>(total_epochs - warmup_epochs);
  constexpr double kPi = 3.14159265358979323846;
  return eta_min + 0.5 * (eta_max - eta_min) * (1.0 + std::cos(kPi * tp / span));
}

}  // namespace sspfield
