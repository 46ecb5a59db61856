#pragma once

namespace sspfield {

/// Learning rate at integer epoch t in [0, total_epochs]: linear ramp from 0
/// to eta_max over the warmup, then cosine annealing down to eta_min at
/// t = total_epochs. Continuous at the junction. t outside the range throws
/// RangeError.
double lr_schedule(int t, int warmup_epochs, int total_epochs, double eta_max,
                   double eta_min);

}  // namespace sspfield
