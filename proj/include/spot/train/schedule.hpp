#pragma once

#include <cstdint>
#include <string>

namespace spot::train {

enum class LrSchedule { kConstant, kWarmup, kLinear, kCosine, kCosineRestarts, kPolynomial };

// "constant", "warmup", "linear", "cosine", "cosine_with_restarts", "polynomial". Throws ConfigError.
LrSchedule parse_schedule(const std::string& name);
std::string schedule_name(LrSchedule s);

struct LrConfig {
  LrSchedule kind = LrSchedule::kConstant;
  double base = 2e-4;
  std::uint64_t warmup_steps = 0;
  double end_lr = 0.0;     // polynomial floor
  double power = 1.0;      // polynomial exponent
  std::uint64_t cycles = 2;  // cosine restarts
};

// Linear warmup from 0 precedes every schedule except constant.
double lr_at(const LrConfig& c, std::uint64_t step, std::uint64_t total_steps);

}  // namespace spot::train
