#include "spot/train/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spot/common/error.hpp"

namespace spot::train {

LrSchedule parse_schedule(const std::string& name) {
  if (name == "constant") return LrSchedule::kConstant;
  if (name == "warmup") return LrSchedule::kWarmup;
  if (name == "linear") return LrSchedule::kLinear;
  if (name == "cosine") return LrSchedule::kCosine;
  if (name == "cosine_with_restarts") return LrSchedule::kCosineRestarts;
  if (name == "polynomial") return LrSchedule::kPolynomial;
  throw ConfigError("unknown lr schedule '" + name + "'");
}

std::string schedule_name(LrSchedule s) {
  switch (s) {
    case LrSchedule::kConstant: return "constant";
    case LrSchedule::kWarmup: return "warmup";
    case LrSchedule::kLinear: return "linear";
    case LrSchedule::kCosine: return "cosine";
    case LrSchedule::kCosineRestarts: return "cosine_with_restarts";
    case LrSchedule::kPolynomial: return "polynomial";
  }
  return "constant";
}

double lr_at(const LrConfig& c, std::uint64_t step, std::uint64_t total) {
  if (c.kind == LrSchedule::kConstant) return c.base;
  if (step < c.warmup_steps) return c.base * static_cast<double>(step) / static_cast<double>(c.warmup_steps);
  if (c.kind == LrSchedule::kWarmup) return c.base;
  if (total <= c.warmup_steps) return c.kind == LrSchedule::kPolynomial ? c.end_lr : 0.0;
  const double progress =
      std::min(1.0, static_cast<double>(step - c.warmup_steps) / static_cast<double>(total - c.warmup_steps));
  switch (c.kind) {
    case LrSchedule::kLinear:
      return c.base * (1.0 - progress);
    case LrSchedule::kCosine:
      return c.base * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
    case LrSchedule::kCosineRestarts: {
      if (progress >= 1.0) return 0.0;
      const double phase = std::fmod(static_cast<double>(c.cycles) * progress, 1.0);
      return c.base * 0.5 * (1.0 + std::cos(std::numbers::pi * phase));
    }
    case LrSchedule::kPolynomial:
      return (c.base - c.end_lr) * std::pow(1.0 - progress, c.power) + c.end_lr;
    default:
      return c.base;
  }
}

}  // namespace spot::train
