#include <algorithm>
#include <cmath>

#include "spot/common/error.hpp"
#include "spot/common/rng.hpp"
#include "spot/synth/world.hpp"

namespace spot::synth {

namespace {

constexpr Rgb kForkColors[5] = {{80, 100, 150}, {90, 95, 140}, {75, 110, 145}, {95, 105, 155}, {85, 100, 135}};
constexpr Rgb kPlateColor{225, 225, 215};
constexpr Rgb kBowlColor{150, 110, 80};
constexpr Rgb kTrayColor{90, 90, 105};
constexpr Rgb kDistractorColors[2] = {{200, 170, 60}, {120, 80, 140}};
constexpr const char* kTargetCategories[3] = {"plate", "bowl", "tray"};
constexpr int kAttempts = 200;
constexpr double kObjectLift = 0.001;  // objects rest just above target surfaces

Rgb target_color(int category) { return category == 0 ? kPlateColor : category == 1 ? kBowlColor : kTrayColor; }

Instance make_object(int i, Vec3 p, const SynthConfig& c) {
  p.z() = kObjectLift;
  return {"fork" + std::to_string(i + 1), "fork", p, kForkColors[i % 5], c.object_radius, false};
}

Instance make_target(int category, int index, Vec3 p, const SynthConfig& c) {
  p.z() = 0.0;
  return {std::string(kTargetCategories[category]) + std::to_string(index + 1), kTargetCategories[category], p,
          target_color(category), c.target_half, true};
}

bool clear_of(const Vec3& p, const std::vector<const Instance*>& placed, double clearance) {
  for (const auto* q : placed) {
    if (std::hypot(p.x() - q->position.x(), p.y() - q->position.y()) < clearance) return false;
  }
  return true;
}

std::vector<const Instance*> all_instances(const WorldLayout& l) {
  std::vector<const Instance*> out;
  for (const auto* group : {&l.objects, &l.targets, &l.distractors}) {
    for (const auto& i : *group) out.push_back(&i);
  }
  return out;
}

Vec3 uniform_on_table(Rng& rng, const WorldLayout& l, double margin) {
  const double x = l.table_x_min + margin + (l.table_x_max - l.table_x_min - 2 * margin) * uniform01(rng);
  const double y = l.table_y_min + margin + (l.table_y_max - l.table_y_min - 2 * margin) * uniform01(rng);
  return {x, y, 0.0};
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[static_cast<std::size_t>(rng() % i)]);
}

// Structured anchor grid: a row of five objects in front of a 3x3 target grid.
std::vector<Vec3> object_grid() {
  std::vector<Vec3> out;
  for (int i = 0; i < 5; ++i) out.emplace_back(-0.20 + 0.10 * i, -0.10, 0.0);
  return out;
}

std::vector<Vec3> target_grid() {
  std::vector<Vec3> out;
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) out.emplace_back(-0.15 + 0.15 * col, 0.05 + 0.10 * row, 0.0);
  }
  return out;
}

}  // namespace

const Instance* WorldLayout::find(const std::string& name) const {
  for (const auto* group : {&objects, &targets, &distractors}) {
    for (const auto& i : *group) {
      if (i.name == name) return &i;
    }
  }
  return nullptr;
}

WorldLayout gen_layout(SceneKind kind, std::uint64_t seed, const SynthConfig& config) {
  Rng rng(combine_seed({seed, hash_string("layout"), static_cast<std::uint64_t>(kind)}));
  const double margin = std::max(config.object_radius, config.target_half) + 0.005;
  for (int round = 0; round < 50; ++round) {
    WorldLayout l;
    l.kind = kind;
    l.table_x_min = config.table_x_min;
    l.table_x_max = config.table_x_max;
    l.table_y_min = config.table_y_min;
    l.table_y_max = config.table_y_max;
    bool failed = false;
    auto place = [&](auto make_at, auto propose) {
      for (int a = 0; a < kAttempts; ++a) {
        const Vec3 p = propose();
        if (clear_of(p, all_instances(l), config.clearance)) {
          make_at(p);
          return;
        }
      }
      failed = true;
    };
    if (kind == SceneKind::kStructured) {
      const auto og = object_grid();
      const auto tg = target_grid();
      for (int i = 0; i < 5; ++i) l.objects.push_back(make_object(i, og[i], config));
      for (int t = 0; t < 9; ++t) l.targets.push_back(make_target(t / 3, t % 3, tg[t], config));
      const auto all = all_instances(l);
      for (std::size_t i = 0; i < all.size(); ++i) {
        if (!clear_of(all[i]->position, {all.begin() + i + 1, all.end()}, config.clearance)) {
          throw GenerationError("structured grid violates clearance " + std::to_string(config.clearance));
        }
      }
    } else if (kind == SceneKind::kCluttered) {
      auto og = object_grid();
      auto tg = target_grid();
      shuffle(og, rng);
      shuffle(tg, rng);
      auto jitter = [&](const Vec3& base) {
        return Vec3(base.x() + config.clutter_jitter * (2 * uniform01(rng) - 1),
                    base.y() + config.clutter_jitter * (2 * uniform01(rng) - 1), 0.0);
      };
      for (int i = 0; i < 5 && !failed; ++i) {
        place([&](const Vec3& p) { l.objects.push_back(make_object(i, p, config)); }, [&] { return jitter(og[i]); });
      }
      for (int t = 0; t < 9 && !failed; ++t) {
        place([&](const Vec3& p) { l.targets.push_back(make_target(t / 3, t % 3, p, config)); },
              [&] { return jitter(tg[t]); });
      }
    } else {
      for (int i = 0; i < 5 && !failed; ++i) {
        place([&](const Vec3& p) { l.objects.push_back(make_object(i, p, config)); },
              [&] { return uniform_on_table(rng, l, margin); });
      }
      for (int t = 0; t < 9 && !failed; ++t) {
        place([&](const Vec3& p) { l.targets.push_back(make_target(t / 3, t % 3, p, config)); },
              [&] { return uniform_on_table(rng, l, margin); });
      }
    }
    if (kind != SceneKind::kStructured) {
      for (int d = 0; d < config.distractors && !failed; ++d) {
        place(
            [&](const Vec3& p) {
              Vec3 q = p;
              q.z() = kObjectLift;
              l.distractors.push_back({"distractor" + std::to_string(d + 1), "distractor", q, kDistractorColors[d % 2],
                                       0.8 * config.target_half, d % 2 == 1});
            },
            [&] { return uniform_on_table(rng, l, margin); });
      }
    }
    if (!failed) return l;
  }
  throw GenerationError("layout clearance " + std::to_string(config.clearance) +
                        " unsatisfiable after bounded retries");
}

}  // namespace spot::synth
