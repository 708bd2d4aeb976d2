#include <algorithm>
#include <cmath>
#include <limits>

#include "spot/synth/world.hpp"

namespace spot::synth {

namespace {

constexpr Rgb kBackground{35, 35, 40};
constexpr Rgb kTable{165, 145, 115};
constexpr Rgb kTableLine{145, 125, 98};
constexpr Rgb kFinger{50, 50, 50};
constexpr double kGridPitch = 0.05;
constexpr double kGridLine = 0.003;
constexpr int kFingerHalfWidth = 3;
constexpr int kFingerHalfHeight = 8;

struct Ray {
  Vec3 origin;
  Vec3 dir;
};

Ray pixel_ray(const Camera& cam, const Pose& camera_pose, int u, int v) {
  const Vec3 d_cam((u + 0.5 - cam.cx) / cam.fx, (v + 0.5 - cam.cy) / cam.fy, 1.0);
  return {camera_pose.position, camera_pose.rotation * d_cam};
}

// Ray parameter where the ray meets the horizontal plane z = h, or +inf.
double hit_plane(const Ray& r, double h) {
  if (r.dir.z() == 0.0) return std::numeric_limits<double>::infinity();
  const double lambda = (h - r.origin.z()) / r.dir.z();
  return lambda > 0.0 ? lambda : std::numeric_limits<double>::infinity();
}

bool inside(const Instance& inst, double x, double y) {
  const double dx = x - inst.position.x(), dy = y - inst.position.y();
  if (inst.square) return std::abs(dx) <= inst.size && std::abs(dy) <= inst.size;
  return dx * dx + dy * dy <= inst.size * inst.size;
}

// Ray parameter of the hit with one instance, or +inf.
double hit_instance(const Ray& r, const Instance& inst) {
  const double lambda = hit_plane(r, inst.position.z());
  if (!std::isfinite(lambda)) return lambda;
  const Vec3 p = r.origin + lambda * r.dir;
  return inside(inst, p.x(), p.y()) ? lambda : std::numeric_limits<double>::infinity();
}

bool on_grid_line(double v) {
  const double m = v / kGridPitch - std::floor(v / kGridPitch);
  return m * kGridPitch < kGridLine;
}

}  // namespace

Camera Camera::from_config(const SynthConfig& c) {
  Camera cam;
  cam.width = c.image_width;
  cam.height = c.image_height;
  cam.fx = cam.fy = c.focal;
  cam.cx = 0.5 * c.image_width;
  cam.cy = 0.5 * c.image_height;
  return cam;
}

std::optional<std::pair<double, double>> Camera::project(const Vec3& p) const {
  if (p.z() <= 1e-9) return std::nullopt;
  return std::pair{cx + fx * p.x() / p.z(), cy + fy * p.y() / p.z()};
}

Pose camera_to_ee_extrinsic(const SynthConfig& config) {
  Pose e;
  e.position = config.camera_offset;
  return e;
}

Pose camera_pose_for(const Pose& ee, const SynthConfig& config) {
  return ee * camera_to_ee_extrinsic(config).inverse();
}

Raster render_frame(const WorldLayout& layout, const Pose& camera_pose, const EeState& ee, const Camera& cam,
                    const SynthConfig& config) {
  Raster img(cam.width, cam.height, kBackground);
  std::vector<const Instance*> instances;
  for (const auto* group : {&layout.targets, &layout.objects, &layout.distractors}) {
    for (const auto& i : *group) instances.push_back(&i);
  }
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const Ray ray = pixel_ray(cam, camera_pose, u, v);
      double best = std::numeric_limits<double>::infinity();
      const Instance* hit = nullptr;
      for (const auto* inst : instances) {
        const double lambda = hit_instance(ray, *inst);
        if (lambda < best) {
          best = lambda;
          hit = inst;
        }
      }
      const double table = hit_plane(ray, 0.0);
      if (hit && best <= table) {
        img.set(u, v, hit->color);
        continue;
      }
      if (std::isfinite(table)) {
        const Vec3 p = ray.origin + table * ray.dir;
        if (p.x() >= layout.table_x_min && p.x() <= layout.table_x_max && p.y() >= layout.table_y_min &&
            p.y() <= layout.table_y_max) {
          img.set(u, v, on_grid_line(p.x()) || on_grid_line(p.y()) ? kTableLine : kTable);
        }
      }
    }
  }
  // Fingers sit rigidly in the camera frame, spread by the gripper width.
  for (double side : {-1.0, 1.0}) {
    const Vec3 tip = config.camera_offset + Vec3(side * 0.5 * ee.width, 0.0, 0.0);
    const auto px = cam.project(tip);
    if (!px) continue;
    const int cu = static_cast<int>(std::lround(px->first)), cv = static_cast<int>(std::lround(px->second));
    for (int y = cv - kFingerHalfHeight; y <= cv + kFingerHalfHeight; ++y) {
      for (int x = cu - kFingerHalfWidth; x <= cu + kFingerHalfWidth; ++x) {
        if (img.contains(x, y)) img.set(x, y, kFinger);
      }
    }
  }
  return img;
}

std::optional<std::pair<pipeline::Box, pipeline::Box>> gt_boxes(const WorldLayout& layout, const Pose& camera_pose,
                                                                 const std::string& object, const std::string& target,
                                                                 const Camera& cam) {
  auto box_of = [&](const std::string& name) -> std::optional<pipeline::Box> {
    const Instance* inst = layout.find(name);
    if (!inst) return std::nullopt;
    int x0 = cam.width, y0 = cam.height, x1 = -1, y1 = -1;
    for (int v = 0; v < cam.height; ++v) {
      for (int u = 0; u < cam.width; ++u) {
        if (std::isfinite(hit_instance(pixel_ray(cam, camera_pose, u, v), *inst))) {
          x0 = std::min(x0, u);
          y0 = std::min(y0, v);
          x1 = std::max(x1, u);
          y1 = std::max(y1, v);
        }
      }
    }
    if (x1 < 0) return std::nullopt;
    return pipeline::Box{static_cast<double>(x0), static_cast<double>(y0), static_cast<double>(x1 + 1),
                         static_cast<double>(y1 + 1)};
  };
  const auto a = box_of(object);
  const auto b = box_of(target);
  if (!a || !b) return std::nullopt;
  return std::pair{*a, *b};
}

}  // namespace spot::synth
