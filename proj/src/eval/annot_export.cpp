#include "spot/eval/annot_export.hpp"

#include <json.hpp>

#include <cmath>

#include "spot/common/array_io.hpp"
#include "spot/common/error.hpp"
#include "spot/common/raster.hpp"
#include "spot/dataset/annotations.hpp"
#include "spot/pipeline/episode.hpp"

#include <httplib.h>

namespace spot::eval {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string frame_file(const std::string& key) {
  std::string s = key;
  for (std::size_t p = s.find('/'); p != std::string::npos; p = s.find('/', p + 2)) s.replace(p, 1, "__");
  return "frames/" + s + ".png";
}

std::string error_body(const std::string& message) {
  ordered_json j;
  j["error"] = message;
  return j.dump();
}

pipeline::Box parse_box(const ordered_json& v, const std::string& what) {
  if (!v.is_array() || v.size() != 4) throw ParseError(what + " must be [x1, y1, x2, y2]");
  std::array<double, 4> c{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!v[i].is_number()) throw ParseError(what + " coordinates must be numbers");
    c[i] = v[i].get<double>();
    if (!std::isfinite(c[i])) throw ParseError(what + " coordinates must be finite");
  }
  return {c[0], c[1], c[2], c[3]};
}

// Existing spelling of `key` in the annotation file, so upserts replace rather than duplicate.
std::string stored_key(const std::string& text, const std::string& normalized) {
  if (text.empty()) return normalized;
  const auto root = ordered_json::parse(text);
  if (!root.is_object()) throw ParseError("annotation JSON must be an object keyed by episode");
  for (const auto& [k, v] : root.items()) {
    try {
      if (dataset::parse_key(k).str() == normalized) return k;
    } catch (const ParseError&) {
    }
  }
  return normalized;
}

}  // namespace

std::string index_to_json(const std::vector<IndexEntry>& entries) {
  ordered_json j = ordered_json::array();
  for (const auto& e : entries) {
    ordered_json o;
    o["key"] = e.key;
    o["frame_path"] = e.frame_path;
    o["image_width"] = e.image_width;
    o["image_height"] = e.image_height;
    o["annotated"] = e.annotated;
    j.push_back(o);
  }
  return j.dump(2) + "\n";
}

std::vector<IndexEntry> index_from_json(const std::string& text) {
  try {
    const auto j = ordered_json::parse(text);
    if (!j.is_array()) throw ParseError("episode index must be a JSON array");
    std::vector<IndexEntry> out;
    for (const auto& o : j) {
      out.push_back({o.at("key").get<std::string>(), o.at("frame_path").get<std::string>(),
                     o.at("image_width").get<int>(), o.at("image_height").get<int>(), o.at("annotated").get<bool>()});
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("episode index: ") + e.what());
  }
}

std::vector<IndexEntry> export_annotation_frames(const fs::path& data_root, const fs::path& annotations,
                                                 const fs::path& out_dir) {
  dataset::AnnotationSet annotated;
  if (fs::exists(annotations)) annotated = dataset::load_annotations(annotations);
  fs::create_directories(out_dir / "frames");
  std::vector<IndexEntry> index;
  for (const auto& dir : pipeline::find_processed_episodes(data_root)) {
    const auto rec = pipeline::read_processed(dir);
    if (rec.valid_indices.empty()) throw PipelineError(rec.key() + ": no valid frames");
    const Raster frame = rec.frames.get(rec.valid_indices.front());
    IndexEntry e{rec.key(), frame_file(rec.key()), frame.width, frame.height, annotated.records.count(rec.key()) > 0};
    write_png(out_dir / e.frame_path, frame);
    index.push_back(std::move(e));
  }
  write_file_atomic(out_dir / kIndexFile, index_to_json(index));
  return index;
}

AnnotationStore::AnnotationStore(fs::path export_dir, fs::path annotations)
    : export_dir_(std::move(export_dir)), annotations_(std::move(annotations)) {}

std::string AnnotationStore::annotations_json() const {
  std::lock_guard lock(mutex_);
  return fs::exists(annotations_) ? read_file_bytes(annotations_) : std::string("{}\n");
}

SaveOutcome AnnotationStore::save(const std::string& raw_key, const std::string& body) {
  std::lock_guard lock(mutex_);
  std::string key;
  pipeline::Box object, target;
  try {
    key = dataset::parse_key(raw_key).str();
    const auto j = ordered_json::parse(body);
    if (!j.is_object()) throw ParseError("body must be a JSON object");
    if (j.contains("object") || j.contains("target")) {
      object = parse_box(j.at("object"), "object");
      target = parse_box(j.at("target"), "target");
    } else if (j.contains("boxes")) {
      const auto& b = j.at("boxes");
      if (!b.is_array() || b.size() != 2) return {400, error_body("exactly two boxes are required (object, target)")};
      object = parse_box(b[0], "object");
      target = parse_box(b[1], "target");
    } else {
      return {400, error_body("body needs 'object' and 'target' boxes")};
    }
  } catch (const nlohmann::json::exception& e) {
    return {400, error_body(std::string("malformed body: ") + e.what())};
  } catch (const ParseError& e) {
    return {400, error_body(e.what())};
  }

  auto index = index_from_json(read_file_bytes(export_dir_ / kIndexFile));
  IndexEntry* entry = nullptr;
  for (auto& e : index) {
    if (e.key == key) entry = &e;
  }
  if (!entry) return {404, error_body("unknown episode '" + key + "'")};
  for (const auto& [name, b] : {std::pair{"object", object}, std::pair{"target", target}}) {
    if (!b.well_formed()) return {400, error_body(std::string(name) + " box is degenerate")};
    if (!b.inside(entry->image_width, entry->image_height)) {
      return {400, error_body(std::string(name) + " box lies outside the " + std::to_string(entry->image_width) +
                              "x" + std::to_string(entry->image_height) + " image")};
    }
  }

  std::string text = fs::exists(annotations_) ? read_file_bytes(annotations_) : std::string();
  try {
    text = dataset::upsert_annotation(text, stored_key(text, key), object, target);
  } catch (const std::exception& e) {
    return {500, error_body(std::string("annotation file unreadable: ") + e.what())};
  }
  write_file_atomic(annotations_, text);
  if (!entry->annotated) {
    entry->annotated = true;
    write_file_atomic(export_dir_ / kIndexFile, index_to_json(index));
  }
  ordered_json ok;
  ok["key"] = key;
  ok["object"] = {object.x_min, object.y_min, object.x_max, object.y_max};
  ok["target"] = {target.x_min, target.y_min, target.x_max, target.y_max};
  return {200, ok.dump()};
}

struct AnnotationServer::Impl {
  AnnotationStore store;
  httplib::Server server;
  Impl(fs::path export_dir, fs::path annotations) : store(std::move(export_dir), std::move(annotations)) {}
};

AnnotationServer::AnnotationServer(fs::path export_dir, fs::path annotations)
    : impl_(std::make_unique<Impl>(std::move(export_dir), std::move(annotations))) {
  auto& s = impl_->server;
  auto* store = &impl_->store;
  s.Get("/api/index", [store](const httplib::Request&, httplib::Response& res) {
    res.set_content(read_file_bytes(store->export_dir() / kIndexFile), "application/json");
  });
  s.Get("/api/annotations", [store](const httplib::Request&, httplib::Response& res) {
    res.set_content(store->annotations_json(), "application/json");
  });
  s.Put(R"(/api/annotations/(.+))", [store](const httplib::Request& req, httplib::Response& res) {
    const auto out = store->save(httplib::detail::decode_url(req.matches[1].str(), false), req.body);
    res.status = out.status;
    res.set_content(out.body, "application/json");
  });
  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    res.status = 500;
    res.set_content(error_body(what), "application/json");
  });
  if (!s.set_mount_point("/", impl_->store.export_dir().string())) {
    throw IoError("cannot serve " + impl_->store.export_dir().string());
  }
}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void AnnotationServer::listen() { impl_->server.listen_after_bind(); }

void AnnotationServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace spot::eval
