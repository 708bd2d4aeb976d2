#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace spot::eval {

struct IndexEntry {
  std::string key;
  std::string frame_path;  // relative to the export directory
  int image_width = 0;
  int image_height = 0;
  bool annotated = false;
  friend bool operator==(const IndexEntry&, const IndexEntry&) = default;
};

inline constexpr const char* kIndexFile = "index.json";

std::string index_to_json(const std::vector<IndexEntry>& entries);
// Throws ParseError.
std::vector<IndexEntry> index_from_json(const std::string& text);

// Writes frames/<scene>__<task>__<episode>.png (first valid frame) for every
// processed episode under `data_root`, and index.json. `annotations` may be missing.
std::vector<IndexEntry> export_annotation_frames(const std::filesystem::path& data_root,
                                                 const std::filesystem::path& annotations,
                                                 const std::filesystem::path& out_dir);

struct SaveOutcome {
  int status = 200;
  std::string body;  // JSON
};

// Applies one PUT of an episode's boxes. `body` is {"object": [x1,y1,x2,y2], "target": [...]}
// or {"boxes": [[...], [...]]}. The annotation file and index are replaced whole via
// write-temp-then-rename; every other entry is preserved.
class AnnotationStore {
 public:
  AnnotationStore(std::filesystem::path export_dir, std::filesystem::path annotations);
  SaveOutcome save(const std::string& key, const std::string& body);
  std::string annotations_json() const;
  const std::filesystem::path& export_dir() const { return export_dir_; }

 private:
  std::filesystem::path export_dir_;
  std::filesystem::path annotations_;
  mutable std::mutex mutex_;
};

// Static files from the export directory plus
//   GET /api/index, GET /api/annotations, PUT /api/annotations/<scene>/<task>/<episode>.
class AnnotationServer {
 public:
  AnnotationServer(std::filesystem::path export_dir, std::filesystem::path annotations);
  ~AnnotationServer();
  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  // Port 0 picks a free port. Returns the bound port; throws IoError on failure.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace spot::eval
