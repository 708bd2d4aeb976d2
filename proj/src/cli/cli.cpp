#include "spot/cli/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>

#include "spot/common/array_io.hpp"
#include "spot/common/error.hpp"
#include "spot/common/kv_config.hpp"
#include "spot/dataset/catalog.hpp"
#include "spot/dataset/stats.hpp"
#include "spot/eval/annot_export.hpp"
#include "spot/eval/evaluate.hpp"
#include "spot/eval/plot.hpp"
#include "spot/eval/stitch.hpp"
#include "spot/pipeline/processing.hpp"
#include "spot/synth/emit.hpp"
#include "spot/train/trainer.hpp"

namespace spot::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kManifestFile = "split_manifest.json";
constexpr const char* kDataConfigFile = "data_config.txt";
constexpr const char* kCheckpointFile = "checkpoint.bin";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string default_data_root() {
  const char* env = std::getenv(kDataRootEnv);
  return env && *env ? env : "data";
}

void require_dir(const fs::path& p, const std::string& what) {
  if (!fs::is_directory(p)) throw UsageError(what + " directory not found: " + p.string());
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw UsageError(what + " not found: " + p.string());
}

// key=value overrides applied on top of a config's own kv form.
KvConfig apply_overrides(KvConfig kv, const std::vector<std::string>& sets, const std::string& prefix) {
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + s + "'");
    std::string key = s.substr(0, eq);
    if (!prefix.empty()) {
      if (key.rfind(prefix, 0) != 0) continue;
      key = key.substr(prefix.size());
    }
    kv.set(key, s.substr(eq + 1));
  }
  return kv;
}

void check_set_prefixes(const std::vector<std::string>& sets) {
  for (const auto& s : sets) {
    if (s.rfind("model.", 0) != 0 && s.rfind("train.", 0) != 0) {
      throw UsageError("--set keys must start with model. or train., got '" + s + "'");
    }
  }
}

struct DataConfig {
  fs::path data_root;
  fs::path manifest;
  int stride = 3;

  KvConfig to_kv() const {
    KvConfig kv;
    kv.set("data_root", data_root.string());
    kv.set("manifest", manifest.string());
    kv.set("stride", std::to_string(stride));
    return kv;
  }
  static DataConfig from_kv(const KvConfig& kv) {
    DataConfig d;
    d.data_root = kv.get_string("data_root", "");
    d.manifest = kv.get_string("manifest", "");
    d.stride = static_cast<int>(kv.get_int("stride", 3));
    return d;
  }
};

struct Workspace {
  dataset::Catalog catalog;
  dataset::SplitManifest manifest;
  dataset::SampleConfig sample_config;
};

Workspace open_workspace(const fs::path& data, const fs::path& manifest_path, const dataset::SampleConfig& sc) {
  require_dir(data, "data");
  require_file(manifest_path, "split manifest");
  Workspace w;
  w.sample_config = sc;
  w.manifest = dataset::SplitManifest::load(manifest_path);
  w.catalog = dataset::load_catalog(data, data / dataset::kAnnotationFile, sc);
  return w;
}

void print_json(std::ostream& out, const ordered_json& j) { out << j.dump() << '\n'; }

// ---- subcommands ----

struct GenSynthOptions {
  std::string out;
  std::uint64_t seed = 0;
  std::string config;
  std::vector<std::string> sets;
  std::string mode = "processed";
  bool overwrite = false;
};

void gen_synth(const GenSynthOptions& o, std::ostream& out) {
  KvConfig kv;
  if (!o.config.empty()) {
    require_file(o.config, "synth config");
    kv = synth::SynthConfig::load(o.config).to_kv();
  } else {
    kv = synth::SynthConfig{}.to_kv();
  }
  const auto config = synth::SynthConfig::from_kv(apply_overrides(kv, o.sets, ""));
  const auto mode = o.mode == "raw" ? synth::EmitMode::kRaw : synth::EmitMode::kProcessed;
  const auto report = synth::emit_dataset(config, o.seed, o.out, mode, o.overwrite);
  ordered_json j;
  j["command"] = "gen-synth";
  j["root"] = o.out;
  j["mode"] = o.mode;
  j["episodes"] = report.keys.size();
  j["flagged"] = report.flagged;
  print_json(out, j);
}

struct PreprocessOptions {
  std::string raw;
  std::string out;
  bool overwrite = false;
};

void preprocess(const PreprocessOptions& o, std::ostream& out) {
  require_dir(o.raw, "raw recordings");
  const auto dirs = pipeline::find_raw_episodes(o.raw);
  for (const auto& dir : dirs) {
    const auto raw = pipeline::read_raw_episode(dir);
    pipeline::write_processed(o.out, pipeline::process_episode(raw), o.overwrite);
  }
  ordered_json j;
  j["command"] = "preprocess";
  j["root"] = o.out;
  j["episodes"] = dirs.size();
  print_json(out, j);
}

struct SplitOptions {
  std::string data;
  std::string out;
  double val_ratio = 0.1;
  std::uint64_t seed = 0;
  std::string stats;
  bool no_stats = false;
  int history = 4;
  int horizon = 16;
  int stride = 3;
};

void split(const SplitOptions& o, std::ostream& out) {
  require_dir(o.data, "data");
  const dataset::SampleConfig sc{o.history, o.horizon, o.stride, false};
  const auto catalog = dataset::load_catalog(o.data, fs::path(o.data) / dataset::kAnnotationFile, sc);
  const auto manifest = dataset::make_split(catalog.refs(), o.val_ratio, o.seed);
  const fs::path manifest_path = o.out.empty() ? fs::path(o.data) / kManifestFile : fs::path(o.out);
  manifest.save(manifest_path);
  const fs::path stats_dir = o.stats.empty() ? fs::path(o.data) / "stats" : fs::path(o.stats);
  if (!o.no_stats) dataset::write_dataset_stats(stats_dir, catalog, manifest, sc);
  ordered_json j;
  j["command"] = "split";
  j["manifest"] = manifest_path.string();
  j["train_episodes"] = manifest.train.size();
  j["val_episodes"] = manifest.val.size();
  j["skipped_episodes"] = catalog.skipped.size();
  j["split_tv_distance"] = dataset::split_tv_distance(manifest);
  print_json(out, j);
}

struct TrainOptions {
  std::string data;
  std::string manifest;
  std::string run;
  std::string model_config;
  std::string train_config;
  std::vector<std::string> sets;
  std::string variant;
  std::string head;
  std::optional<std::uint64_t> steps;
  std::optional<std::uint64_t> seed;
  int stride = 3;
  int log_every = 0;
};

void train_cmd(const TrainOptions& o, std::ostream& out) {
  check_set_prefixes(o.sets);
  KvConfig mkv = o.model_config.empty() ? model::ModelConfig{}.to_kv()
                                        : (require_file(o.model_config, "model config"),
                                           model::ModelConfig::load(o.model_config).to_kv());
  if (!o.variant.empty()) mkv.set("variant", o.variant);
  if (!o.head.empty()) mkv.set("head", o.head);
  const auto mc = model::ModelConfig::from_kv(apply_overrides(mkv, o.sets, "model."));
  KvConfig tkv = o.train_config.empty() ? train::TrainConfig{}.to_kv()
                                        : (require_file(o.train_config, "train config"),
                                           train::TrainConfig::load(o.train_config).to_kv());
  if (o.steps) tkv.set("max_steps", std::to_string(*o.steps));
  if (o.seed) tkv.set("seed", std::to_string(*o.seed));
  const auto tc = train::TrainConfig::from_kv(apply_overrides(tkv, o.sets, "train."));

  const fs::path manifest = o.manifest.empty() ? fs::path(o.data) / kManifestFile : fs::path(o.manifest);
  const dataset::SampleConfig sc{static_cast<int>(mc.history), static_cast<int>(mc.horizon), o.stride, true};
  const auto ws = open_workspace(o.data, manifest, sc);
  for (const auto& e : ws.catalog.episodes) {
    if (e.image_width != static_cast<int>(mc.image_width) || e.image_height != static_cast<int>(mc.image_height)) {
      throw ConfigError("episode " + e.key() + " is " + std::to_string(e.image_width) + "x" +
                        std::to_string(e.image_height) + " but the model expects " + std::to_string(mc.image_width) +
                        "x" + std::to_string(mc.image_height));
    }
  }
  const auto train_samples = dataset::samples_for(ws.catalog, ws.manifest.train, sc);
  const auto val_samples = dataset::samples_for(ws.catalog, ws.manifest.val, sc);
  if (train_samples.empty()) throw ContractError("train: the training split has no samples");

  fs::create_directories(o.run);
  DataConfig{fs::absolute(o.data), fs::absolute(manifest), o.stride}.to_kv().save(fs::path(o.run) / kDataConfigFile);
  model::SpotModel model(mc, tc.seed);
  train::Trainer trainer(model, dataset::compute_norm_stats(train_samples), tc);
  if (o.log_every > 0) {
    const auto total = tc.total_steps(train_samples.size());
    trainer.on_step([&out, total, every = static_cast<std::uint64_t>(o.log_every)](const train::LogRow& r) {
      if (r.step % every == 0 || r.step == total) {
        out << "step " << r.step << "/" << total << " loss " << r.loss << " lr " << r.lr << '\n' << std::flush;
      }
    });
  }
  const auto result = trainer.fit(train_samples, val_samples, o.run);
  ordered_json j;
  j["command"] = "train";
  j["run"] = o.run;
  j["variant"] = dataset::variant_name(mc.variant);
  j["head"] = model::head_name(mc.head);
  j["parameters"] = model.parameter_count();
  j["train_samples"] = train_samples.size();
  j["val_samples"] = val_samples.size();
  j["steps"] = result.log.size();
  j["final_loss"] = result.log.empty() ? 0.0 : result.log.back().loss;
  print_json(out, j);
}

struct RunInputs {
  train::LoadedModel loaded;
  Workspace ws;
};

RunInputs open_run(const std::string& run, const std::string& checkpoint, const std::string& data,
                   const std::string& manifest, std::optional<int> stride) {
  const fs::path ckpt = checkpoint.empty() ? fs::path(run) / kCheckpointFile : fs::path(checkpoint);
  RunInputs r{train::load_trained_model(ckpt), {}};
  DataConfig dc;
  if (fs::exists(fs::path(run) / kDataConfigFile)) dc = DataConfig::from_kv(KvConfig::load(fs::path(run) / kDataConfigFile));
  const fs::path data_root = !data.empty() ? fs::path(data) : dc.data_root.empty() ? fs::path(default_data_root()) : dc.data_root;
  const fs::path manifest_path = !manifest.empty()        ? fs::path(manifest)
                                 : !dc.manifest.empty() ? dc.manifest
                                                        : data_root / kManifestFile;
  const auto& mc = r.loaded.model->config();
  r.ws = open_workspace(data_root, manifest_path,
                        dataset::SampleConfig{static_cast<int>(mc.history), static_cast<int>(mc.horizon),
                                              stride.value_or(dc.stride), true});
  return r;
}

struct EvalOptions {
  std::string run;
  std::string checkpoint;
  std::string data;
  std::string manifest;
  std::string out;
  std::optional<int> stride;
  unsigned threads = 0;
  std::uint64_t seed = 0;
  std::size_t euler_steps = 10;
  std::size_t ddim_steps = 10;
};

void eval_cmd(const EvalOptions& o, std::ostream& out) {
  auto r = open_run(o.run, o.checkpoint, o.data, o.manifest, o.stride);
  const auto samples = dataset::samples_for(r.ws.catalog, r.ws.manifest.val, r.ws.sample_config);
  const train::InferenceConfig ic{o.euler_steps, o.ddim_steps, o.seed};
  const auto reports = eval::evaluate(*r.loaded.model, r.loaded.norm, samples, ic, o.out.empty() ? o.run : o.out,
                                      o.threads);
  ordered_json j;
  j["command"] = "eval";
  j["summary"] = (fs::path(o.out.empty() ? o.run : o.out) / "eval_metrics/all/summary.json").string();
  j["metrics"] = ordered_json::parse(reports.front().to_json());
  print_json(out, j);
}

struct StitchOptions {
  std::string run;
  std::string checkpoint;
  std::string data;
  std::string manifest;
  std::string out;
  std::vector<std::string> episodes;
  std::optional<int> stride;
  std::uint64_t seed = 0;
};

void stitch_cmd(const StitchOptions& o, std::ostream& out) {
  auto r = open_run(o.run, o.checkpoint, o.data, o.manifest, o.stride);
  std::vector<std::string> keys = o.episodes;
  if (keys.empty()) {
    for (const auto& e : r.ws.manifest.val) keys.push_back(e.key);
  }
  const fs::path dir = o.out.empty() ? fs::path(o.run) / "stitch" : fs::path(o.out);
  const train::InferenceConfig ic{10, 10, o.seed};
  const auto predict = eval::model_predictor(*r.loaded.model, r.loaded.norm, ic)();
  std::string summary = "key,steps,final_error,mean_error\n";
  ordered_json list = ordered_json::array();
  for (const auto& raw_key : keys) {
    const auto key = dataset::parse_key(raw_key).str();
    const auto* rec = r.ws.catalog.find(key);
    if (!rec) throw UsageError("episode not in the catalog: " + key);
    const auto res = eval::stitch_episode(*rec, r.ws.sample_config, predict);
    eval::write_stitch_outputs(dir, res);
    double mean = 0;
    std::size_t n = 0;
    for (const auto& p : res.points) {
      if (p.predicted) {
        mean += p.error;
        ++n;
      }
    }
    mean = n ? mean / static_cast<double>(n) : 0.0;
    char line[256];
    std::snprintf(line, sizeof line, "%s,%zu,%.17g,%.17g\n", key.c_str(), res.points.size(), res.final_error, mean);
    summary += line;
    list.push_back({{"key", key}, {"final_error", res.final_error}, {"mean_error", mean}});
  }
  fs::create_directories(dir);
  write_file_atomic(dir / "summary.csv", summary);
  ordered_json j;
  j["command"] = "stitch";
  j["out"] = dir.string();
  j["episodes"] = list;
  print_json(out, j);
}

struct PlotOptions {
  std::string csv;
  std::string x;
  std::vector<std::string> y;
  std::string out;
  std::string title;
  bool log_y = false;
};

void plot_cmd(const PlotOptions& o, std::ostream& out) {
  require_file(o.csv, "csv");
  const auto table = eval::read_csv(o.csv);
  eval::ChartOptions co;
  co.title = o.title.empty() ? fs::path(o.csv).filename().string() : o.title;
  co.log_y = o.log_y;
  const std::string x = o.x.empty() ? table.header.front() : o.x;
  const fs::path dest = o.out.empty() ? fs::path(o.csv).replace_extension(".svg") : fs::path(o.out);
  write_file_atomic(dest, eval::plot_csv_svg(table, x, o.y, co));
  ordered_json j;
  j["command"] = "plot";
  j["out"] = dest.string();
  print_json(out, j);
}

struct AnnotOptions {
  std::string data;
  std::string annotations;
  std::string out;
  bool serve = false;
  std::string host = "127.0.0.1";
  int port = 8765;
};

void annot_export_cmd(const AnnotOptions& o, std::ostream& out) {
  require_dir(o.data, "data");
  const fs::path ann = o.annotations.empty() ? fs::path(o.data) / dataset::kAnnotationFile : fs::path(o.annotations);
  const fs::path dir = o.out.empty() ? fs::path(o.data) / "annot_export" : fs::path(o.out);
  const auto index = eval::export_annotation_frames(o.data, ann, dir);
  ordered_json j;
  j["command"] = "annot-export";
  j["index"] = (dir / eval::kIndexFile).string();
  j["episodes"] = index.size();
  if (!o.serve) {
    print_json(out, j);
    return;
  }
  eval::AnnotationServer server(dir, ann);
  const int port = server.bind(o.host, o.port);
  j["url"] = "http://" + o.host + ":" + std::to_string(port) + "/";
  print_json(out, j);
  out.flush();
  server.listen();
}

struct ValidateOptions {
  std::string data;
  int history = 4;
  int horizon = 16;
};

bool validate_cmd(const ValidateOptions& o, std::ostream& out) {
  require_dir(o.data, "data");
  const fs::path ann_path = fs::path(o.data) / dataset::kAnnotationFile;
  const auto annotations = fs::exists(ann_path) ? dataset::load_annotations(ann_path) : dataset::AnnotationSet{};
  ordered_json failed = ordered_json::array();
  const auto dirs = pipeline::find_processed_episodes(o.data);
  for (const auto& dir : dirs) {
    std::vector<std::string> reasons;
    std::string key = fs::relative(dir, o.data).generic_string();
    try {
      auto rec = pipeline::read_processed(dir);
      key = rec.key();
      if (const auto it = annotations.records.find(key); it != annotations.records.end()) {
        rec.prompt_object = it->second.object;
        rec.prompt_target = it->second.target;
      }
      reasons = pipeline::validate_episode(rec, o.history, o.horizon).reasons;
    } catch (const Error& e) {
      reasons.push_back(e.what());
    }
    if (!reasons.empty()) failed.push_back({{"key", key}, {"reasons", reasons}});
  }
  ordered_json j;
  j["command"] = "validate";
  j["episodes"] = dirs.size();
  j["failed"] = failed;
  print_json(out, j);
  return failed.empty();
}

void error_record(std::ostream& err, const std::string& kind, const std::string& message, const std::string& command) {
  ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  j["command"] = command;
  err << j.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Prompt-conditioned trajectory toolkit: synthetic data, training, evaluation."};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");
  const std::string data_default = default_data_root();
  const std::string data_help = "Dataset root (default $" + std::string(kDataRootEnv) + " or ./data)";

  GenSynthOptions gen;
  gen.out = data_default;
  auto* c_gen = app.add_subcommand("gen-synth", "Render the synthetic benchmark into the processed layout");
  c_gen->add_option("--out", gen.out, data_help);
  c_gen->add_option("--seed", gen.seed, "Generation seed")->capture_default_str();
  c_gen->add_option("--config", gen.config, "Synthetic world config (key = value)");
  c_gen->add_option("--set", gen.sets, "Override a config key: key=value");
  c_gen->add_option("--mode", gen.mode, "processed or raw")->check(CLI::IsMember({"processed", "raw"}))
      ->capture_default_str();
  c_gen->add_flag("--overwrite", gen.overwrite, "Replace existing episode directories");

  PreprocessOptions pre;
  pre.out = data_default;
  auto* c_pre = app.add_subcommand("preprocess", "Synchronize raw recordings into processed episodes");
  c_pre->add_option("--raw", pre.raw, "Raw recordings root (default <out>/raw)");
  c_pre->add_option("--out", pre.out, data_help);
  c_pre->add_flag("--overwrite", pre.overwrite, "Replace existing episode directories");

  SplitOptions sp;
  sp.data = data_default;
  auto* c_split = app.add_subcommand("split", "Scene-aware task split plus dataset statistics");
  c_split->add_option("--data", sp.data, data_help);
  c_split->add_option("--out", sp.out, "Manifest path (default <data>/split_manifest.json)");
  c_split->add_option("--val-ratio", sp.val_ratio, "Validation episode share per scene")->capture_default_str();
  c_split->add_option("--seed", sp.seed, "Split seed")->capture_default_str();
  c_split->add_option("--stats", sp.stats, "Statistics directory (default <data>/stats)");
  c_split->add_flag("--no-stats", sp.no_stats, "Skip statistics files");
  c_split->add_option("--history", sp.history, "History length K")->capture_default_str();
  c_split->add_option("--horizon", sp.horizon, "Chunk length H")->capture_default_str();
  c_split->add_option("--stride", sp.stride, "Frame subsampling stride")->capture_default_str();

  TrainOptions tr;
  tr.data = data_default;
  std::uint64_t steps = 0, seed = 0;
  auto* c_train = app.add_subcommand("train", "Train a model on the training split");
  c_train->add_option("--data", tr.data, data_help);
  c_train->add_option("--manifest", tr.manifest, "Split manifest (default <data>/split_manifest.json)");
  c_train->add_option("--run", tr.run, "Run directory for logs and checkpoints")->required();
  c_train->add_option("--model-config", tr.model_config, "Model config file (key = value)");
  c_train->add_option("--train-config", tr.train_config, "Training config file (key = value)");
  c_train->add_option("--set", tr.sets, "Override: model.<key>=value or train.<key>=value");
  c_train->add_option("--variant", tr.variant, "none, point, bbox, vision_bbox, vision_bbox_and_bbox");
  c_train->add_option("--head", tr.head, "flow or diffusion");
  auto* o_steps = c_train->add_option("--steps", steps, "Optimizer steps (overrides epochs)");
  auto* o_seed = c_train->add_option("--seed", seed, "Training seed");
  c_train->add_option("--stride", tr.stride, "Frame subsampling stride")->capture_default_str();
  c_train->add_option("--log-every", tr.log_every, "Print progress every N steps");

  EvalOptions ev;
  int ev_stride = 0;
  auto* c_eval = app.add_subcommand("eval", "Evaluate a trained run on the validation split");
  c_eval->add_option("--run", ev.run, "Run directory")->required();
  c_eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint (default <run>/checkpoint.bin)");
  c_eval->add_option("--data", ev.data, "Dataset root (default: the one used for training)");
  c_eval->add_option("--manifest", ev.manifest, "Split manifest (default: the one used for training)");
  c_eval->add_option("--out", ev.out, "Output directory (default <run>)");
  auto* o_ev_stride = c_eval->add_option("--stride", ev_stride, "Frame subsampling stride");
  c_eval->add_option("--threads", ev.threads, "Worker threads, 0 = all cores")->capture_default_str();
  c_eval->add_option("--seed", ev.seed, "Sampling noise seed")->capture_default_str();
  c_eval->add_option("--euler-steps", ev.euler_steps, "Euler steps for flow heads")->capture_default_str();
  c_eval->add_option("--ddim-steps", ev.ddim_steps, "DDIM steps for diffusion heads")->capture_default_str();

  StitchOptions st;
  int st_stride = 0;
  auto* c_stitch = app.add_subcommand("stitch", "Stitch chunk predictions over full validation episodes");
  c_stitch->add_option("--run", st.run, "Run directory")->required();
  c_stitch->add_option("--checkpoint", st.checkpoint, "Checkpoint (default <run>/checkpoint.bin)");
  c_stitch->add_option("--data", st.data, "Dataset root (default: the one used for training)");
  c_stitch->add_option("--manifest", st.manifest, "Split manifest (default: the one used for training)");
  c_stitch->add_option("--out", st.out, "Output directory (default <run>/stitch)");
  c_stitch->add_option("--episode", st.episodes, "Episode key (repeatable; default all validation episodes)");
  auto* o_st_stride = c_stitch->add_option("--stride", st_stride, "Frame subsampling stride");
  c_stitch->add_option("--seed", st.seed, "Sampling noise seed")->capture_default_str();

  PlotOptions pl;
  auto* c_plot = app.add_subcommand("plot", "Render a metric CSV as an SVG line chart");
  c_plot->add_option("--csv", pl.csv, "Input CSV")->required();
  c_plot->add_option("--x", pl.x, "X column (default first column)");
  c_plot->add_option("--y", pl.y, "Y column (repeatable; default all other columns)");
  c_plot->add_option("--out", pl.out, "Output SVG (default next to the CSV)");
  c_plot->add_option("--title", pl.title, "Chart title");
  c_plot->add_flag("--log-y", pl.log_y, "Logarithmic y axis");

  AnnotOptions an;
  an.data = data_default;
  auto* c_annot = app.add_subcommand("annot-export", "Export first frames and the episode index for annotation");
  c_annot->add_option("--data", an.data, data_help);
  c_annot->add_option("--annotations", an.annotations, "Annotation file (default <data>/annotations_merged.json)");
  c_annot->add_option("--out", an.out, "Export directory (default <data>/annot_export)");
  c_annot->add_flag("--serve", an.serve, "Serve the export and accept PUT saves");
  c_annot->add_option("--host", an.host, "Bind address")->capture_default_str();
  c_annot->add_option("--port", an.port, "Port, 0 = any free port")->capture_default_str();

  ValidateOptions va;
  va.data = data_default;
  auto* c_val = app.add_subcommand("validate", "Check every processed episode");
  c_val->add_option("--data", va.data, data_help);
  c_val->add_option("--history", va.history, "History length K")->capture_default_str();
  c_val->add_option("--horizon", va.horizon, "Chunk length H")->capture_default_str();

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  std::string command = args.empty() ? "" : args.front();
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    error_record(err, "usage", e.what(), command);
    err << app.help();
    return kExitUsage;
  }
  const auto* sub = app.get_subcommands().front();
  command = sub->get_name();

  try {
    if (sub == c_gen) {
      gen_synth(gen, out);
    } else if (sub == c_pre) {
      if (pre.raw.empty()) pre.raw = (fs::path(pre.out) / synth::kRawDir).string();
      preprocess(pre, out);
    } else if (sub == c_split) {
      split(sp, out);
    } else if (sub == c_train) {
      if (o_steps->count()) tr.steps = steps;
      if (o_seed->count()) tr.seed = seed;
      train_cmd(tr, out);
    } else if (sub == c_eval) {
      if (o_ev_stride->count()) ev.stride = ev_stride;
      eval_cmd(ev, out);
    } else if (sub == c_stitch) {
      if (o_st_stride->count()) st.stride = st_stride;
      stitch_cmd(st, out);
    } else if (sub == c_plot) {
      plot_cmd(pl, out);
    } else if (sub == c_annot) {
      annot_export_cmd(an, out);
    } else if (sub == c_val) {
      if (!validate_cmd(va, out)) {
        error_record(err, "validation", "one or more episodes failed validation", command);
        return kExitFailure;
      }
    }
  } catch (const UsageError& e) {
    error_record(err, "usage", e.what(), command);
    return kExitUsage;
  } catch (const Error& e) {
    error_record(err, e.kind(), e.what(), command);
    return kExitFailure;
  } catch (const std::exception& e) {
    error_record(err, "internal", e.what(), command);
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace spot::cli
