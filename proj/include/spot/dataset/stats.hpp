#pragma once

#include <filesystem>

#include "spot/dataset/catalog.hpp"

namespace spot::dataset {

// summary.json, episode_stats.csv, count_stats.csv, prompt_stats.csv,
// image_stats.csv, outliers_train.csv, outliers_val.csv.
void write_dataset_stats(const std::filesystem::path& out_dir, const Catalog& catalog, const SplitManifest& manifest,
                         const SampleConfig& config, int outlier_rows = 20);

}  // namespace spot::dataset
