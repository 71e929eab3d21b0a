#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "o2s/ingestion.hpp"
#include "o2s/insertion.hpp"
#include "o2s/prompts.hpp"

namespace o2s {

struct RunConfig {
  std::uint64_t global_seed = 0;
  int inserts_per_scene = 3;
  InsertionConfig insertion;
  PromptConfig prompts;
  std::size_t workers = 0;  // 0 = hardware concurrency
  bool write_scenes = true;

  void validate() const;
};

struct SceneJobResult {
  std::string scene_id;
  std::vector<std::string> sample_lines;
  std::size_t insertions = 0;
  int placement_failures = 0;
  PromptStats prompt_stats;
  std::string error;  // empty on success
};

struct AugmentSummary {
  std::size_t scenes = 0;
  std::size_t failed_scenes = 0;
  std::size_t insertions = 0;
  std::size_t samples = 0;
  std::size_t non_unique_discarded = 0;
  std::size_t placement_failures = 0;
  std::vector<std::string> errors;
};

/// Augments one scene and builds its prompts with a stream derived from
/// (global seed, scene id). Never throws for per-scene failures; they are
/// reported in the result.
SceneJobResult run_scene_job(const Scene& scene, const AssetBank& bank, const CategoryTable& table,
                             const BenchmarkSplit& split, const RunConfig& cfg,
                             const std::filesystem::path& scene_out = {});

/// Reads every scene in `scenes_dir`, fans the jobs out to a worker pool and
/// writes `<out_dir>/samples.jsonl` (scene-id order) plus augmented scenes
/// under `<out_dir>/scenes/`.
AugmentSummary run_augment(const std::filesystem::path& scenes_dir, const AssetBank& bank,
                           const CategoryTable& table, const BenchmarkSplit& split, const RunConfig& cfg,
                           const std::filesystem::path& out_dir);

/// Scans `<dir>/<source>/<category>/<name>.{ply,xyz}` into a canonical bank.
/// Underscores in category directory names become spaces.
AssetBank ingest_assets(const std::filesystem::path& assets_dir, const std::string& up_axis = "z");

}  // namespace o2s
