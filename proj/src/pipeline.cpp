#include "o2s/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "o2s/error.hpp"
#include "o2s/io.hpp"

namespace o2s {
namespace fs = std::filesystem;

void RunConfig::validate() const {
  if (inserts_per_scene < 1) throw Error(ErrorCode::InvalidConfig, "inserts per scene must be at least 1");
  insertion.validate();
}

SceneJobResult run_scene_job(const Scene& scene, const AssetBank& bank, const CategoryTable& table,
                             const BenchmarkSplit& split, const RunConfig& cfg, const fs::path& scene_out) {
  SceneJobResult result;
  result.scene_id = scene.scene_id;
  RandomStream rng = RandomStream::for_scene(cfg.global_seed, scene.scene_id);
  try {
    AugmentResult aug = augment_scene(scene, bank, table, split, cfg.insertion, cfg.inserts_per_scene, rng);
    result.insertions = aug.records.size();
    result.placement_failures = aug.failed_attempts;
    const auto samples = generate_samples(aug.scene, aug.records, split, cfg.prompts, rng, &result.prompt_stats);
    result.sample_lines.reserve(samples.size());
    for (const auto& s : samples) result.sample_lines.push_back(io::to_json_line(s));
    if (cfg.write_scenes && !scene_out.empty()) {
      io::write_scene_document({std::move(aug.scene), std::move(aug.records)}, scene_out);
    }
  } catch (const Error& e) {
    result.error = e.what();
  }
  return result;
}

AugmentSummary run_augment(const fs::path& scenes_dir, const AssetBank& bank, const CategoryTable& table,
                           const BenchmarkSplit& split, const RunConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  const auto files = io::list_scene_files(scenes_dir);
  fs::create_directories(out_dir / "scenes");

  std::vector<SceneJobResult> results(files.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) {
      try {
        const io::SceneDocument doc = io::read_scene_document(files[i]);
        results[i] = run_scene_job(doc.scene, bank, table, split, cfg, out_dir / "scenes" / files[i].filename());
      } catch (const Error& e) {
        results[i].scene_id = files[i].stem().string();
        results[i].error = e.what();
      }
    }
  };
  std::size_t n_workers = cfg.workers != 0 ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
  n_workers = std::min(n_workers, std::max<std::size_t>(1, files.size()));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  std::stable_sort(results.begin(), results.end(),
                   [](const SceneJobResult& a, const SceneJobResult& b) { return a.scene_id < b.scene_id; });
  AugmentSummary summary;
  std::string lines;
  for (const auto& r : results) {
    ++summary.scenes;
    summary.insertions += r.insertions;
    summary.placement_failures += static_cast<std::size_t>(r.placement_failures);
    summary.non_unique_discarded += r.prompt_stats.non_unique;
    if (!r.error.empty()) {
      ++summary.failed_scenes;
      summary.errors.push_back(r.scene_id + ": " + r.error);
    }
    for (const auto& l : r.sample_lines) {
      lines += l;
      lines += '\n';
      ++summary.samples;
    }
  }
  io::write_text_file(out_dir / "samples.jsonl", lines);
  return summary;
}

AssetBank ingest_assets(const fs::path& assets_dir, const std::string& up_axis) {
  if (!fs::is_directory(assets_dir)) throw Error(ErrorCode::ParseError, assets_dir.string() + ": not a directory");
  if (up_axis != "z" && up_axis != "y") throw Error(ErrorCode::InvalidConfig, "up axis must be 'z' or 'y'");
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(assets_dir)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".ply" || ext == ".xyz")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<ObjectAsset> assets;
  for (const auto& f : files) {
    const fs::path rel = fs::relative(f, assets_dir);
    std::vector<std::string> parts;
    for (const auto& p : rel) parts.push_back(p.string());
    if (parts.size() != 3) {
      throw Error(ErrorCode::ParseError, f.string() + ": expected <source>/<category>/<file>");
    }
    std::string category = parts[1];
    std::replace(category.begin(), category.end(), '_', ' ');
    PointCloud cloud = f.extension() == ".ply" ? io::read_ply(f) : io::read_xyz(f);
    if (cloud.empty()) throw Error(ErrorCode::ParseError, f.string() + ": no points");
    if (up_axis == "y") {
      for (auto& p : cloud.points) p = {p.x, -p.z, p.y};
    }
    const std::string id = parts[0] + "/" + parts[1] + "/" + rel.stem().string();
    assets.emplace_back(id, category, parts[0], center_at_centroid(std::move(cloud)));
  }
  return AssetBank(std::move(assets));
}

}  // namespace o2s
