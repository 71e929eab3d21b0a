// o2s: command-line driver for scene augmentation, prompt generation,
// detection evaluation and loss numerics.

#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "o2s/catalog.hpp"
#include "o2s/error.hpp"
#include "o2s/eval.hpp"
#include "o2s/io.hpp"
#include "o2s/losses.hpp"
#include "o2s/pipeline.hpp"
#include "o2s/synthetic.hpp"

namespace fs = std::filesystem;
using o2s::io::Json;

namespace {

// A split argument is either a split file or a built-in name.
o2s::BenchmarkSplit load_split(const std::string& arg) {
  if (arg == "ov-scannet20" && !fs::exists(arg)) return o2s::catalog::ov_scannet20();
  if (arg == "ov-sunrgbd20" && !fs::exists(arg)) return o2s::catalog::ov_sunrgbd20();
  return o2s::io::read_split(arg);
}

void emit(const Json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    o2s::io::write_text_file(out_path, j.dump(2) + "\n");
  }
}

int report_error(const std::string& code, const std::string& message, const std::vector<std::string>& details = {}) {
  Json j;
  j["error"] = code;
  j["message"] = message;
  if (!details.empty()) j["details"] = details;
  std::cerr << j.dump(2) << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Object insertion, grounding prompts and open-vocabulary 3D detection tooling"};
  app.require_subcommand(1);

  // ingest
  std::string assets_dir, manifest_out, up_axis = "z";
  auto* ingest = app.add_subcommand("ingest", "Build an asset-bank manifest from <source>/<category>/<file> trees");
  ingest->add_option("assets_dir", assets_dir)->required()->check(CLI::ExistingDirectory);
  ingest->add_option("out_manifest", manifest_out)->required();
  ingest->add_option("--up-axis", up_axis, "Up axis of the source files")->check(CLI::IsMember({"z", "y"}));

  // stats
  std::string scenes_dir, split_arg, table_out;
  auto* stats = app.add_subcommand("stats", "Per-category average sizes and point counts");
  stats->add_option("scenes_dir", scenes_dir)->required()->check(CLI::ExistingDirectory);
  stats->add_option("out_table", table_out)->required();
  stats->add_option("--split", split_arg, "Split file or ov-scannet20 / ov-sunrgbd20")->required();

  // augment
  o2s::RunConfig run;
  std::string bank_path, table_path, out_dir, prompt_mode = "relative";
  std::uint64_t seed = 0;
  auto* augment = app.add_subcommand("augment", "Insert objects into scenes and emit grounding samples");
  augment->add_option("scenes_dir", scenes_dir)->required()->check(CLI::ExistingDirectory);
  augment->add_option("--bank", bank_path, "Asset manifest")->required()->check(CLI::ExistingFile);
  augment->add_option("--table", table_path, "Category table from `stats`")->required()->check(CLI::ExistingFile);
  augment->add_option("--split", split_arg)->required();
  augment->add_option("--out", out_dir, "Output directory")->required();
  augment->add_option("--seed", seed, "Global seed")->required();
  augment->add_option("--k", run.inserts_per_scene, "Insertions per scene")->check(CLI::PositiveNumber);
  augment->add_option("--region", run.insertion.region_half_extent, "Half extent of the insertion region (m)")
      ->check(CLI::PositiveNumber);
  augment->add_option("--cell-size", run.insertion.cell_size, "Height-map cell size (m)")->check(CLI::PositiveNumber);
  augment->add_option("--max-tries", run.insertion.max_tries, "Placement candidates per attempt")
      ->check(CLI::PositiveNumber);
  augment->add_option("--prompt-mode", prompt_mode)->check(CLI::IsMember({"detection", "absolute", "relative"}));
  augment->add_option("--workers", run.workers, "Worker threads (0 = all cores)");
  augment->add_flag("!--no-target-augment", run.insertion.augment_targets, "Skip rotation/drop/jitter of targets");
  augment->add_flag("!--fixed-heading", run.insertion.random_heading, "Insert with heading 0");

  // prompts
  std::string scene_path, out_path, mode = "relative";
  auto* prompts = app.add_subcommand("prompts", "Regenerate prompts for an augmented scene");
  prompts->add_option("scene", scene_path)->required()->check(CLI::ExistingFile);
  prompts->add_option("--mode", mode)->check(CLI::IsMember({"detection", "absolute", "relative"}));
  prompts->add_option("--split", split_arg)->required();
  prompts->add_option("--seed", seed);
  prompts->add_option("--out", out_path);

  // eval
  std::string pred_file, gt_file, iou_mode = "aabb", interp = "all";
  double iou_threshold = o2s::kDefaultIouThreshold;
  auto* eval = app.add_subcommand("eval", "AP per category and mAP over unseen categories");
  eval->add_option("pred_file", pred_file)->required()->check(CLI::ExistingFile);
  eval->add_option("gt_file", gt_file)->required()->check(CLI::ExistingFile);
  eval->add_option("--split", split_arg)->required();
  eval->add_option("--iou", iou_threshold)->check(CLI::Range(1e-9, 1.0));
  eval->add_option("--iou-mode", iou_mode)->check(CLI::IsMember({"aabb", "oriented"}));
  eval->add_option("--interp", interp)->check(CLI::IsMember({"all", "eleven"}));
  eval->add_option("--out", out_path);

  // loss
  std::string batch_file, no_positive = "exclude";
  double tau = 0.0;
  bool grad_check = false;
  auto* loss = app.add_subcommand("loss", "Evaluate contrastive, alignment and localization losses");
  loss->add_option("batch_file", batch_file)->required()->check(CLI::ExistingFile);
  loss->add_option("--tau", tau, "Override the contrastive temperature")->check(CLI::PositiveNumber);
  loss->add_option("--no-positive", no_positive)->check(CLI::IsMember({"exclude", "zero"}));
  loss->add_flag("--grad-check", grad_check, "Compare the analytic gradient with central differences");

  // split200
  std::string freq_file;
  auto* split200 = app.add_subcommand("split200", "Head/common/tail split of 200 categories by frequency");
  split200->add_option("freq_file", freq_file)->required()->check(CLI::ExistingFile);
  split200->add_option("--out", out_path);

  // synth
  int n_scenes = 10;
  std::size_t n_points = 50000;
  auto* synth = app.add_subcommand("synth", "Write procedural rooms and an object-file tree for demos");
  synth->add_option("out_dir", out_dir)->required();
  synth->add_option("--scenes", n_scenes)->check(CLI::PositiveNumber);
  synth->add_option("--points", n_points)->check(CLI::PositiveNumber);
  synth->add_option("--seed", seed);
  synth->add_option("--split", split_arg)->default_val("ov-scannet20");

  // export-ply
  auto* export_ply = app.add_subcommand("export-ply", "Write a scene's points as ASCII PLY");
  export_ply->add_option("scene", scene_path)->required()->check(CLI::ExistingFile);
  export_ply->add_option("out", out_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      const o2s::AssetBank bank = o2s::ingest_assets(assets_dir, up_axis);
      o2s::io::write_asset_bank(bank, manifest_out);
      Json j;
      j["assets"] = bank.assets().size();
      j["categories"] = bank.by_category().size();
      j["sources"] = bank.sources().size();
      emit(j, "");
    } else if (*stats) {
      const auto split = load_split(split_arg);
      const auto table = o2s::compute_category_stats(o2s::load_scenes(scenes_dir), split);
      emit(o2s::io::to_json(table), table_out);
    } else if (*augment) {
      run.global_seed = seed;
      run.prompts.mode = o2s::parse_prompt_type(prompt_mode);
      const auto bank = o2s::load_asset_bank(bank_path);
      const auto table = o2s::io::read_category_table(table_path);
      const auto split = load_split(split_arg);
      const auto summary = o2s::run_augment(scenes_dir, bank, table, split, run, out_dir);
      Json j;
      j["scenes"] = summary.scenes;
      j["failed_scenes"] = summary.failed_scenes;
      j["insertions"] = summary.insertions;
      j["samples"] = summary.samples;
      j["non_unique_discarded"] = summary.non_unique_discarded;
      j["placement_failures"] = summary.placement_failures;
      j["errors"] = summary.errors;
      emit(j, "");
      if (summary.samples == 0) return report_error("AugmentationFailed", "no samples produced", summary.errors);
    } else if (*prompts) {
      const auto doc = o2s::io::read_scene_document(scene_path);
      const auto split = load_split(split_arg);
      o2s::PromptConfig cfg;
      cfg.mode = o2s::parse_prompt_type(mode);
      auto rng = o2s::RandomStream::for_scene(seed, doc.scene.scene_id);
      const auto samples = o2s::generate_samples(doc.scene, doc.insertions, split, cfg, rng);
      std::string lines;
      for (const auto& s : samples) lines += o2s::io::to_json_line(s) + "\n";
      if (out_path.empty()) {
        std::cout << lines;
      } else {
        o2s::io::write_text_file(out_path, lines);
      }
    } else if (*eval) {
      o2s::EvalOptions opts;
      opts.iou_threshold = iou_threshold;
      opts.iou_mode = iou_mode == "aabb" ? o2s::IouMode::AxisAligned : o2s::IouMode::Oriented;
      opts.interp = interp == "all" ? o2s::Interpolation::AllPoint : o2s::Interpolation::ElevenPoint;
      const auto report = o2s::evaluate(o2s::io::read_detections(pred_file), o2s::io::read_ground_truth(gt_file),
                                        load_split(split_arg), opts);
      emit(o2s::io::to_json(report), out_path);
    } else if (*loss) {
      auto batch = o2s::io::read_loss_batch(batch_file);
      const auto policy = no_positive == "exclude" ? o2s::NoPositivePolicy::Exclude : o2s::NoPositivePolicy::CountAsZero;
      Json j;
      if (batch.contrastive) {
        if (tau > 0.0) batch.contrastive->temperature = tau;
        j["contrastive"] = o2s::contrastive_loss(*batch.contrastive, policy);
        if (grad_check) j["contrastive_grad_max_rel_error"] = o2s::contrastive_grad_check(*batch.contrastive, 1e-5, 1e-8, policy);
      }
      if (batch.alignment) j["alignment"] = o2s::alignment_loss(*batch.alignment);
      if (batch.localization) j["localization"] = o2s::localization_loss(*batch.localization, batch.weights);
      emit(j, "");
    } else if (*split200) {
      const Json f = o2s::io::read_json_file(freq_file);
      std::vector<std::pair<std::string, long>> freqs;
      for (const auto& e : f.at("frequencies")) freqs.emplace_back(e.at(0).get<std::string>(), e.at(1).get<long>());
      const auto s = o2s::scannet200_split(freqs);
      Json j;
      j["head"] = s.head;
      j["common"] = s.common;
      j["tail"] = s.tail;
      j["split"] = o2s::io::to_json(s.as_benchmark());
      emit(j, out_path);
    } else if (*synth) {
      const auto split = load_split(split_arg);
      const fs::path root(out_dir);
      o2s::synthetic::RoomOptions room;
      room.target_points = n_points;
      for (int i = 0; i < n_scenes; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "scene%04d", i);
        o2s::io::write_scene_document({o2s::synthetic::make_room(id, split, seed, room), {}},
                                      root / "scenes" / (std::string(id) + ".json"));
      }
      std::vector<std::string> cats = split.seen;
      cats.insert(cats.end(), split.unseen.begin(), split.unseen.end());
      const auto bank = o2s::synthetic::make_bank(cats, seed);
      for (const auto& a : bank.assets()) {
        std::string category = a.category();
        std::replace(category.begin(), category.end(), ' ', '_');
        const fs::path file = root / "objects" / a.source() / category /
                              (fs::path(a.asset_id()).filename().string() + ".ply");
        fs::create_directories(file.parent_path());
        o2s::io::write_ply_ascii(file, a.cloud());
      }
      o2s::io::write_text_file(root / "split.json", o2s::io::to_json(split).dump(2) + "\n");
      Json j;
      j["scenes"] = n_scenes;
      j["assets"] = bank.assets().size();
      emit(j, "");
    } else if (*export_ply) {
      o2s::io::write_ply_ascii(out_path, o2s::io::read_scene_document(scene_path).scene.cloud);
    }
  } catch (const o2s::Error& e) {
    return report_error(std::string(o2s::to_string(e.code())), e.what(), e.details());
  } catch (const std::exception& e) {
    return report_error("Internal", e.what());
  }
  return 0;
}
