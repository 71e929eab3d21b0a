#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "o2s/eval.hpp"
#include "o2s/ingestion.hpp"
#include "o2s/insertion.hpp"
#include "o2s/losses.hpp"
#include "o2s/prompts.hpp"

namespace o2s::io {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

// ---- primitives -----------------------------------------------------------

Json to_json(const Box3& box);
Box3 box_from_json(const Json& j, const std::string& context);

/// Little-endian float32 (or float64) xyz triples.
enum class PointDType { F32, F64 };
void write_points_binary(const std::filesystem::path& path, const std::vector<Vec3>& points,
                         PointDType dtype = PointDType::F32);
std::vector<Vec3> read_points_binary(const std::filesystem::path& path, std::size_t count,
                                     PointDType dtype = PointDType::F32);

/// ASCII and binary_little_endian PLY with x/y/z and optional red/green/blue.
PointCloud read_ply(const std::filesystem::path& path);
void write_ply_ascii(const std::filesystem::path& path, const PointCloud& cloud);
/// Whitespace-separated "x y z" per line; extra columns ignored.
PointCloud read_xyz(const std::filesystem::path& path);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

// ---- scenes ---------------------------------------------------------------

/// A scene plus the insertion records that produced it (empty for scans).
struct SceneDocument {
  Scene scene;
  std::vector<InsertionRecord> insertions;
};

/// Reads a scene document; point payloads resolve relative to the file.
/// Roles missing from annotations fall back to the built-in catalog.
SceneDocument read_scene_document(const std::filesystem::path& path);
/// Writes `<path>` and, for binary payloads, `<path stem>.bin` beside it.
void write_scene_document(const SceneDocument& doc, const std::filesystem::path& path, bool binary_points = true);
/// Scene JSON files in a directory, sorted by file name.
std::vector<std::filesystem::path> list_scene_files(const std::filesystem::path& dir);

Json to_json(const ObjectAnnotation& o);
ObjectAnnotation annotation_from_json(const Json& j, const std::string& context);
Json to_json(const InsertionRecord& r);

// ---- assets, tables, splits -----------------------------------------------

/// Writes the manifest and one float64 point file per asset under `<manifest dir>/assets/`.
void write_asset_bank(const AssetBank& bank, const std::filesystem::path& manifest_path);

Json to_json(const CategoryTable& table);
CategoryTable table_from_json(const Json& j, const std::string& context);
CategoryTable read_category_table(const std::filesystem::path& path);

Json to_json(const BenchmarkSplit& split);
BenchmarkSplit split_from_json(const Json& j, const std::string& context);
BenchmarkSplit read_split(const std::filesystem::path& path);

// ---- samples --------------------------------------------------------------

Json to_json(const GroundingSample& s);
/// One compact JSON object, no trailing newline.
std::string to_json_line(const GroundingSample& s);
GroundingSample sample_from_json(const Json& j, const std::string& context);
/// Schema and internal-consistency check; returns the first problem found.
std::optional<std::string> validate_sample_json(const Json& j);

// ---- evaluation and losses ------------------------------------------------

std::vector<Detection> read_detections(const std::filesystem::path& path);
std::vector<GroundTruth> read_ground_truth(const std::filesystem::path& path);
Json to_json(const EvalReport& report);

struct LossBatchFile {
  std::optional<FeatureBatch> contrastive;
  std::optional<AlignmentBatch> alignment;
  std::optional<BoxRegressionBatch> localization;
  LocalizationWeights weights;
};
LossBatchFile read_loss_batch(const std::filesystem::path& path);

}  // namespace o2s::io
