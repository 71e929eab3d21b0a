#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "o2s/ingestion.hpp"
#include "o2s/scene.hpp"

namespace o2s::synthetic {

// Procedural rooms and object banks for demos, fixtures and benchmarks.
// Objects are box-shaped point shells resting on the floor or on supporters.

struct RoomOptions {
  std::size_t target_points = 50000;
  double width = 7.0;   // x extent, metres
  double depth = 6.0;   // y extent, metres
  int ground_objects = 7;
  int supported_objects = 3;
  double expression_probability = 0.5;  // chance a seen object gets a referring expression
};

/// Uses the categories of `split` (ScanNet-20 style sizes for known names).
Scene make_room(const std::string& scene_id, const BenchmarkSplit& split, std::uint64_t seed,
                const RoomOptions& options = {});

/// Points sampled uniformly over the five visible faces of a box (no bottom).
PointCloud box_shell(const Box3& box, std::size_t count, RandomStream& rng);

struct BankOptions {
  int assets_per_category = 3;
  std::size_t points_per_asset = 2000;
  std::vector<std::string> sources = {"shapenet", "omniobject3d"};
};

AssetBank make_bank(const std::vector<std::string>& categories, std::uint64_t seed, const BankOptions& options = {});

/// Typical (x, y, z) size of a category in metres.
Vec3 typical_size(const std::string& category);

}  // namespace o2s::synthetic
