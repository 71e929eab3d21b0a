#pragma once

#include <optional>
#include <string>

#include "o2s/ingestion.hpp"
#include "o2s/scene.hpp"

namespace o2s::catalog {

/// 10 seen / 10 unseen ScanNet categories, with default roles and a
/// similar-category mapping for the unseen classes.
BenchmarkSplit ov_scannet20();
/// 10 seen / 10 unseen SUN RGB-D categories, same extras.
BenchmarkSplit ov_sunrgbd20();

/// Support role for common indoor categories, nullopt when not catalogued.
std::optional<SupportRole> default_role(const std::string& category);

}  // namespace o2s::catalog
