#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "o2s/geometry.hpp"
#include "o2s/ingestion.hpp"
#include "o2s/insertion.hpp"
#include "o2s/random.hpp"
#include "o2s/scene.hpp"

namespace o2s {

enum class RelationFamily { VerticalProximity, HorizontalProximity, Allocentric };

enum class Relation { On, NextTo, CloseTo, LeftOf, RightOf, InFrontOf, Behind };

RelationFamily family(Relation rel);
/// Surface phrase used inside prompts ("on", "next to", "to the left of", ...).
std::string_view phrase(Relation rel);
std::string_view to_string(Relation rel);
Relation parse_relation(std::string_view text);

struct RelationThresholds {
  double on_epsilon = 0.03;    // target bottom vs anchor top
  double near_distance = 1.5;  // planar center distance
};

/// Anchor frame: front = +x after applying the anchor yaw, left = +y.
Relation classify_relation(const Box3& target_box, const Box3& anchor_box, bool anchor_heading_known,
                           const RelationThresholds& thresholds = {});

/// "the <target> that is <relation> the <anchor>"
std::string spatial_prompt(std::string_view target_class, Relation rel, std::string_view anchor_class);

struct Token {
  std::string text;   // lowercased
  std::size_t begin;  // byte offsets into the source text, [begin, end)
  std::size_t end;
  friend bool operator==(const Token&, const Token&) = default;
};

/// Lowercases, splits on whitespace and strips leading/trailing punctuation
/// (internal hyphens and apostrophes survive). Throws EmptyInput when no
/// token remains.
std::vector<Token> tokenize(std::string_view text);

/// Last word of a (possibly multi-word) category, lowercased.
std::string head_noun(std::string_view category);

/// Parses "the <class> that is <relation> <anchor phrase>" into an
/// expression whose main span covers <class>. Throws InvalidExpression.
AnchorExpression parse_template_expression(std::string_view text);

/// Checks main_span bounds and that it contains the main category's head noun.
void validate_expression(const AnchorExpression& expr);

struct ComposedPrompt {
  std::string text;
  TokenSpan target_span;
};

/// Puts the target in front of the anchor's referring expression so the
/// anchor's main object becomes the auxiliary object. Throws InvalidExpression.
ComposedPrompt relative_location_prompt(std::string_view target_class, Relation rel,
                                        const AnchorExpression& anchor_expr);

struct LocationBands {
  double center_below = 0.4;
  double corner_above = 0.6;
};

/// 0 at the room center, 1 at a corner of the scene bounds footprint.
double room_radius(const Box3& target_box, const Box3& scene_bounds);
ComposedPrompt absolute_location_prompt(std::string_view target_class, const Box3& target_box,
                                        const Box3& scene_bounds, const LocationBands& bands = {});

struct DetectionPrompt {
  std::string text;
  std::vector<TokenSpan> spans;  // one per category, in input order
};

/// "bed. chair. sofa." Throws EmptyInput or InvalidConfig (duplicates).
DetectionPrompt detection_prompt(const std::vector<std::string>& categories);

/// True iff exactly one object of the target's category stands in `rel`
/// to the anchor. Throws NotFound for unknown ids.
bool verify_unique(const Scene& scene, const std::string& target_id, Relation rel, const std::string& anchor_id,
                   const RelationThresholds& thresholds = {});

/// Binary matrix, rows = targets, columns = tokens.
struct AlignmentTarget {
  std::size_t cols = 0;
  std::vector<std::vector<std::uint8_t>> rows;

  std::string row_string(std::size_t r) const;
  friend bool operator==(const AlignmentTarget&, const AlignmentTarget&) = default;
};

/// Row r has ones exactly on spans[r]. Identical spans may repeat (several
/// instances grounded by one phrase); partially overlapping spans throw
/// AmbiguousSpans and out-of-range spans throw InvalidConfig.
AlignmentTarget alignment_target(std::size_t token_count, const std::vector<TokenSpan>& spans);

enum class PromptType { Detection, AbsoluteLocation, RelativeLocation };
std::string_view to_string(PromptType t);
PromptType parse_prompt_type(std::string_view text);

struct SampleTarget {
  std::string instance_id;
  Box3 box;
  TokenSpan token_span;
  friend bool operator==(const SampleTarget&, const SampleTarget&) = default;
};

struct GroundingSample {
  std::string scene_id;
  std::string prompt;
  PromptType prompt_type = PromptType::Detection;
  std::vector<Token> tokens;
  std::vector<SampleTarget> targets;
  AlignmentTarget alignment;
  friend bool operator==(const GroundingSample&, const GroundingSample&) = default;
};

struct PromptConfig {
  PromptType mode = PromptType::RelativeLocation;
  RelationThresholds thresholds;
  LocationBands bands;
  std::size_t max_detection_categories = 20;
};

struct PromptStats {
  std::size_t emitted = 0;
  std::size_t non_unique = 0;
  std::size_t skipped = 0;
};

/// Prompts for an augmented scene: one per insertion record (relative and
/// absolute modes) or one per scene (detection mode). Relative samples that
/// fail verify_unique are dropped and counted.
std::vector<GroundingSample> generate_samples(const Scene& scene, const std::vector<InsertionRecord>& records,
                                              const BenchmarkSplit& split, const PromptConfig& cfg,
                                              RandomStream& rng, PromptStats* stats = nullptr);

}  // namespace o2s
