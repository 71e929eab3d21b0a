#include "o2s/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>

#include "o2s/error.hpp"

namespace o2s {
namespace {

bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::size_t token_count(std::string_view s) {
  std::size_t n = 0;
  for (const auto& w : words(s)) {
    if (std::any_of(w.begin(), w.end(), [](char c) { return !is_punct(c); })) ++n;
  }
  return n;
}

std::string article_for(std::string_view noun) {
  if (!noun.empty() && std::string_view("aeiouAEIOU").find(noun.front()) != std::string_view::npos) return "an";
  return "a";
}

bool is_determiner(const std::string& t) { return t == "a" || t == "an" || t == "the"; }

SampleTarget head_target(const ObjectAnnotation& o, TokenSpan span) { return {o.instance_id, o.box, span}; }

GroundingSample finish_sample(const std::string& scene_id, std::string prompt, PromptType type,
                              std::vector<SampleTarget> targets) {
  GroundingSample s;
  s.scene_id = scene_id;
  s.prompt = std::move(prompt);
  s.prompt_type = type;
  s.tokens = tokenize(s.prompt);
  s.targets = std::move(targets);
  std::vector<TokenSpan> spans;
  spans.reserve(s.targets.size());
  for (const auto& t : s.targets) spans.push_back(t.token_span);
  s.alignment = alignment_target(s.tokens.size(), spans);
  return s;
}

}  // namespace

RelationFamily family(Relation rel) {
  switch (rel) {
    case Relation::On: return RelationFamily::VerticalProximity;
    case Relation::NextTo:
    case Relation::CloseTo: return RelationFamily::HorizontalProximity;
    default: return RelationFamily::Allocentric;
  }
}

std::string_view phrase(Relation rel) {
  switch (rel) {
    case Relation::On: return "on";
    case Relation::NextTo: return "next to";
    case Relation::CloseTo: return "close to";
    case Relation::LeftOf: return "to the left of";
    case Relation::RightOf: return "to the right of";
    case Relation::InFrontOf: return "in front of";
    case Relation::Behind: return "behind";
  }
  return "next to";
}

std::string_view to_string(Relation rel) {
  switch (rel) {
    case Relation::On: return "on";
    case Relation::NextTo: return "next_to";
    case Relation::CloseTo: return "close_to";
    case Relation::LeftOf: return "left_of";
    case Relation::RightOf: return "right_of";
    case Relation::InFrontOf: return "in_front_of";
    case Relation::Behind: return "behind";
  }
  return "next_to";
}

Relation parse_relation(std::string_view text) {
  for (Relation r : {Relation::On, Relation::NextTo, Relation::CloseTo, Relation::LeftOf, Relation::RightOf,
                     Relation::InFrontOf, Relation::Behind}) {
    if (text == to_string(r) || text == phrase(r)) return r;
  }
  throw Error(ErrorCode::ParseError, "unknown relation '" + std::string(text) + "'");
}

Relation classify_relation(const Box3& target_box, const Box3& anchor_box, bool anchor_heading_known,
                           const RelationThresholds& thresholds) {
  const Vec3& tc = target_box.center();
  if (std::abs(target_box.bottom() - anchor_box.top()) <= thresholds.on_epsilon &&
      anchor_box.footprint_contains(tc.x, tc.y)) {
    return Relation::On;
  }
  const double dx = tc.x - anchor_box.center().x;
  const double dy = tc.y - anchor_box.center().y;
  if (std::hypot(dx, dy) > thresholds.near_distance) return Relation::CloseTo;
  if (!anchor_heading_known) return Relation::NextTo;

  const Vec2 local = rotate({dx, dy}, -anchor_box.heading());
  const double az = std::atan2(local.y, local.x);
  constexpr double q = std::numbers::pi / 4.0;
  if (std::abs(az) <= q) return Relation::InFrontOf;
  if (az > q && az < 3.0 * q) return Relation::LeftOf;
  if (az < -q && az > -3.0 * q) return Relation::RightOf;
  return Relation::Behind;
}

std::string spatial_prompt(std::string_view target_class, Relation rel, std::string_view anchor_class) {
  std::string out = "the ";
  out += target_class;
  out += " that is ";
  out += phrase(rel);
  out += " the ";
  out += anchor_class;
  return out;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    std::size_t b = i;
    std::size_t e = j;
    while (b < e && is_punct(text[b])) ++b;
    while (e > b && is_punct(text[e - 1])) --e;
    if (e > b) out.push_back({lower(text.substr(b, e - b)), b, e});
    i = j;
  }
  if (out.empty()) throw Error(ErrorCode::EmptyInput, "text has no tokens");
  return out;
}

std::string head_noun(std::string_view category) {
  const auto w = words(category);
  if (w.empty()) throw Error(ErrorCode::EmptyInput, "empty category name");
  return lower(w.back());
}

void validate_expression(const AnchorExpression& expr) {
  const auto tokens = tokenize(expr.text);
  if (expr.main_span.first > expr.main_span.last || expr.main_span.last >= tokens.size()) {
    throw Error(ErrorCode::InvalidExpression, "main span out of range in '" + expr.text + "'");
  }
  const std::string head = head_noun(expr.main_category);
  for (std::size_t i = expr.main_span.first; i <= expr.main_span.last; ++i) {
    if (tokens[i].text == head) return;
  }
  throw Error(ErrorCode::InvalidExpression,
              "main span of '" + expr.text + "' does not contain '" + head + "'");
}

AnchorExpression parse_template_expression(std::string_view text) {
  const auto tokens = tokenize(text);
  std::size_t that = 0;
  for (std::size_t i = 2; i + 1 < tokens.size(); ++i) {
    if (tokens[i].text == "that" && tokens[i + 1].text == "is") {
      that = i;
      break;
    }
  }
  // Need "the", at least one class word, "that is", and a relation/anchor tail.
  if (tokens.size() < 5 || tokens[0].text != "the" || that == 0 || that + 2 >= tokens.size()) {
    throw Error(ErrorCode::InvalidExpression,
                "'" + std::string(text) + "' has no parse fields and does not match 'the <class> that is ...'");
  }
  AnchorExpression expr;
  expr.text = std::string(text);
  expr.main_span = {1, that - 1};
  for (std::size_t i = 1; i < that; ++i) {
    if (i > 1) expr.main_category += ' ';
    expr.main_category += tokens[i].text;
  }
  return expr;
}

ComposedPrompt relative_location_prompt(std::string_view target_class, Relation rel,
                                        const AnchorExpression& anchor_expr) {
  validate_expression(anchor_expr);
  if (words(target_class).empty()) throw Error(ErrorCode::EmptyInput, "empty target class");
  const auto tokens = tokenize(anchor_expr.text);

  // Start of the main noun phrase: nearest determiner within a short modifier window.
  std::size_t start = anchor_expr.main_span.first;
  for (std::size_t k = anchor_expr.main_span.first + 1; k-- > 0;) {
    if (is_determiner(tokens[k].text)) {
      start = k;
      break;
    }
    if (anchor_expr.main_span.first - k >= 4) break;
  }
  const std::string_view source = anchor_expr.text;
  const std::string_view prefix = source.substr(0, tokens[start].begin);
  const std::string_view rest = source.substr(tokens[start].begin);
  const bool has_prefix = token_count(prefix) > 0;

  const std::string article = article_for(target_class);
  ComposedPrompt out;
  if (has_prefix) {
    // "it is a wood bar stool. ..." -> "it is a table next to a wood bar stool. ..."
    out.text = std::string(prefix) + article + " " + std::string(target_class) + " " + std::string(phrase(rel)) +
               " " + std::string(rest);
  } else {
    out.text = article + " " + std::string(target_class) + " that is " + std::string(phrase(rel)) + " " +
               std::string(rest);
  }
  const std::size_t head = token_count(prefix) + words(target_class).size();
  out.target_span = {head, head};
  return out;
}

double room_radius(const Box3& target_box, const Box3& scene_bounds) {
  const double hx = 0.5 * scene_bounds.size().x;
  const double hy = 0.5 * scene_bounds.size().y;
  const double u = (target_box.center().x - scene_bounds.center().x) / hx;
  const double v = (target_box.center().y - scene_bounds.center().y) / hy;
  return std::clamp(std::hypot(u, v) / std::sqrt(2.0), 0.0, 1.0);
}

ComposedPrompt absolute_location_prompt(std::string_view target_class, const Box3& target_box,
                                        const Box3& scene_bounds, const LocationBands& bands) {
  if (words(target_class).empty()) throw Error(ErrorCode::EmptyInput, "empty target class");
  const double r = room_radius(target_box, scene_bounds);
  std::string where;
  if (r < bands.center_below) {
    where = "closer to the center of the room";
  } else if (r > bands.corner_above) {
    where = "closer to the corner of the room";
  } else {
    where = "in the middle area of the room";
  }
  ComposedPrompt out;
  out.text = article_for(target_class) + " " + std::string(target_class) + " that is " + where;
  const std::size_t head = words(target_class).size();
  out.target_span = {head, head};
  return out;
}

DetectionPrompt detection_prompt(const std::vector<std::string>& categories) {
  if (categories.empty()) throw Error(ErrorCode::EmptyInput, "detection prompt needs categories");
  std::set<std::string> seen;
  DetectionPrompt out;
  std::size_t next = 0;
  for (const auto& c : categories) {
    if (!seen.insert(c).second) throw Error(ErrorCode::InvalidConfig, "duplicate category '" + c + "'");
    const std::size_t n = token_count(c);
    if (n == 0) throw Error(ErrorCode::InvalidConfig, "category without words");
    if (!out.text.empty()) out.text += ' ';
    out.text += c;
    out.text += '.';
    out.spans.push_back({next, next + n - 1});
    next += n;
  }
  return out;
}

bool verify_unique(const Scene& scene, const std::string& target_id, Relation rel, const std::string& anchor_id,
                   const RelationThresholds& thresholds) {
  const ObjectAnnotation& target = scene.at(target_id);
  const ObjectAnnotation& anchor = scene.at(anchor_id);
  std::size_t matches = 0;
  bool target_matches = false;
  for (const auto& o : scene.objects) {
    if (o.category != target.category || o.instance_id == anchor.instance_id) continue;
    if (classify_relation(o.box, anchor.box, anchor.heading_known, thresholds) == rel) {
      ++matches;
      if (o.instance_id == target.instance_id) target_matches = true;
    }
  }
  return matches == 1 && target_matches;
}

std::string AlignmentTarget::row_string(std::size_t r) const {
  std::string s;
  s.reserve(cols);
  for (auto v : rows.at(r)) s += v ? '1' : '0';
  return s;
}

AlignmentTarget alignment_target(std::size_t token_count, const std::vector<TokenSpan>& spans) {
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (spans[i].first > spans[i].last || spans[i].last >= token_count) {
      throw Error(ErrorCode::InvalidConfig, "token span out of range");
    }
    for (std::size_t j = 0; j < i; ++j) {
      const bool overlap = spans[i].first <= spans[j].last && spans[j].first <= spans[i].last;
      if (overlap && !(spans[i] == spans[j])) {
        throw Error(ErrorCode::AmbiguousSpans, "partially overlapping token spans");
      }
    }
  }
  AlignmentTarget out;
  out.cols = token_count;
  out.rows.assign(spans.size(), std::vector<std::uint8_t>(token_count, 0));
  for (std::size_t r = 0; r < spans.size(); ++r) {
    for (std::size_t c = spans[r].first; c <= spans[r].last; ++c) out.rows[r][c] = 1;
  }
  return out;
}

std::string_view to_string(PromptType t) {
  switch (t) {
    case PromptType::Detection: return "detection";
    case PromptType::AbsoluteLocation: return "absolute";
    case PromptType::RelativeLocation: return "relative";
  }
  return "detection";
}

PromptType parse_prompt_type(std::string_view text) {
  if (text == "detection") return PromptType::Detection;
  if (text == "absolute") return PromptType::AbsoluteLocation;
  if (text == "relative") return PromptType::RelativeLocation;
  throw Error(ErrorCode::ParseError, "unknown prompt type '" + std::string(text) + "'");
}

std::vector<GroundingSample> generate_samples(const Scene& scene, const std::vector<InsertionRecord>& records,
                                              const BenchmarkSplit& split, const PromptConfig& cfg,
                                              RandomStream& rng, PromptStats* stats) {
  PromptStats local;
  PromptStats& st = stats != nullptr ? *stats : local;
  std::vector<GroundingSample> out;

  if (cfg.mode == PromptType::Detection) {
    std::vector<std::string> cats = split.seen;
    cats.insert(cats.end(), split.unseen.begin(), split.unseen.end());
    for (const auto& r : records) {
      if (std::find(cats.begin(), cats.end(), r.target.category) == cats.end()) cats.push_back(r.target.category);
    }
    if (cats.size() > cfg.max_detection_categories) {
      std::vector<std::size_t> idx(cats.size());
      std::iota(idx.begin(), idx.end(), 0);
      for (std::size_t i = 0; i < cfg.max_detection_categories; ++i) {
        std::swap(idx[i], idx[i + rng.index(idx.size() - i)]);
      }
      idx.resize(cfg.max_detection_categories);
      std::sort(idx.begin(), idx.end());
      std::vector<std::string> picked;
      for (auto i : idx) picked.push_back(cats[i]);
      cats = std::move(picked);
    }
    if (cats.empty()) {
      ++st.skipped;
      return out;
    }
    const DetectionPrompt dp = detection_prompt(cats);
    std::vector<SampleTarget> targets;
    for (const auto& o : scene.objects) {
      const auto it = std::find(cats.begin(), cats.end(), o.category);
      if (it != cats.end()) targets.push_back(head_target(o, dp.spans[static_cast<std::size_t>(it - cats.begin())]));
    }
    if (targets.empty()) {
      ++st.skipped;
      return out;
    }
    out.push_back(finish_sample(scene.scene_id, dp.text, PromptType::Detection, std::move(targets)));
    ++st.emitted;
    return out;
  }

  for (const auto& r : records) {
    const ObjectAnnotation& target = scene.at(r.target.instance_id);
    if (cfg.mode == PromptType::AbsoluteLocation) {
      const auto p = absolute_location_prompt(target.category, target.box, scene.bounds, cfg.bands);
      out.push_back(finish_sample(scene.scene_id, p.text, PromptType::AbsoluteLocation,
                                  {head_target(target, p.target_span)}));
      ++st.emitted;
      continue;
    }
    const ObjectAnnotation& anchor = scene.at(r.anchor_id);
    const Relation rel = classify_relation(target.box, anchor.box, anchor.heading_known, cfg.thresholds);
    if (!verify_unique(scene, target.instance_id, rel, anchor.instance_id, cfg.thresholds)) {
      ++st.non_unique;
      continue;
    }
    AnchorExpression expr;
    if (anchor.referring_expressions.empty()) {
      expr.text = "the " + anchor.category;
      expr.main_span = {1, token_count(anchor.category)};
      expr.main_category = anchor.category;
    } else {
      expr = anchor.referring_expressions[rng.index(anchor.referring_expressions.size())];
    }
    const auto p = relative_location_prompt(target.category, rel, expr);
    out.push_back(finish_sample(scene.scene_id, p.text, PromptType::RelativeLocation,
                                {head_target(target, p.target_span)}));
    ++st.emitted;
  }
  return out;
}

}  // namespace o2s
