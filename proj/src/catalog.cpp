#include "o2s/catalog.hpp"

#include <map>

namespace o2s::catalog {
namespace {

const std::map<std::string, SupportRole>& role_table() {
  using R = SupportRole;
  static const std::map<std::string, SupportRole> table = {
      {"bag", R::Supportee},         {"bathtub", R::Stander},     {"bed", R::Supporter},
      {"bin", R::Stander},           {"book", R::Supportee},      {"bookshelf", R::Supporter},
      {"bottle", R::Supportee},      {"bowl", R::Supportee},      {"box", R::Supportee},
      {"cabinet", R::Supporter},     {"chair", R::Stander},       {"counter", R::Supporter},
      {"cup", R::Supportee},         {"curtain", R::Stander},     {"desk", R::Supporter},
      {"door", R::Stander},          {"dresser", R::Supporter},   {"fridge", R::Stander},
      {"garbage bin", R::Stander},   {"keyboard", R::Supportee},  {"lamp", R::Supportee},
      {"laptop", R::Supportee},      {"microwave", R::Supportee}, {"monitor", R::Supportee},
      {"mug", R::Supportee},         {"night stand", R::Supporter}, {"plant", R::Supportee},
      {"pillow", R::Supportee},      {"printer", R::Supportee},   {"scanner", R::Supportee},
      {"shelf", R::Supporter},       {"sink", R::Stander},        {"sofa", R::Supporter},
      {"stool", R::Stander},         {"table", R::Supporter},     {"toilet", R::Stander},
      {"trash can", R::Stander},     {"tv", R::Supportee},        {"vase", R::Supportee},
  };
  return table;
}

void attach_roles(BenchmarkSplit& split) {
  for (const auto* list : {&split.seen, &split.unseen}) {
    for (const auto& c : *list) {
      if (auto r = default_role(c)) split.roles[c] = *r;
    }
  }
}

}  // namespace

std::optional<SupportRole> default_role(const std::string& category) {
  const auto& t = role_table();
  const auto it = t.find(category);
  if (it == t.end()) return std::nullopt;
  return it->second;
}

BenchmarkSplit ov_scannet20() {
  BenchmarkSplit s;
  s.name = "OV-ScanNet20";
  s.seen = {"bathtub", "fridge", "desk", "night stand", "counter",
            "door",    "curtain", "box", "lamp",        "bag"};
  s.unseen = {"toilet",  "bed",      "chair",     "sofa",   "dresser",
              "table",   "cabinet",  "bookshelf", "pillow", "sink"};
  s.similar = {{"toilet", "bathtub"}, {"bed", "bathtub"},   {"chair", "night stand"},
               {"sofa", "bathtub"},   {"dresser", "night stand"}, {"table", "desk"},
               {"cabinet", "fridge"}, {"bookshelf", "fridge"},    {"pillow", "bag"},
               {"sink", "counter"}};
  attach_roles(s);
  return s;
}

BenchmarkSplit ov_sunrgbd20() {
  BenchmarkSplit s;
  s.name = "OV-SUN RGB-D20";
  s.seen = {"table",     "night stand", "cabinet",   "counter", "garbage bin",
            "bookshelf", "pillow",      "microwave", "sink",    "stool"};
  s.unseen = {"toilet", "bed",    "chair",   "bathtub", "sofa",
              "dresser", "scanner", "fridge", "lamp",    "desk"};
  s.similar = {{"toilet", "garbage bin"}, {"bed", "table"},        {"chair", "stool"},
               {"bathtub", "counter"},    {"sofa", "table"},       {"dresser", "cabinet"},
               {"scanner", "microwave"},  {"fridge", "cabinet"},   {"lamp", "garbage bin"},
               {"desk", "table"}};
  attach_roles(s);
  return s;
}

}  // namespace o2s::catalog
