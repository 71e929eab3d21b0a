#include "oracles.hpp"

#include "o2s/synthetic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace oracle {

long double contrastive_direct(const o2s::FeatureBatch& batch, bool count_as_zero) {
  const std::size_t n = batch.features.rows();
  const std::size_t d = batch.features.cols();
  const long double tau = batch.temperature;
  auto sim = [&](std::size_t i, std::size_t j) {
    long double s = 0.0L;
    for (std::size_t c = 0; c < d; ++c) {
      s += static_cast<long double>(batch.features(i, c)) * static_cast<long double>(batch.features(j, c));
    }
    return s / tau;
  };
  long double total = 0.0L;
  std::size_t included = 0;
  for (std::size_t i = 0; i < n; ++i) {
    long double num = 0.0L;
    long double den = 0.0L;
    bool positive = false;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const long double e = std::exp(sim(i, j));
      den += e;
      if (batch.labels[j] == batch.labels[i]) {
        num += e;
        positive = true;
      }
    }
    if (!positive) continue;
    ++included;
    total += -std::log(num / den);
  }
  const std::size_t denom = count_as_zero ? n : included;
  return total / static_cast<long double>(denom);
}

o2s::Matrix finite_difference_grad(const o2s::FeatureBatch& batch, double h) {
  o2s::FeatureBatch probe = batch;
  o2s::Matrix g(batch.features.rows(), batch.features.cols());
  for (std::size_t r = 0; r < g.rows(); ++r) {
    for (std::size_t c = 0; c < g.cols(); ++c) {
      const double x = batch.features(r, c);
      const double xp = x + h;
      const double xm = x - h;
      probe.features(r, c) = xp;
      const long double up = contrastive_direct(probe);
      probe.features(r, c) = xm;
      const long double down = contrastive_direct(probe);
      probe.features(r, c) = x;
      // Divide by the step actually taken after rounding x +- h.
      g(r, c) = static_cast<double>((up - down) / (static_cast<long double>(xp) - static_cast<long double>(xm)));
    }
  }
  return g;
}

o2s::FeatureBatch random_batch(std::mt19937_64& gen, std::size_t min_n) {
  static constexpr double kTaus[] = {0.05, 0.07, 0.5, 1.0};
  std::uniform_int_distribution<std::size_t> n_dist(min_n, 16);
  std::uniform_int_distribution<std::size_t> d_dist(1, 8);
  std::uniform_int_distribution<int> c_dist(2, 5);
  std::uniform_int_distribution<int> tau_dist(0, 3);
  std::normal_distribution<double> normal(0.0, 1.0);

  o2s::FeatureBatch b;
  const std::size_t n = n_dist(gen);
  const std::size_t d = d_dist(gen);
  const int classes = c_dist(gen);
  b.temperature = kTaus[tau_dist(gen)];
  b.features = o2s::Matrix(n, d);
  // Unit-norm rows times a per-row radius keep |logit| <= 1.5^2 / 0.05 = 45
  // and keep rows distinct even when d = 1.
  std::uniform_real_distribution<double> radius_dist(0.3, 1.5);
  for (std::size_t i = 0; i < n; ++i) {
    const double radius = radius_dist(gen);
    double norm = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      b.features(i, c) = normal(gen);
      norm += b.features(i, c) * b.features(i, c);
    }
    norm = std::sqrt(norm);
    for (std::size_t c = 0; c < d; ++c) b.features(i, c) *= radius / std::max(norm, 1e-12);
  }
  std::uniform_int_distribution<int> label(0, classes - 1);
  for (std::size_t i = 0; i < n; ++i) b.labels.push_back(label(gen));
  b.labels[1] = b.labels[0];
  static const char* kSources[] = {"scannet", "sunrgbd", "shapenet"};
  for (std::size_t i = 0; i < n; ++i) b.sources.emplace_back(kSources[i % 3]);
  return b;
}

long double alignment_direct(const o2s::AlignmentBatch& batch) {
  long double total = 0.0L;
  const std::size_t n = batch.object_features.rows();
  const std::size_t m = batch.text_features.rows();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      long double x = 0.0L;
      for (std::size_t c = 0; c < batch.object_features.cols(); ++c) {
        x += static_cast<long double>(batch.object_features(i, c)) * batch.text_features(j, c);
      }
      const long double s = 1.0L / (1.0L + std::exp(-x));
      const long double t = batch.target(i, j);
      total += -(t * std::log(s) + (1.0L - t) * std::log(1.0L - s));
    }
  }
  return total / static_cast<long double>(n * m);
}

bool inside(const o2s::Box3& box, const o2s::Vec3& p, double tol) {
  const double c = std::cos(box.heading());
  const double s = std::sin(box.heading());
  const double dx = p.x - box.center().x;
  const double dy = p.y - box.center().y;
  const double lx = c * dx + s * dy;
  const double ly = -s * dx + c * dy;
  const double lz = p.z - box.center().z;
  return std::abs(lx) <= 0.5 * box.size().x + tol && std::abs(ly) <= 0.5 * box.size().y + tol &&
         std::abs(lz) <= 0.5 * box.size().z + tol;
}

double monte_carlo_iou(const o2s::Box3& a, const o2s::Box3& b, std::size_t samples, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const double c = std::cos(a.heading());
  const double s = std::sin(a.heading());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double lx = u(gen) * a.size().x;
    const double ly = u(gen) * a.size().y;
    const double lz = u(gen) * a.size().z;
    const o2s::Vec3 p{a.center().x + c * lx - s * ly, a.center().y + s * lx + c * ly, a.center().z + lz};
    if (inside(b, p)) ++hits;
  }
  const double va = a.size().x * a.size().y * a.size().z;
  const double vb = b.size().x * b.size().y * b.size().z;
  const double inter = va * static_cast<double>(hits) / static_cast<double>(samples);
  return inter / (va + vb - inter);
}

namespace {

struct Footprint {
  o2s::Vec2 corners[4];
  o2s::Vec2 axes[2];
};

Footprint footprint_of(const o2s::Box3& b) {
  const double c = std::cos(b.heading());
  const double s = std::sin(b.heading());
  const double hx = 0.5 * b.size().x;
  const double hy = 0.5 * b.size().y;
  Footprint f;
  f.axes[0] = {c, s};
  f.axes[1] = {-s, c};
  const double signs[4][2] = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
  for (int k = 0; k < 4; ++k) {
    const double lx = signs[k][0] * hx;
    const double ly = signs[k][1] * hy;
    f.corners[k] = {b.center().x + c * lx - s * ly, b.center().y + s * lx + c * ly};
  }
  return f;
}

}  // namespace

double sat_penetration(const o2s::Box3& a, const o2s::Box3& b) {
  const Footprint fa = footprint_of(a);
  const Footprint fb = footprint_of(b);
  double depth = std::min(a.center().z + 0.5 * a.size().z, b.center().z + 0.5 * b.size().z) -
                 std::max(a.center().z - 0.5 * a.size().z, b.center().z - 0.5 * b.size().z);
  for (const auto* f : {&fa, &fb}) {
    for (const auto& axis : f->axes) {
      double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
      for (const auto& p : fa.corners) {
        const double t = p.x * axis.x + p.y * axis.y;
        amin = std::min(amin, t);
        amax = std::max(amax, t);
      }
      for (const auto& p : fb.corners) {
        const double t = p.x * axis.x + p.y * axis.y;
        bmin = std::min(bmin, t);
        bmax = std::max(bmax, t);
      }
      depth = std::min(depth, std::min(amax, bmax) - std::max(amin, bmin));
    }
  }
  return depth;
}

double aabb_iou(const o2s::Box3& a, const o2s::Box3& b) {
  auto overlap = [](double ca, double sa, double cb, double sb) {
    return std::max(0.0, std::min(ca + sa / 2, cb + sb / 2) - std::max(ca - sa / 2, cb - sb / 2));
  };
  const double inter = overlap(a.center().x, a.size().x, b.center().x, b.size().x) *
                       overlap(a.center().y, a.size().y, b.center().y, b.size().y) *
                       overlap(a.center().z, a.size().z, b.center().z, b.size().z);
  const double va = a.size().x * a.size().y * a.size().z;
  const double vb = b.size().x * b.size().y * b.size().z;
  return inter / (va + vb - inter);
}

o2s::Box3 random_box(std::mt19937_64& gen, double spread, bool oriented) {
  std::uniform_real_distribution<double> pos(-spread, spread);
  std::uniform_real_distribution<double> size(0.2, 2.0);
  std::uniform_real_distribution<double> yaw(-M_PI, M_PI);
  return o2s::Box3({pos(gen), pos(gen), pos(gen)}, {size(gen), size(gen), size(gen)}, oriented ? yaw(gen) : 0.0);
}

double ap_reference(const std::vector<std::pair<double, bool>>& scored_flags, std::size_t num_gt) {
  std::vector<std::size_t> order(scored_flags.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scored_flags[a].first > scored_flags[b].first; });
  std::vector<double> rec, prec;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (scored_flags[order[k]].second) ++tp;
    rec.push_back(static_cast<double>(tp) / static_cast<double>(num_gt));
    prec.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
  }
  std::set<double> levels(rec.begin(), rec.end());
  double ap = 0.0;
  double prev = 0.0;
  for (double r : levels) {
    if (r <= 0.0) continue;
    double best = 0.0;
    for (std::size_t k = 0; k < rec.size(); ++k) {
      if (rec[k] >= r) best = std::max(best, prec[k]);
    }
    ap += (r - prev) * best;
    prev = r;
  }
  return ap;
}

ReferenceReport evaluate_reference(const std::vector<o2s::Detection>& dets, const std::vector<o2s::GroundTruth>& gts,
                                   const std::vector<std::string>& unseen, double iou_threshold) {
  std::set<std::string> categories;
  for (const auto& g : gts) categories.insert(g.category);
  for (const auto& d : dets) categories.insert(d.category);

  ReferenceReport report;
  for (const auto& cat : categories) {
    std::vector<std::size_t> mine;
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (dets[i].category == cat) mine.push_back(i);
    }
    std::stable_sort(mine.begin(), mine.end(), [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
    std::vector<std::size_t> truth;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gts[g].category == cat) truth.push_back(g);
    }
    std::set<std::size_t> used;
    std::vector<std::pair<double, bool>> flags;
    for (std::size_t di : mine) {
      double best = -1.0;
      std::optional<std::size_t> pick;
      for (std::size_t g : truth) {
        if (used.count(g) || gts[g].scene_id != dets[di].scene_id) continue;
        const double v = aabb_iou(dets[di].box, gts[g].box);
        if (v >= iou_threshold && v > best) {
          best = v;
          pick = g;
        }
      }
      if (pick) used.insert(*pick);
      flags.emplace_back(dets[di].score, pick.has_value());
    }
    report.ap[cat] = truth.empty() ? std::nullopt : std::optional<double>(ap_reference(flags, truth.size()));
  }
  double sum = 0.0;
  int count = 0;
  for (const auto& u : unseen) {
    const auto it = report.ap.find(u);
    if (it != report.ap.end() && it->second) {
      sum += *it->second;
      ++count;
    }
  }
  if (count > 0) report.mean_ap = sum / count;
  return report;
}

std::vector<double> height_map_reference(const std::vector<o2s::Vec3>& points, o2s::Vec2 origin, double cell,
                                         std::size_t cells, double floor_z) {
  std::vector<double> out(cells * cells, floor_z);
  for (std::size_t iy = 0; iy < cells; ++iy) {
    for (std::size_t ix = 0; ix < cells; ++ix) {
      for (const auto& p : points) {
        if (std::floor((p.x - origin.x) / cell) == static_cast<double>(ix) &&
            std::floor((p.y - origin.y) / cell) == static_cast<double>(iy)) {
          out[iy * cells + ix] = std::max(out[iy * cells + ix], p.z);
        }
      }
    }
  }
  return out;
}

std::optional<std::string> recheck_insertion(const o2s::Scene& before, const o2s::ObjectAnnotation& inserted,
                                             const std::optional<std::string>& supported_by, double surface_z,
                                             double margin, double surface_tolerance) {
  const o2s::Box3& box = inserted.box;
  const o2s::ObjectAnnotation* supporter = nullptr;
  if (supported_by) {
    for (const auto& o : before.objects) {
      if (o.instance_id == *supported_by) supporter = &o;
    }
    if (supporter == nullptr) return "supporter " + *supported_by + " missing";
  }
  if (inserted.role != o2s::SupportRole::Supportee && supporter != nullptr) return "non-supportee off the ground";
  if (supporter != nullptr && supporter->role != o2s::SupportRole::Supporter) return "rests on a non-supporter";
  const double bottom = box.center().z - 0.5 * box.size().z;
  if (std::abs(bottom - surface_z) > 0.01) return "bottom is off the support surface";
  if (supporter == nullptr && std::abs(surface_z - before.floor_z) > 1e-9) return "ground surface is not the floor";
  if (supporter != nullptr) {
    const double top = supporter->box.center().z + 0.5 * supporter->box.size().z;
    if (std::abs(top - surface_z) > surface_tolerance) return "surface is not the supporter top";
  }
  const double grow = 2.0 * margin * 0.999;
  const o2s::Box3 inflated(box.center(), {box.size().x + grow, box.size().y + grow, box.size().z + grow},
                           box.heading());
  for (const auto& o : before.objects) {
    if (supporter != nullptr && o.instance_id == supporter->instance_id) continue;
    if (sat_penetration(inflated, o.box) > 1e-9) return "collides with " + o.instance_id;
  }
  return std::nullopt;
}

long points_inside(const o2s::PointCloud& cloud, const o2s::Box3& box, double tol) {
  long n = 0;
  for (const auto& p : cloud.points) n += inside(box, p, tol) ? 1 : 0;
  return n;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("o2s_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

o2s::CategoryTable fixture_table(const o2s::BenchmarkSplit& split, std::uint64_t seed) {
  std::vector<o2s::Scene> rooms;
  for (int i = 0; i < 40; ++i) {
    rooms.push_back(o2s::synthetic::make_room("stats" + std::to_string(i), split, seed, {.target_points = 4000}));
  }
  return o2s::compute_category_stats(rooms, split);
}

}  // namespace oracle
