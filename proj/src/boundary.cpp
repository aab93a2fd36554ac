#include "infill/boundary.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <unordered_map>
#include <unordered_set>

namespace infill {

namespace {

constexpr double kProbeOffset = 1e-6;
constexpr double kProjectionCap = 2.0;  // lattice units (2x pixel size)

const std::array<std::array<double, 2>, 4> kDirUnit = {
    {{-1.0, 0.0}, {1.0, 0.0}, {0.0, -1.0}, {0.0, 1.0}}};

bool in_any_polygon(const std::vector<GeneralPolygon>& polys, Vec2 p) {
  for (const auto& poly : polys) {
    if (point_in_polygon(poly, p)) return true;
  }
  return false;
}

IopRegion region_from_plan(const LayerPlan& plan) {
  if (plan.region.width > 0) return plan.region;
  std::int32_t minx = std::numeric_limits<std::int32_t>::max(), maxx = -minx;
  std::int32_t miny = minx, maxy = -minx;
  std::vector<GridPoint> pts;
  for (const ToolMove& m : plan.moves) {
    if (!m.lattice) continue;
    for (GridPoint p : {m.a, m.b}) {
      pts.push_back(p);
      minx = std::min(minx, p.x);
      maxx = std::max(maxx, p.x);
      miny = std::min(miny, p.y);
      maxy = std::max(maxy, p.y);
    }
  }
  IopRegion r;
  if (pts.empty()) return r;
  r.origin = {minx, miny};
  r.width = maxx - minx + 1;
  r.height = maxy - miny + 1;
  r.mask.assign(static_cast<std::size_t>(r.width) * r.height, 0);
  for (GridPoint p : pts) {
    r.mask[static_cast<std::size_t>(p.y - miny) * r.width + (p.x - minx)] = 1;
  }
  return r;
}

// A pixel side faces leftover polygon area when the neighbor pixel is outside
// the region but the spot just past the side is still inside the polygon.
bool side_exposed(const IopRegion& region, const std::vector<GeneralPolygon>& polys,
                  GridPoint pixel, int dir) {
  const GridPoint nb{pixel.x + DualGraph::kDirDelta[dir][0],
                     pixel.y + DualGraph::kDirDelta[dir][1]};
  if (region.at(nb)) return false;
  const Vec2 probe{pixel.x + 0.5 + (0.5 + kProbeOffset) * kDirUnit[static_cast<std::size_t>(dir)][0],
                   pixel.y + 0.5 + (0.5 + kProbeOffset) * kDirUnit[static_cast<std::size_t>(dir)][1]};
  return in_any_polygon(polys, probe);
}

// Nearest boundary hit along an axis ray from the vertex center; empty when
// past the sanity cap.
std::optional<Vec2> project_ray(const std::vector<GeneralPolygon>& polys, Vec2 from,
                                int dir) {
  const double dx = kDirUnit[static_cast<std::size_t>(dir)][0];
  const double dy = kDirUnit[static_cast<std::size_t>(dir)][1];
  double best_t = std::numeric_limits<double>::max();
  auto scan_ring = [&](const Ring& ring) {
    const std::size_t n = ring.pts.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 a = ring.pts[i];
      const Vec2 b = ring.pts[(i + 1) % n];
      // Solve from + t*(dx,dy) = a + u*(b-a), t >= 0, u in [0,1].
      const double ex = b.x - a.x;
      const double ey = b.y - a.y;
      const double denom = dx * ey - dy * ex;
      if (std::abs(denom) < 1e-15) continue;
      const double t = ((a.x - from.x) * ey - (a.y - from.y) * ex) / denom;
      double u;
      if (std::abs(ex) >= std::abs(ey)) {
        u = (from.x + t * dx - a.x) / ex;
      } else {
        u = (from.y + t * dy - a.y) / ey;
      }
      if (t > 1e-9 && u >= -1e-9 && u <= 1.0 + 1e-9 && t < best_t) best_t = t;
    }
  };
  for (const auto& poly : polys) {
    scan_ring(poly.outer);
    for (const auto& h : poly.holes) scan_ring(h);
  }
  if (best_t > kProjectionCap) return std::nullopt;
  return Vec2{from.x + best_t * dx, from.y + best_t * dy};
}

bool segments_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  auto orient = [](Vec2 p, Vec2 q, Vec2 s) {
    const double v = (q.x - p.x) * (s.y - p.y) - (q.y - p.y) * (s.x - p.x);
    if (v > 1e-12) return 1;
    if (v < -1e-12) return -1;
    return 0;
  };
  const int o1 = orient(a, b, c), o2 = orient(a, b, d);
  const int o3 = orient(c, d, a), o4 = orient(c, d, b);
  return o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0;
}

struct PointHash {
  std::size_t operator()(const GridPoint& p) const {
    return static_cast<std::size_t>(p.x) * 1000003u ^ static_cast<std::size_t>(p.y);
  }
};

}  // namespace

std::vector<GridPoint> boundary_vertices(const LayerPlan& plan,
                                         const std::vector<GeneralPolygon>& polygons) {
  const IopRegion region = region_from_plan(plan);
  std::vector<GridPoint> out;
  std::unordered_set<GridPoint, PointHash> seen;
  for (const ToolMove& m : plan.moves) {
    if (m.kind != ToolMove::Kind::Print || !m.lattice) continue;
    for (GridPoint p : {m.a, m.b}) {
      if (seen.count(p)) continue;
      seen.insert(p);
      for (int d = 0; d < 4; ++d) {
        if (side_exposed(region, polygons, p, d)) {
          out.push_back(p);
          break;
        }
      }
    }
  }
  return out;
}

LayerPlan project_to_boundary(LayerPlan plan,
                              const std::vector<GeneralPolygon>& polygons) {
  if (plan.skipped || polygons.empty()) return plan;
  const IopRegion region = region_from_plan(plan);

  // Vertex -> exposed direction list.
  std::unordered_map<GridPoint, std::vector<int>, PointHash> exposure;
  for (GridPoint v : boundary_vertices(plan, polygons)) {
    std::vector<int> dirs;
    for (int d = 0; d < 4; ++d) {
      if (side_exposed(region, polygons, v, d)) dirs.push_back(d);
    }
    exposure.emplace(v, std::move(dirs));
  }
  if (exposure.empty()) return plan;

  std::unordered_map<GridPoint, int, PointHash> projected_dir;  // at most once
  std::vector<std::pair<Vec2, Vec2>> accepted_segments;

  auto crosses_accepted = [&](Vec2 a, Vec2 b) {
    for (const auto& [c, d] : accepted_segments) {
      if (segments_cross(a, b, c, d)) return true;
    }
    return false;
  };

  std::vector<ToolMove> out_moves;
  out_moves.reserve(plan.moves.size() + exposure.size() * 2);

  // Pass 1: staples over print edges whose endpoints share an exposed side.
  // Pass 2 (woven into the same walk, after the arrival move of each
  // vertex): out-and-back extensions for exposed vertices that are still
  // unprojected, converting the arrival edge to idle when its other endpoint
  // was already projected the same way.
  auto try_staple = [&](const ToolMove& m) -> bool {
    if (m.kind != ToolMove::Kind::Print || !m.lattice) return false;
    auto ita = exposure.find(m.a);
    auto itb = exposure.find(m.b);
    if (ita == exposure.end() || itb == exposure.end()) return false;
    if (projected_dir.count(m.a) || projected_dir.count(m.b)) return false;
    const bool horizontal = m.a.y == m.b.y;
    // Candidate directions perpendicular to the edge, exposed at both ends.
    std::vector<int> shared;
    for (int d = horizontal ? DualGraph::South : DualGraph::West;
         d <= (horizontal ? DualGraph::North : DualGraph::East); ++d) {
      const bool ina = std::find(ita->second.begin(), ita->second.end(), d) !=
                       ita->second.end();
      const bool inb = std::find(itb->second.begin(), itb->second.end(), d) !=
                       itb->second.end();
      if (ina && inb) shared.push_back(d);
    }
    struct Option {
      int dir;
      Vec2 pa, pb;
      double len;
    };
    std::optional<Option> best;
    const Vec2 ca{m.a.x + 0.5, m.a.y + 0.5};
    const Vec2 cb{m.b.x + 0.5, m.b.y + 0.5};
    for (int d : shared) {
      const auto pa = project_ray(polygons, ca, d);
      const auto pb = project_ray(polygons, cb, d);
      if (!pa || !pb) continue;
      const double len = std::abs(pa->x - ca.x) + std::abs(pa->y - ca.y) +
                         std::abs(pb->x - cb.x) + std::abs(pb->y - cb.y);
      if (!best || len < best->len) best = Option{d, *pa, *pb, len};
    }
    if (!best) return false;
    if (crosses_accepted(ca, best->pa) || crosses_accepted(cb, best->pb) ||
        crosses_accepted(best->pa, best->pb)) {
      plan.warnings.push_back("projection dropped: segments would cross");
      return false;
    }
    // Containment sanity for the near-boundary rung.
    const Vec2 mid{(best->pa.x + best->pb.x) / 2, (best->pa.y + best->pb.y) / 2};
    if (!in_any_polygon(polygons, mid)) return false;
    ToolMove outp{ToolMove::Kind::Print, ca, best->pa, false, {}, {}};
    ToolMove rung{ToolMove::Kind::Print, best->pa, best->pb, false, {}, {}};
    ToolMove back{ToolMove::Kind::Print, best->pb, cb, false, {}, {}};
    out_moves.push_back(outp);
    out_moves.push_back(rung);
    out_moves.push_back(back);
    projected_dir[m.a] = best->dir;
    projected_dir[m.b] = best->dir;
    accepted_segments.push_back({ca, best->pa});
    accepted_segments.push_back({best->pa, best->pb});
    accepted_segments.push_back({cb, best->pb});
    return true;
  };

  auto try_out_and_back = [&](GridPoint v, const ToolMove* arrival,
                              std::size_t arrival_index) {
    auto it = exposure.find(v);
    if (it == exposure.end() || projected_dir.count(v)) return;
    struct Option {
      int dir;
      Vec2 p;
      double len;
    };
    std::optional<Option> best;
    const Vec2 cv{v.x + 0.5, v.y + 0.5};
    for (int d : it->second) {
      const auto p = project_ray(polygons, cv, d);
      if (!p) continue;
      const double len = std::abs(p->x - cv.x) + std::abs(p->y - cv.y);
      if (!best || len < best->len) best = Option{d, *p, len};
    }
    if (!best) {
      plan.warnings.push_back("projection skipped: no boundary hit within cap");
      return;
    }
    if (crosses_accepted(cv, best->p)) {
      plan.warnings.push_back("projection dropped: segments would cross");
      return;
    }
    // When the vertex we arrive from was already projected the same way, the
    // arrival edge is converted to idle movement before extending.
    if (arrival != nullptr && arrival->lattice) {
      const GridPoint u = arrival->a;
      auto pu = projected_dir.find(u);
      if (pu != projected_dir.end() && pu->second == best->dir &&
          out_moves[arrival_index].kind == ToolMove::Kind::Print) {
        out_moves[arrival_index].kind = ToolMove::Kind::Idle;
      }
    }
    out_moves.push_back({ToolMove::Kind::Print, cv, best->p, false, {}, {}});
    out_moves.push_back({ToolMove::Kind::Print, best->p, cv, false, {}, {}});
    projected_dir[v] = best->dir;
    accepted_segments.push_back({cv, best->p});
  };

  // Walk the move list once, in path order.
  for (std::size_t i = 0; i < plan.moves.size(); ++i) {
    const ToolMove& m = plan.moves[i];
    if (i == 0 && m.lattice) {
      // The very first vertex has no arrival move.
      try_out_and_back(m.a, nullptr, 0);
    }
    if (try_staple(m)) continue;
    out_moves.push_back(m);
    if (m.lattice) {
      try_out_and_back(m.b, &m, out_moves.size() - 1);
    }
  }
  plan.moves = std::move(out_moves);

  // Idle length after conversions: rectilinear length of every idle move.
  plan.idle_length = 0.0;
  for (const ToolMove& m : plan.moves) {
    if (m.kind == ToolMove::Kind::Idle) {
      plan.idle_length += std::abs(m.to.x - m.from.x) + std::abs(m.to.y - m.from.y);
    }
  }
  plan.turn_ratio_value = turn_ratio(plan);
  return plan;
}

}  // namespace infill
