#pragma once

// Shared fixtures and independent oracles for the test suites. The oracles
// here deliberately avoid the library's solver internals: covers are
// enumerated edge by edge, paths by plain recursion over neighbor sets.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "infill/geometry.hpp"

namespace testsupport {

using infill::DualGraph;
using infill::GeneralPolygon;
using infill::GridPoint;
using infill::IopRegion;

// Rows are given top-down ('#' = pixel present), so the last row is y=0.
inline IopRegion region_from_art(const std::vector<std::string>& rows,
                                 GridPoint origin = {0, 0}) {
  IopRegion r;
  r.origin = origin;
  r.height = static_cast<std::int32_t>(rows.size());
  r.width = static_cast<std::int32_t>(rows.front().size());
  r.mask.assign(static_cast<std::size_t>(r.width) * r.height, 0);
  for (std::int32_t y = 0; y < r.height; ++y) {
    const std::string& row = rows[static_cast<std::size_t>(r.height - 1 - y)];
    for (std::int32_t x = 0; x < r.width; ++x) {
      if (row[static_cast<std::size_t>(x)] == '#') {
        r.mask[static_cast<std::size_t>(y) * r.width + x] = 1;
      }
    }
  }
  return r;
}

inline IopRegion full_rect(std::int32_t w, std::int32_t h, GridPoint origin = {0, 0}) {
  IopRegion r;
  r.origin = origin;
  r.width = w;
  r.height = h;
  r.mask.assign(static_cast<std::size_t>(w) * h, 1);
  return r;
}

inline GeneralPolygon rect_polygon(double x0, double y0, double x1, double y1) {
  GeneralPolygon p;
  p.outer.pts = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
  return p;
}

inline GeneralPolygon regular_polygon(double cx, double cy, double radius, int sides) {
  GeneralPolygon p;
  for (int i = 0; i < sides; ++i) {
    const double a = 2.0 * 3.14159265358979323846 * i / sides;
    p.outer.pts.push_back({cx + radius * std::cos(a), cy + radius * std::sin(a)});
  }
  return p;
}

// Exhaustive cover oracle: enumerates every per-edge multiplicity assignment
// (0, 1 or 2 traversals) and keeps degree-feasible ones (2 per interior
// vertex, 1 at each terminal). Returns the minimum objective, or nothing if
// no cover exists. Only for tiny graphs.
inline std::optional<double> brute_force_cover_objective(const DualGraph& g,
                                                         double alpha) {
  const std::size_t ne = g.edges.size();
  if (ne > 14) return std::nullopt;  // 3^14 caps the enumeration
  std::vector<int> mult(ne, 0);
  std::optional<double> best;
  std::vector<int> degree(static_cast<std::size_t>(g.n()), 0);
  std::function<void(std::size_t)> rec = [&](std::size_t e) {
    if (e == ne) {
      for (std::int32_t v = 0; v < g.n(); ++v) {
        const int want = (v == g.s || v == g.t) ? 1 : 2;
        if (degree[static_cast<std::size_t>(v)] != want) return;
      }
      // Objective: edge weights times multiplicity plus turns. Turns need the
      // stub pairs at every degree-2 vertex.
      double obj = 0.0;
      for (std::size_t i = 0; i < ne; ++i) {
        obj += alpha * mult[i] * g.edges[i].weight;
      }
      for (std::int32_t v = 0; v < g.n(); ++v) {
        if (v == g.s || v == g.t) continue;
        int axes[2];
        int nax = 0;
        for (int d = 0; d < 4; ++d) {
          const std::int32_t eid = g.edge_at[static_cast<std::size_t>(v)][d];
          if (eid < 0) continue;
          for (int k = 0; k < mult[static_cast<std::size_t>(eid)]; ++k) {
            // Each traversal of an incident edge consumes one stub at v ...
            // except that a multiplicity counts at both endpoints, which is
            // exactly one stub per traversal at this endpoint.
            axes[nax++] = d >> 1;
          }
        }
        if (nax == 2 && axes[0] != axes[1]) obj += (1.0 - alpha);
      }
      if (!best || obj < *best) best = obj;
      return;
    }
    for (int m = 0; m <= 2; ++m) {
      mult[e] = m;
      degree[static_cast<std::size_t>(g.edges[e].u)] += m;
      degree[static_cast<std::size_t>(g.edges[e].v)] += m;
      bool ok = degree[static_cast<std::size_t>(g.edges[e].u)] <= 2 &&
                degree[static_cast<std::size_t>(g.edges[e].v)] <= 2;
      if (ok) rec(e + 1);
      degree[static_cast<std::size_t>(g.edges[e].u)] -= m;
      degree[static_cast<std::size_t>(g.edges[e].v)] -= m;
    }
    mult[e] = 0;
  };
  rec(0);
  return best;
}

// Plain recursive Hamiltonian path search, independent of the library's
// oracle. Returns the minimum objective or nothing.
inline std::optional<double> brute_force_path_objective(const DualGraph& g,
                                                        double alpha) {
  if (g.n() == 1) return g.s == g.t ? std::optional<double>(0.0) : std::nullopt;
  if (g.s == g.t) return std::nullopt;
  std::vector<char> used(static_cast<std::size_t>(g.n()), 0);
  std::optional<double> best;
  std::function<void(std::int32_t, std::int32_t, std::int32_t, double)> rec =
      [&](std::int32_t cur, std::int32_t prev, std::int32_t count, double cost) {
        if (count == g.n()) {
          if (cur == g.t && (!best || cost < *best)) best = cost;
          return;
        }
        if (cur == g.t) return;
        for (int d = 0; d < 4; ++d) {
          const std::int32_t nxt = g.neighbor[static_cast<std::size_t>(cur)][d];
          if (nxt < 0 || used[static_cast<std::size_t>(nxt)]) continue;
          const std::int32_t eid = g.edge_at[static_cast<std::size_t>(cur)][d];
          double delta = alpha * g.edges[static_cast<std::size_t>(eid)].weight;
          if (prev >= 0) {
            const GridPoint p = g.vertices[static_cast<std::size_t>(cur)];
            const GridPoint pp = g.vertices[static_cast<std::size_t>(prev)];
            const GridPoint pn = g.vertices[static_cast<std::size_t>(nxt)];
            const bool ax_in = p.y == pp.y;
            const bool ax_out = p.y == pn.y;
            if (ax_in != ax_out) delta += 1.0 - alpha;
          }
          used[static_cast<std::size_t>(nxt)] = 1;
          rec(nxt, cur, count + 1, cost + delta);
          used[static_cast<std::size_t>(nxt)] = 0;
        }
      };
  used[static_cast<std::size_t>(g.s)] = 1;
  rec(g.s, -1, 1, 0.0);
  return best;
}

inline bool brute_force_path_exists(const DualGraph& g) {
  return brute_force_path_objective(g, 1.0).has_value();
}

// Random connected pixel blobs for the feasibility corpora: a union of
// random rectangles, largest 4-connected component kept.
inline IopRegion random_blob(std::mt19937& rng, std::int32_t max_side) {
  std::uniform_int_distribution<std::int32_t> side(4, max_side);
  const std::int32_t w = side(rng);
  const std::int32_t h = side(rng);
  IopRegion r;
  r.origin = {0, 0};
  r.width = w;
  r.height = h;
  r.mask.assign(static_cast<std::size_t>(w) * h, 0);
  std::uniform_int_distribution<int> nrect(2, 5);
  const int rects = nrect(rng);
  for (int k = 0; k < rects; ++k) {
    std::uniform_int_distribution<std::int32_t> xd(0, w - 1), yd(0, h - 1);
    std::int32_t x0 = xd(rng), x1 = xd(rng), y0 = yd(rng), y1 = yd(rng);
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    for (std::int32_t y = y0; y <= y1; ++y) {
      for (std::int32_t x = x0; x <= x1; ++x) {
        r.mask[static_cast<std::size_t>(y) * w + x] = 1;
      }
    }
  }
  auto comps = infill::connected_components(r);
  std::size_t best = 0;
  for (std::size_t i = 1; i < comps.size(); ++i) {
    if (comps[i].pixel_count() > comps[best].pixel_count()) best = i;
  }
  return comps[best];
}

}  // namespace testsupport
