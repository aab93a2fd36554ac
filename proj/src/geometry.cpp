#include "infill/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace infill {

namespace {

constexpr double kEps = 1e-9;

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  if (std::abs(cross) > kEps * std::max(1.0, len)) return false;
  const double dot = (p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y);
  return dot >= -kEps && dot <= len * len + kEps;
}

// Even-odd crossing count over one ring; boundary handled by caller.
int ray_crossings(const Ring& r, Vec2 p) {
  int crossings = 0;
  const std::size_t n = r.pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 a = r.pts[i];
    Vec2 b = r.pts[(i + 1) % n];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double xint = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
      if (xint > p.x) ++crossings;
    }
  }
  return crossings;
}

bool point_on_rings(const GeneralPolygon& poly, Vec2 p) {
  auto check = [&](const Ring& r) {
    const std::size_t n = r.pts.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (on_segment(r.pts[i], r.pts[(i + 1) % n], p)) return true;
    }
    return false;
  };
  if (check(poly.outer)) return true;
  for (const auto& h : poly.holes) {
    if (check(h)) return true;
  }
  return false;
}

// True when the open axis-aligned box (x0,x1)x(y0,y1) meets segment ab.
bool segment_crosses_open_box(Vec2 a, Vec2 b, double x0, double y0, double x1,
                              double y1) {
  // Liang-Barsky clip to the closed box, then test the clipped midpoint
  // strictly inside. Collinear-with-boundary segments clip onto the border
  // and are not crossings.
  double t0 = 0.0, t1 = 1.0;
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {a.x - x0, x1 - a.x, a.y - y0, y1 - a.y};
  for (int i = 0; i < 4; ++i) {
    if (std::abs(p[i]) < 1e-15) {
      if (q[i] < 0) return false;
    } else {
      const double r = q[i] / p[i];
      if (p[i] < 0) {
        if (r > t1) return false;
        if (r > t0) t0 = r;
      } else {
        if (r < t0) return false;
        if (r < t1) t1 = r;
      }
    }
  }
  if (t0 > t1) return false;
  const double tm = 0.5 * (t0 + t1);
  const double mx = a.x + tm * dx;
  const double my = a.y + tm * dy;
  return mx > x0 + kEps && mx < x1 - kEps && my > y0 + kEps && my < y1 - kEps;
}

void strip_closing_point(Ring& r) {
  if (r.pts.size() >= 2 && r.pts.front() == r.pts.back()) r.pts.pop_back();
}

bool ring_self_intersects(const Ring& r) {
  const std::size_t n = r.pts.size();
  if (n < 4) return false;
  auto seg_intersect = [](Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    auto orient = [](Vec2 p, Vec2 q, Vec2 s) {
      const double v = (q.x - p.x) * (s.y - p.y) - (q.y - p.y) * (s.x - p.x);
      if (v > kEps) return 1;
      if (v < -kEps) return -1;
      return 0;
    };
    const int o1 = orient(a, b, c), o2 = orient(a, b, d);
    const int o3 = orient(c, d, a), o4 = orient(c, d, b);
    return o1 != o2 && o3 != o4;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      // Skip adjacent segments (they share an endpoint).
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (seg_intersect(r.pts[i], r.pts[(i + 1) % n], r.pts[j],
                        r.pts[(j + 1) % n])) {
        return true;
      }
    }
  }
  return false;
}

Ring ring_from_json(const nlohmann::json& j) {
  Ring r;
  for (const auto& pt : j) {
    if (!pt.is_array() || pt.size() != 2) {
      throw GeometryError("ring point must be a [x,y] pair");
    }
    r.pts.push_back({pt[0].get<double>(), pt[1].get<double>()});
  }
  strip_closing_point(r);
  return r;
}

nlohmann::json ring_to_json(const Ring& r) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& p : r.pts) j.push_back({p.x, p.y});
  return j;
}

}  // namespace

double ring_signed_area(const Ring& r) {
  double a = 0.0;
  const std::size_t n = r.pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = r.pts[i];
    const Vec2& q = r.pts[(i + 1) % n];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

double polygon_area(const GeneralPolygon& p) {
  double a = std::abs(ring_signed_area(p.outer));
  for (const auto& h : p.holes) a -= std::abs(ring_signed_area(h));
  return a;
}

bool point_in_polygon(const GeneralPolygon& poly, Vec2 p) {
  if (point_on_rings(poly, p)) return true;
  int crossings = ray_crossings(poly.outer, p);
  for (const auto& h : poly.holes) crossings += ray_crossings(h, p);
  return (crossings & 1) != 0;
}

LayerStack layer_stack_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw GeometryError("layer stack parse error at byte " +
                        std::to_string(e.byte) + ": " + e.what());
  }
  LayerStack stack;
  try {
    stack.pixel_size_mm = j.at("pixel_size_mm").get<double>();
    stack.layer_height_mm = j.at("layer_height_mm").get<double>();
    if (stack.pixel_size_mm <= 0) throw GeometryError("pixel_size_mm must be > 0");
    const auto& layers = j.at("layers");
    if (!layers.is_array() || layers.empty()) {
      throw GeometryError("layer stack has no layers");
    }
    for (const auto& jl : layers) {
      LayerGeometry layer;
      layer.z_index = jl.at("z_index").get<int>();
      for (const auto& jp : jl.at("polygons")) {
        GeneralPolygon poly;
        poly.outer = ring_from_json(jp.at("outer"));
        if (poly.outer.pts.size() < 3) {
          throw GeometryError("layer " + std::to_string(layer.z_index) +
                              ": outer ring needs at least 3 points");
        }
        if (ring_self_intersects(poly.outer)) {
          throw GeometryError("layer " + std::to_string(layer.z_index) +
                              ": self-intersecting outer ring");
        }
        // Normalize orientations: outer CCW, holes CW.
        if (ring_signed_area(poly.outer) < 0) {
          std::reverse(poly.outer.pts.begin(), poly.outer.pts.end());
        }
        if (jp.contains("holes")) {
          for (const auto& jh : jp.at("holes")) {
            Ring hole = ring_from_json(jh);
            if (hole.pts.size() < 3) {
              throw GeometryError("layer " + std::to_string(layer.z_index) +
                                  ": hole ring needs at least 3 points");
            }
            if (ring_self_intersects(hole)) {
              throw GeometryError("layer " + std::to_string(layer.z_index) +
                                  ": self-intersecting hole ring");
            }
            if (ring_signed_area(hole) > 0) {
              std::reverse(hole.pts.begin(), hole.pts.end());
            }
            poly.holes.push_back(std::move(hole));
          }
        }
        layer.polygons.push_back(std::move(poly));
      }
      stack.layers.push_back(std::move(layer));
    }
  } catch (const nlohmann::json::exception& e) {
    throw GeometryError(std::string("layer stack format error: ") + e.what());
  }
  std::stable_sort(stack.layers.begin(), stack.layers.end(),
                   [](const LayerGeometry& a, const LayerGeometry& b) {
                     return a.z_index < b.z_index;
                   });
  return stack;
}

LayerStack load_layer_stack(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw GeometryError("cannot open layer stack file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return layer_stack_from_json(ss.str());
}

std::string layer_stack_to_json(const LayerStack& stack) {
  nlohmann::json j;
  j["pixel_size_mm"] = stack.pixel_size_mm;
  j["layer_height_mm"] = stack.layer_height_mm;
  j["layers"] = nlohmann::json::array();
  for (const auto& layer : stack.layers) {
    nlohmann::json jl;
    jl["z_index"] = layer.z_index;
    jl["polygons"] = nlohmann::json::array();
    for (const auto& poly : layer.polygons) {
      nlohmann::json jp;
      jp["outer"] = ring_to_json(poly.outer);
      jp["holes"] = nlohmann::json::array();
      for (const auto& h : poly.holes) jp["holes"].push_back(ring_to_json(h));
      jl["polygons"].push_back(std::move(jp));
    }
    j["layers"].push_back(std::move(jl));
  }
  return j.dump(2);
}

void save_layer_stack(const LayerStack& stack, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw GeometryError("cannot write layer stack file: " + path);
  out << layer_stack_to_json(stack) << "\n";
}

bool pixel_inside_polygon(const GeneralPolygon& polygon, double pixel_size,
                          std::int64_t gx, std::int64_t gy) {
  const double x0 = gx * pixel_size;
  const double y0 = gy * pixel_size;
  const double x1 = x0 + pixel_size;
  const double y1 = y0 + pixel_size;
  const Vec2 corners[4] = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
  for (const auto& c : corners) {
    if (!point_in_polygon(polygon, c)) return false;
  }
  auto ring_crosses = [&](const Ring& r) {
    const std::size_t n = r.pts.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (segment_crosses_open_box(r.pts[i], r.pts[(i + 1) % n], x0, y0, x1, y1)) {
        return true;
      }
    }
    return false;
  };
  if (ring_crosses(polygon.outer)) return false;
  for (const auto& h : polygon.holes) {
    if (ring_crosses(h)) return false;
  }
  return true;
}

IopRegion rasterize(const GeneralPolygon& polygon, double pixel_size) {
  if (pixel_size <= 0) throw GeometryError("pixel_size must be positive");
  double minx = std::numeric_limits<double>::max(), maxx = -minx;
  double miny = minx, maxy = -minx;
  for (const auto& p : polygon.outer.pts) {
    minx = std::min(minx, p.x);
    maxx = std::max(maxx, p.x);
    miny = std::min(miny, p.y);
    maxy = std::max(maxy, p.y);
  }
  // Candidate pixels: those whose square could fit in the bbox.
  const auto lo_index = [&](double v) {
    return static_cast<std::int64_t>(std::ceil(v / pixel_size - kEps));
  };
  const auto hi_index = [&](double v) {
    return static_cast<std::int64_t>(std::floor(v / pixel_size + kEps)) - 1;
  };
  const std::int64_t ix0 = lo_index(minx), ix1 = hi_index(maxx);
  const std::int64_t iy0 = lo_index(miny), iy1 = hi_index(maxy);
  if (ix1 < ix0 || iy1 < iy0) {
    throw EmptyRasterError("polygon thinner than one pixel everywhere");
  }
  const std::int64_t w = ix1 - ix0 + 1;
  const std::int64_t h = iy1 - iy0 + 1;
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(w * h), 0);
  std::int64_t found_minx = ix1 + 1, found_maxx = ix0 - 1;
  std::int64_t found_miny = iy1 + 1, found_maxy = iy0 - 1;
  for (std::int64_t gy = iy0; gy <= iy1; ++gy) {
    for (std::int64_t gx = ix0; gx <= ix1; ++gx) {
      if (pixel_inside_polygon(polygon, pixel_size, gx, gy)) {
        mask[static_cast<std::size_t>((gy - iy0) * w + (gx - ix0))] = 1;
        found_minx = std::min(found_minx, gx);
        found_maxx = std::max(found_maxx, gx);
        found_miny = std::min(found_miny, gy);
        found_maxy = std::max(found_maxy, gy);
      }
    }
  }
  if (found_maxx < found_minx) {
    throw EmptyRasterError("polygon thinner than one pixel everywhere");
  }
  IopRegion region;
  region.origin = {static_cast<std::int32_t>(found_minx),
                   static_cast<std::int32_t>(found_miny)};
  region.width = static_cast<std::int32_t>(found_maxx - found_minx + 1);
  region.height = static_cast<std::int32_t>(found_maxy - found_miny + 1);
  region.mask.assign(static_cast<std::size_t>(region.width) * region.height, 0);
  for (std::int64_t gy = found_miny; gy <= found_maxy; ++gy) {
    for (std::int64_t gx = found_minx; gx <= found_maxx; ++gx) {
      if (mask[static_cast<std::size_t>((gy - iy0) * w + (gx - ix0))]) {
        region.mask[static_cast<std::size_t>((gy - found_miny) * region.width +
                                             (gx - found_minx))] = 1;
      }
    }
  }
  return region;
}

std::vector<IopRegion> connected_components(const IopRegion& region) {
  std::vector<IopRegion> out;
  std::vector<std::int32_t> label(region.mask.size(), -1);
  std::int32_t next = 0;
  std::vector<std::pair<std::int32_t, std::int32_t>> stack;
  for (std::int32_t y = 0; y < region.height; ++y) {
    for (std::int32_t x = 0; x < region.width; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * region.width + x;
      if (!region.mask[idx] || label[idx] >= 0) continue;
      const std::int32_t comp = next++;
      std::int32_t minx = x, maxx = x, miny = y, maxy = y;
      stack.push_back({x, y});
      label[idx] = comp;
      while (!stack.empty()) {
        auto [cx, cy] = stack.back();
        stack.pop_back();
        minx = std::min(minx, cx);
        maxx = std::max(maxx, cx);
        miny = std::min(miny, cy);
        maxy = std::max(maxy, cy);
        const std::int32_t dx[4] = {-1, 1, 0, 0};
        const std::int32_t dy[4] = {0, 0, -1, 1};
        for (int d = 0; d < 4; ++d) {
          const std::int32_t nx = cx + dx[d];
          const std::int32_t ny = cy + dy[d];
          if (nx < 0 || ny < 0 || nx >= region.width || ny >= region.height) continue;
          const std::size_t nidx = static_cast<std::size_t>(ny) * region.width + nx;
          if (region.mask[nidx] && label[nidx] < 0) {
            label[nidx] = comp;
            stack.push_back({nx, ny});
          }
        }
      }
      IopRegion r;
      r.origin = {region.origin.x + minx, region.origin.y + miny};
      r.width = maxx - minx + 1;
      r.height = maxy - miny + 1;
      r.mask.assign(static_cast<std::size_t>(r.width) * r.height, 0);
      out.push_back(std::move(r));
    }
  }
  for (std::int32_t y = 0; y < region.height; ++y) {
    for (std::int32_t x = 0; x < region.width; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * region.width + x;
      const std::int32_t comp = label[idx];
      if (comp < 0) continue;
      IopRegion& r = out[static_cast<std::size_t>(comp)];
      const std::int32_t lx = region.origin.x + x - r.origin.x;
      const std::int32_t ly = region.origin.y + y - r.origin.y;
      r.mask[static_cast<std::size_t>(ly) * r.width + lx] = 1;
    }
  }
  return out;
}

DualGraph build_dual_graph(const IopRegion& region) {
  DualGraph g;
  g.bbox_origin = region.origin;
  g.bbox_w = region.width;
  g.bbox_h = region.height;
  g.id_grid.assign(static_cast<std::size_t>(region.width) * region.height, -1);
  for (std::int32_t y = 0; y < region.height; ++y) {
    for (std::int32_t x = 0; x < region.width; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * region.width + x;
      if (!region.mask[idx]) continue;
      g.id_grid[idx] = g.n();
      g.vertices.push_back({region.origin.x + x, region.origin.y + y});
    }
  }
  g.neighbor.assign(g.vertices.size(), {-1, -1, -1, -1});
  g.edge_at.assign(g.vertices.size(), {-1, -1, -1, -1});
  for (std::int32_t id = 0; id < g.n(); ++id) {
    const GridPoint p = g.vertices[static_cast<std::size_t>(id)];
    for (int d = 0; d < 4; ++d) {
      const GridPoint q{p.x + DualGraph::kDirDelta[d][0],
                        p.y + DualGraph::kDirDelta[d][1]};
      const std::int32_t nid = g.id_at(q);
      g.neighbor[static_cast<std::size_t>(id)][d] = nid;
      if (nid >= 0 && nid > id) {
        const std::int32_t eid = static_cast<std::int32_t>(g.edges.size());
        g.edges.push_back({id, nid, 1.0});
        g.edge_at[static_cast<std::size_t>(id)][d] = eid;
      }
    }
  }
  // Fill back-references for edges created from the lower endpoint.
  for (std::int32_t id = 0; id < g.n(); ++id) {
    for (int d = 0; d < 4; ++d) {
      const std::int32_t nid = g.neighbor[static_cast<std::size_t>(id)][d];
      if (nid >= 0 && g.edge_at[static_cast<std::size_t>(id)][d] < 0) {
        g.edge_at[static_cast<std::size_t>(id)][d] =
            g.edge_at[static_cast<std::size_t>(nid)][d ^ 1];
      }
    }
  }
  return g;
}

IopRegion union_regions(const std::vector<IopRegion>& regions) {
  if (regions.empty()) throw GeometryError("union of zero regions");
  std::int64_t minx = std::numeric_limits<std::int64_t>::max(), maxx = -minx;
  std::int64_t miny = minx, maxy = -minx;
  for (const auto& r : regions) {
    minx = std::min<std::int64_t>(minx, r.origin.x);
    miny = std::min<std::int64_t>(miny, r.origin.y);
    maxx = std::max<std::int64_t>(maxx, r.origin.x + r.width - 1);
    maxy = std::max<std::int64_t>(maxy, r.origin.y + r.height - 1);
  }
  IopRegion out;
  out.origin = {static_cast<std::int32_t>(minx), static_cast<std::int32_t>(miny)};
  out.width = static_cast<std::int32_t>(maxx - minx + 1);
  out.height = static_cast<std::int32_t>(maxy - miny + 1);
  out.mask.assign(static_cast<std::size_t>(out.width) * out.height, 0);
  for (const auto& r : regions) {
    for (std::int32_t y = 0; y < r.height; ++y) {
      for (std::int32_t x = 0; x < r.width; ++x) {
        if (!r.mask[static_cast<std::size_t>(y) * r.width + x]) continue;
        const std::int32_t gx = r.origin.x + x - out.origin.x;
        const std::int32_t gy = r.origin.y + y - out.origin.y;
        out.mask[static_cast<std::size_t>(gy) * out.width + gx] = 1;
      }
    }
  }
  return out;
}

}  // namespace infill
