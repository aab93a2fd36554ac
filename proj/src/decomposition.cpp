#include "infill/decomposition.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace infill {

namespace {

enum class Occupancy { Empty, Full, Mixed };

Occupancy classify(const IopRegion& region, GridPoint origin, std::int32_t size) {
  // Cells often poke out of the region bbox; clamp the scan and account for
  // the out-of-bbox part as empty.
  const std::int64_t x0 = std::max<std::int64_t>(origin.x, region.origin.x);
  const std::int64_t y0 = std::max<std::int64_t>(origin.y, region.origin.y);
  const std::int64_t x1 =
      std::min<std::int64_t>(origin.x + size, region.origin.x + region.width);
  const std::int64_t y1 =
      std::min<std::int64_t>(origin.y + size, region.origin.y + region.height);
  if (x0 >= x1 || y0 >= y1) return Occupancy::Empty;
  std::int64_t inside = 0;
  for (std::int64_t y = y0; y < y1; ++y) {
    for (std::int64_t x = x0; x < x1; ++x) {
      if (region.at(x, y)) ++inside;
    }
  }
  if (inside == 0) return Occupancy::Empty;
  const std::int64_t total = static_cast<std::int64_t>(size) * size;
  if (inside == total) return Occupancy::Full;
  return Occupancy::Mixed;
}

void subdivide(const IopRegion& region, GridPoint origin, std::int32_t size,
               std::int32_t depth, std::int64_t delta, std::vector<QuadCell>& leaves) {
  const Occupancy occ = classify(region, origin, size);
  if (occ == Occupancy::Empty) return;
  if (occ == Occupancy::Full &&
      static_cast<std::int64_t>(size) * size <= delta) {
    leaves.push_back({origin, size, depth, CellStatus::FullyInside});
    return;
  }
  // Mixed, or full but larger than delta: split into quadrants.
  const std::int32_t half = size / 2;
  subdivide(region, origin, half, depth + 1, delta, leaves);
  subdivide(region, {origin.x + half, origin.y}, half, depth + 1, delta, leaves);
  subdivide(region, {origin.x, origin.y + half}, half, depth + 1, delta, leaves);
  subdivide(region, {origin.x + half, origin.y + half}, half, depth + 1, delta,
            leaves);
}

// One level of the Hilbert recursion: a cell with entry corner E and exit
// corner X (sharing an edge) decomposes into four quadrants visited in order,
// each again with edge-adjacent entry/exit corners.
struct HilbertFrame {
  GridPoint origin;
  std::int32_t size = 0;
  GridPoint entry, exit;
};

GridPoint quadrant_origin(const HilbertFrame& f, GridPoint parent_corner) {
  const std::int32_t half = f.size / 2;
  return {parent_corner.x == f.origin.x ? f.origin.x : f.origin.x + half,
          parent_corner.y == f.origin.y ? f.origin.y : f.origin.y + half};
}

std::array<HilbertFrame, 4> hilbert_children(const HilbertFrame& f) {
  const std::int32_t half = f.size / 2;
  const std::int32_t ux = (f.exit.x - f.entry.x) / f.size;
  const std::int32_t uy = (f.exit.y - f.entry.y) / f.size;
  // Inward perpendicular from the entry-exit edge.
  std::int32_t wx = 0, wy = 0;
  if (ux != 0) {
    wy = (f.entry.y == f.origin.y) ? 1 : -1;
  } else {
    wx = (f.entry.x == f.origin.x) ? 1 : -1;
  }
  const GridPoint e = f.entry;
  const GridPoint x = f.exit;
  std::array<HilbertFrame, 4> out;
  out[0] = {quadrant_origin(f, e), half, e, {e.x + half * wx, e.y + half * wy}};
  out[1] = {quadrant_origin(f, {e.x + f.size * wx, e.y + f.size * wy}),
            half,
            {e.x + half * wx, e.y + half * wy},
            {e.x + half * wx + half * ux, e.y + half * wy + half * uy}};
  out[2] = {quadrant_origin(f, {x.x + f.size * wx, x.y + f.size * wy}),
            half,
            {e.x + half * (ux + wx), e.y + half * (uy + wy)},
            {x.x + half * wx, x.y + half * wy}};
  out[3] = {quadrant_origin(f, x), half, {x.x + half * wx, x.y + half * wy}, x};
  return out;
}

}  // namespace

std::array<GridPoint, 4> root_corners(GridPoint o, std::int32_t q) {
  const std::int32_t s = 1 << q;
  return {GridPoint{o.x, o.y}, GridPoint{o.x + s, o.y}, GridPoint{o.x, o.y + s},
          GridPoint{o.x + s, o.y + s}};
}

Quadtree build_quadtree(const IopRegion& region, std::int64_t delta,
                        GridPoint root_origin, std::int32_t root_exponent) {
  if (delta < 1) throw DecompositionError("delta must be >= 1");
  Quadtree tree;
  tree.root_origin = root_origin;
  tree.root_exponent = root_exponent;
  tree.delta = delta;
  subdivide(region, root_origin, 1 << root_exponent, 0, delta, tree.leaves);
  return tree;
}

Quadtree build_quadtree(const IopRegion& region, std::int64_t delta) {
  if (region.pixel_count() == 0) throw DecompositionError("empty region");
  std::int32_t q = 0;
  while ((1 << q) < std::max(region.width, region.height)) ++q;
  return build_quadtree(region, delta, region.origin, q);
}

CellSequence hilbert_order(const Quadtree& tree, GridPoint global_entry,
                           GridPoint global_exit) {
  const auto corners = root_corners(tree.root_origin, tree.root_exponent);
  auto is_corner = [&](GridPoint p) {
    return std::find(corners.begin(), corners.end(), p) != corners.end();
  };
  if (!is_corner(global_entry) || !is_corner(global_exit)) {
    throw DecompositionError("entry/exit must be corners of the root cell");
  }
  const bool share_edge = (global_entry.x == global_exit.x) !=
                          (global_entry.y == global_exit.y);
  if (!share_edge) {
    throw DecompositionError("entry/exit corners must share a root edge");
  }

  CellSequence seq;
  seq.root_origin = tree.root_origin;
  seq.root_exponent = tree.root_exponent;
  seq.global_entry = global_entry;
  seq.global_exit = global_exit;

  const std::int32_t q = tree.root_exponent;
  struct Keyed {
    std::uint64_t low;
    QuadCell cell;
    GridPoint entry, exit;
  };
  std::vector<Keyed> keyed;
  keyed.reserve(tree.leaves.size());
  for (const QuadCell& leaf : tree.leaves) {
    HilbertFrame frame{tree.root_origin, 1 << q, global_entry, global_exit};
    std::uint64_t index = 0;
    std::int32_t depth = 0;
    while (frame.size > leaf.size) {
      const auto children = hilbert_children(frame);
      int rank = -1;
      for (int k = 0; k < 4; ++k) {
        const auto& c = children[static_cast<std::size_t>(k)];
        if (leaf.origin.x >= c.origin.x && leaf.origin.x < c.origin.x + c.size &&
            leaf.origin.y >= c.origin.y && leaf.origin.y < c.origin.y + c.size) {
          rank = k;
          break;
        }
      }
      if (rank < 0) throw DecompositionError("leaf outside root cell");
      index = index * 4 + static_cast<std::uint64_t>(rank);
      frame = children[static_cast<std::size_t>(rank)];
      ++depth;
    }
    if (frame.origin.x != leaf.origin.x || frame.origin.y != leaf.origin.y) {
      throw DecompositionError("leaf not aligned to the quadtree lattice");
    }
    const std::uint64_t low = index << (2 * (q - depth));
    keyed.push_back({low, leaf, frame.entry, frame.exit});
  }
  std::sort(keyed.begin(), keyed.end(),
            [](const Keyed& a, const Keyed& b) { return a.low < b.low; });
  for (auto& k : keyed) {
    seq.cells.push_back(k.cell);
    seq.entry_corner.push_back(k.entry);
    seq.exit_corner.push_back(k.exit);
    seq.hilbert_low.push_back(k.low);
  }
  seq.s_vertex.assign(seq.cells.size(), GridPoint{});
  seq.t_vertex.assign(seq.cells.size(), GridPoint{});
  seq.s_id.assign(seq.cells.size(), -1);
  seq.t_id.assign(seq.cells.size(), -1);
  return seq;
}

namespace {

GridPoint nearest_pixel(const QuadCell& cell, GridPoint corner) {
  return {corner.x == cell.origin.x ? cell.origin.x : corner.x - 1,
          corner.y == cell.origin.y ? cell.origin.y : corner.y - 1};
}

}  // namespace

void assign_entry_exit(CellSequence& seq) {
  for (std::size_t i = 0; i < seq.cells.size(); ++i) {
    seq.s_vertex[i] = nearest_pixel(seq.cells[i], seq.entry_corner[i]);
    seq.t_vertex[i] = nearest_pixel(seq.cells[i], seq.exit_corner[i]);
  }
}

void assign_entry_exit(CellSequence& seq, std::span<const DualGraph> cell_graphs) {
  assign_entry_exit(seq);
  for (std::size_t i = 0; i < seq.cells.size(); ++i) {
    seq.s_id[i] = cell_graphs[i].id_at(seq.s_vertex[i]);
    seq.t_id[i] = cell_graphs[i].id_at(seq.t_vertex[i]);
    if (seq.s_id[i] < 0 || seq.t_id[i] < 0) {
      throw DecompositionError("entry/exit vertex missing from cell graph");
    }
  }
}

DualGraph build_cell_graph(const QuadCell& cell) {
  IopRegion r;
  r.origin = cell.origin;
  r.width = cell.size;
  r.height = cell.size;
  r.mask.assign(static_cast<std::size_t>(cell.size) * cell.size, 1);
  return build_dual_graph(r);
}

std::string decomposition_svg(const IopRegion& region, const CellSequence& seq) {
  const double scale = 24.0;
  const double pad = 8.0;
  const double w = region.width * scale + 2 * pad;
  const double h = region.height * scale + 2 * pad;
  auto px = [&](double gx) { return pad + (gx - region.origin.x) * scale; };
  auto py = [&](double gy) { return pad + (region.origin.y + region.height - gy) * scale; };
  char buf[256];
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\""
      << h << "\">\n";
  // Region pixels.
  for (std::int32_t y = 0; y < region.height; ++y) {
    for (std::int32_t x = 0; x < region.width; ++x) {
      if (!region.mask[static_cast<std::size_t>(y) * region.width + x]) continue;
      std::snprintf(buf, sizeof(buf),
                    "<rect x=\"%.3f\" y=\"%.3f\" width=\"%.3f\" height=\"%.3f\" "
                    "fill=\"#dce9f5\" stroke=\"none\"/>\n",
                    px(region.origin.x + x), py(region.origin.y + y + 1), scale, scale);
      svg << buf;
    }
  }
  // Cell boundaries.
  for (const QuadCell& c : seq.cells) {
    std::snprintf(buf, sizeof(buf),
                  "<rect x=\"%.3f\" y=\"%.3f\" width=\"%.3f\" height=\"%.3f\" "
                  "fill=\"none\" stroke=\"#888888\" stroke-width=\"1\"/>\n",
                  px(c.origin.x), py(c.origin.y + c.size), c.size * scale,
                  c.size * scale);
    svg << buf;
  }
  // Hilbert polyline through cell centers.
  if (!seq.cells.empty()) {
    svg << "<polyline fill=\"none\" stroke=\"#e754a6\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < seq.cells.size(); ++i) {
      const QuadCell& c = seq.cells[i];
      std::snprintf(buf, sizeof(buf), "%s%.3f,%.3f", i ? " " : "",
                    px(c.origin.x + c.size / 2.0), py(c.origin.y + c.size / 2.0));
      svg << buf;
    }
    svg << "\"/>\n";
  }
  // Entry/exit corner dots.
  for (std::size_t i = 0; i < seq.cells.size(); ++i) {
    std::snprintf(buf, sizeof(buf),
                  "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"3\" fill=\"#111111\"/>\n",
                  px(seq.entry_corner[i].x), py(seq.entry_corner[i].y));
    svg << buf;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace infill
