#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "infill/geometry.hpp"

namespace infill {

enum class CellStatus { FullyInside, Mixed };

struct QuadCell {
  GridPoint origin;
  std::int32_t size = 1;  // power of two, pixel units
  std::int32_t depth = 0;
  CellStatus status = CellStatus::FullyInside;

  std::int64_t area() const { return static_cast<std::int64_t>(size) * size; }
  bool contains(GridPoint p) const {
    return p.x >= origin.x && p.x < origin.x + size && p.y >= origin.y &&
           p.y < origin.y + size;
  }
};

struct Quadtree {
  GridPoint root_origin;
  std::int32_t root_exponent = 0;  // root cell is 2^q x 2^q
  std::int64_t delta = 1;
  std::vector<QuadCell> leaves;  // all FullyInside
};

// Hilbert-ordered leaf cells. entry/exit corners are the lattice points where
// the order-infinity Hilbert curve enters and exits each cell; they always
// share a cell edge (never diagonal). s/t are the dual vertices (pixel
// indices) nearest the entry/exit corners.
struct CellSequence {
  GridPoint root_origin;
  std::int32_t root_exponent = 0;
  GridPoint global_entry, global_exit;
  std::vector<QuadCell> cells;
  std::vector<GridPoint> entry_corner;
  std::vector<GridPoint> exit_corner;
  std::vector<std::uint64_t> hilbert_low;  // order-q index interval start
  std::vector<GridPoint> s_vertex;         // set by assign_entry_exit
  std::vector<GridPoint> t_vertex;
  std::vector<std::int32_t> s_id;  // ids in the per-cell dual graphs (graphs overload)
  std::vector<std::int32_t> t_id;

  std::size_t size() const { return cells.size(); }
};

class DecompositionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Three-phase quadtree build: smallest enclosing power-of-two root cell over
// the region's bounding box, adaptive subdivision until cells are fully
// inside or outside (outside dropped), then area-based subdivision down to
// delta. Leaves are FullyInside only.
Quadtree build_quadtree(const IopRegion& region, std::int64_t delta);

// Same, over an externally fixed root cell (shared across the components of
// one layer so Hilbert indices are comparable).
Quadtree build_quadtree(const IopRegion& region, std::int64_t delta,
                        GridPoint root_origin, std::int32_t root_exponent);

// Returns the four corners of the root cell (SW, SE, NW, NE).
std::array<GridPoint, 4> root_corners(GridPoint root_origin, std::int32_t root_exponent);

// Sorts the leaves by the Hilbert order induced by a curve entering the root
// cell at global_entry and exiting at global_exit (two root corners sharing an
// edge; diagonal pairs rejected). Fills per-cell entry/exit corners.
CellSequence hilbert_order(const Quadtree& tree, GridPoint global_entry,
                           GridPoint global_exit);

// Per cell: s = dual vertex nearest the entry corner, t = nearest the exit
// corner. Cells are full squares, so the nearest pixel is the corner pixel
// and needs no search. The overload with graphs also records vertex ids.
void assign_entry_exit(CellSequence& seq);
void assign_entry_exit(CellSequence& seq, std::span<const DualGraph> cell_graphs);

// Dual graph of one (fully inside) cell.
DualGraph build_cell_graph(const QuadCell& cell);

// SVG of the decomposition with the Hilbert polyline overlay.
std::string decomposition_svg(const IopRegion& region, const CellSequence& seq);

}  // namespace infill
