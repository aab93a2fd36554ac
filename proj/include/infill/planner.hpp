#pragma once

#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "infill/config.hpp"
#include "infill/decomposition.hpp"
#include "infill/geometry.hpp"
#include "infill/sequencing.hpp"
#include "infill/solver.hpp"

namespace infill {

// One extruder move in lattice units (pixel size 1). Dual vertices sit at
// pixel centers (x+0.5, y+0.5); io converts to mm. `lattice` marks a
// unit-length axis-parallel move between the dual vertices a and b.
struct ToolMove {
  enum class Kind { Print, Idle };
  Kind kind = Kind::Print;
  Vec2 from, to;
  bool lattice = false;
  GridPoint a, b;
};

struct LayerPlan {
  int layer_index = 0;
  double z_mm = 0.0;
  bool skipped = false;
  std::vector<std::string> warnings;
  std::vector<ToolMove> moves;

  std::optional<double> overlap_with_previous;  // absent on the first layer
  std::optional<double> turn_ratio_value;
  double idle_length = 0.0;  // lattice units, rectilinear
  int cell_count = 0;        // joined cells
  int flagged_cells = 0;

  // Render/debug data; derivable, not serialized.
  IopRegion region;
  std::vector<QuadCell> cells;
  std::vector<std::pair<GridPoint, GridPoint>> joined_entries;  // (s,t) pairs
};

struct StackPlan {
  SolverConfig config;
  double pixel_size_mm = 1.0;
  double layer_height_mm = 0.2;
  std::vector<LayerPlan> layers;
};

struct EdgeKey {
  GridPoint a, b;  // (a.y,a.x) <= (b.y,b.x)
  friend bool operator==(const EdgeKey&, const EdgeKey&) = default;
};
struct EdgeKeyHash {
  std::size_t operator()(const EdgeKey& k) const {
    std::uint64_t h = 1469598103934665603ull;
    for (std::int64_t v : {static_cast<std::int64_t>(k.a.x), static_cast<std::int64_t>(k.a.y),
                           static_cast<std::int64_t>(k.b.x), static_cast<std::int64_t>(k.b.y)}) {
      h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull;
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};
using EdgeSet = std::unordered_set<EdgeKey, EdgeKeyHash>;

EdgeKey make_edge_key(GridPoint p, GridPoint q);

// The unit print edges a layer actually deposits (post projection; converted
// idle edges excluded).
EdgeSet realized_print_edges(const LayerPlan& plan);

// Neutral keeps weights at 1; Maximize gives edges that coincide with a
// previous-layer print edge weight max_weight (default 0.5); Minimize gives
// them min_weight (default 1.5). Topology, s and t are untouched.
DualGraph apply_overlap_weights(DualGraph graph, const EdgeSet& previous_layer_edges,
                                OverlapMode mode, double max_weight = 0.5,
                                double min_weight = 1.5);

// Full single-layer pipeline from already-rasterized components; entry point
// for planning and for tests that build regions directly. Boundary
// projection is not applied here.
LayerPlan plan_components(const std::vector<IopRegion>& components,
                          const EdgeSet& previous_layer_edges,
                          const SolverConfig& config, int layer_index,
                          double z_mm, bool flip_corners);

// Rasterize -> components -> decompose -> sequence -> solve -> stitch ->
// project to the polygon boundary. Polygons in mm.
LayerPlan plan_layer(const std::vector<GeneralPolygon>& polygons_mm,
                     const LayerPlan* previous, const SolverConfig& config,
                     int layer_index, double z_mm, double pixel_size_mm);

StackPlan plan_stack(const LayerStack& stack, const SolverConfig& config);

// Fraction of the current layer's print edges that coincide with the
// previous layer's. Absent when the current layer has no print edges.
std::optional<double> overlap_ratio(const LayerPlan& current, const LayerPlan& previous);

// 90-degree turn events over all interior direction events of the layer's
// continuous print runs. Absent when there are no interior events.
std::optional<double> turn_ratio(const LayerPlan& plan);

// Clears the per-stack solution memo (test support).
void clear_solution_memo();

}  // namespace infill
