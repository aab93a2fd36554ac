#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace infill {

// Lattice point. Used both for pixel corners and for dual-graph vertices:
// a dual vertex sits at the center of the pixel with this index pair.
struct GridPoint {
  std::int32_t x = 0;
  std::int32_t y = 0;
  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

enum class Parity { Even, Odd };

inline Parity vertex_parity(GridPoint v) {
  return ((v.x + v.y) & 1) == 0 ? Parity::Even : Parity::Odd;
}

// Same parity in the component-wise sense: both coordinates even, or both odd,
// matched component by component. Strictly stronger than equal vertex_parity.
inline bool same_coordinate_parity(GridPoint a, GridPoint b) {
  return ((a.x ^ b.x) & 1) == 0 && ((a.y ^ b.y) & 1) == 0;
}

inline std::int64_t rectilinear_gap(GridPoint a, GridPoint b) {
  return std::abs(static_cast<std::int64_t>(a.x) - b.x) +
         std::abs(static_cast<std::int64_t>(a.y) - b.y);
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

// A closed ring of real-valued points. The closing edge back to pts.front()
// is implicit; a repeated last point is stripped on load.
struct Ring {
  std::vector<Vec2> pts;
};

struct GeneralPolygon {
  Ring outer;                // counterclockwise
  std::vector<Ring> holes;   // clockwise
};

struct LayerGeometry {
  int z_index = 0;
  std::vector<GeneralPolygon> polygons;
};

struct LayerStack {
  double pixel_size_mm = 1.0;
  double layer_height_mm = 0.2;
  std::vector<LayerGeometry> layers;  // bottom-up
};

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by rasterize() when no pixel fits inside the polygon.
class EmptyRasterError : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

// Pixel bitmap of an integral orthogonal polygon. `origin` is the global
// index of mask cell (0,0); pixel (gx,gy) covers the unit square
// [gx,gx+1]x[gy,gy+1] in lattice units.
struct IopRegion {
  GridPoint origin;
  std::int32_t width = 0;
  std::int32_t height = 0;
  std::vector<std::uint8_t> mask;  // row-major: mask[y*width + x]

  bool at(std::int64_t gx, std::int64_t gy) const {
    const std::int64_t lx = gx - origin.x;
    const std::int64_t ly = gy - origin.y;
    if (lx < 0 || ly < 0 || lx >= width || ly >= height) return false;
    return mask[static_cast<std::size_t>(ly) * width + static_cast<std::size_t>(lx)] != 0;
  }
  bool at(GridPoint p) const { return at(p.x, p.y); }

  std::int64_t pixel_count() const {
    std::int64_t n = 0;
    for (auto m : mask) n += m ? 1 : 0;
    return n;
  }
  bool is_full_rectangle() const {
    return pixel_count() == static_cast<std::int64_t>(width) * height;
  }
};

// 4-neighbor grid graph over the pixel centers of a region.
// Vertices are stored in row-major order (y, then x), which also defines the
// deterministic vertex ids used for tie-breaking throughout the solver.
struct DualGraph {
  enum Dir { West = 0, East = 1, South = 2, North = 3 };
  static constexpr std::array<std::array<std::int32_t, 2>, 4> kDirDelta = {
      {{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};
  static Dir opposite(Dir d) { return static_cast<Dir>(d ^ 1); }

  struct Edge {
    std::int32_t u = -1;  // u < v
    std::int32_t v = -1;
    double weight = 1.0;
  };

  std::vector<GridPoint> vertices;
  std::vector<std::array<std::int32_t, 4>> neighbor;  // vertex id per Dir, -1 absent
  std::vector<std::array<std::int32_t, 4>> edge_at;   // edge id per Dir, -1 absent
  std::vector<Edge> edges;
  std::int32_t s = -1;
  std::int32_t t = -1;

  // Bounding box + id grid for O(1) coordinate lookup.
  GridPoint bbox_origin;
  std::int32_t bbox_w = 0;
  std::int32_t bbox_h = 0;
  std::vector<std::int32_t> id_grid;  // -1 where empty

  std::int32_t id_at(GridPoint p) const {
    const std::int64_t lx = static_cast<std::int64_t>(p.x) - bbox_origin.x;
    const std::int64_t ly = static_cast<std::int64_t>(p.y) - bbox_origin.y;
    if (lx < 0 || ly < 0 || lx >= bbox_w || ly >= bbox_h) return -1;
    return id_grid[static_cast<std::size_t>(ly) * bbox_w + static_cast<std::size_t>(lx)];
  }
  std::int32_t n() const { return static_cast<std::int32_t>(vertices.size()); }
};

double ring_signed_area(const Ring& r);
double polygon_area(const GeneralPolygon& p);  // outer minus holes

// Inclusive containment: boundary points count as inside.
bool point_in_polygon(const GeneralPolygon& poly, Vec2 p);

// Loads the layer-stack JSON format. Throws GeometryError with layer index /
// byte offset context on malformed input.
LayerStack load_layer_stack(const std::string& path);
void save_layer_stack(const LayerStack& stack, const std::string& path);
std::string layer_stack_to_json(const LayerStack& stack);
LayerStack layer_stack_from_json(const std::string& text);

// Largest set of pixels whose closed unit squares (scaled by pixel_size) are
// fully contained in the polygon. The grid is the global lattice of
// pixel_size multiples, so identical polygons rasterize identically on every
// layer. Result may be disconnected. Throws EmptyRasterError when no pixel
// fits.
IopRegion rasterize(const GeneralPolygon& polygon, double pixel_size);

// Single-pixel containment test used by rasterize; exposed for tests.
bool pixel_inside_polygon(const GeneralPolygon& polygon, double pixel_size,
                          std::int64_t gx, std::int64_t gy);

// Partition by 4-connectivity. Components are returned in row-major order of
// their lowest pixel.
std::vector<IopRegion> connected_components(const IopRegion& region);

// One vertex per true pixel, edge between every unit-distance pair,
// weights 1, s/t unset.
DualGraph build_dual_graph(const IopRegion& region);

// Union of several regions into one bitmap.
IopRegion union_regions(const std::vector<IopRegion>& regions);

}  // namespace infill
