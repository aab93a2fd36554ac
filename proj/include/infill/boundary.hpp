#pragma once

#include <vector>

#include "infill/geometry.hpp"
#include "infill/planner.hpp"

namespace infill {

// Print-path vertices whose pixel has a side facing polygon area the pixel
// region does not cover. Polygons in lattice units (pixel size 1).
std::vector<GridPoint> boundary_vertices(const LayerPlan& plan,
                                         const std::vector<GeneralPolygon>& polygons);

// Extends the rectilinear toolpath to the true polygon boundary: edges whose
// endpoints are both exposed in a common direction are replaced by a staple
// through their boundary projections; remaining exposed vertices get an
// out-and-back extension. Each vertex is projected at most once; projections
// that would cross an earlier one are dropped with a warning.
LayerPlan project_to_boundary(LayerPlan plan,
                              const std::vector<GeneralPolygon>& polygons);

}  // namespace infill
