#pragma once

#include <ostream>
#include <string>

#include "infill/planner.hpp"

namespace infill {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GcodeParams {
  double extrusion_multiplier_at_turns = 1.10;
  double turn_zone_mm = 1.0;  // span on each side of a 90-degree turn
  double feedrate_mm_s = 30.0;
  double travel_feedrate_mm_s = 120.0;
  double extrusion_width_mm = 0.4;
  double filament_diameter_mm = 1.75;
  double hotend_temperature_c = 200.0;
  double bed_temperature_c = 45.0;
};

// Versioned, lossless plan serialization. Move coordinates stay in lattice
// units; pixel_size_mm converts to physical units.
std::string plan_to_json(const StackPlan& plan);
StackPlan plan_from_json(const std::string& text);
void save_plan(const StackPlan& plan, const std::string& path);
StackPlan load_plan(const std::string& path);

// Marlin-flavored subset: G0 travel, G1 with extrusion, G92 E resets, M104 /
// M140 temperatures. Extrusion runs 10% hot (by default) for the span
// adjacent to each 90-degree turn. Throws on non-chaining moves.
void emit_gcode(const StackPlan& plan, const GcodeParams& params, std::ostream& out);

struct SvgOptions {
  double scale = 24.0;  // svg units per pixel
  bool draw_cells = true;
  bool draw_entries = true;
};

// Deterministic layer render: print edges red, idle dotted pink, entry dots
// green, exit dots blue, cell boundaries grey.
std::string layer_svg(const LayerPlan& plan, const SvgOptions& options = {});

// Per-layer metrics table.
void write_metrics_csv(const StackPlan& plan, std::ostream& out);

}  // namespace infill
