#include <chrono>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>

#include "CLI11.hpp"
#include "infill/boundary.hpp"
#include "infill/decomposition.hpp"
#include "infill/io.hpp"
#include "infill/planner.hpp"

namespace {

using namespace infill;

struct CommonOptions {
  double alpha = 0.5;
  std::int64_t delta = 64;
  std::int64_t max_area = 120;
  std::string overlap_mode = "neutral";
  int workers = 0;
  std::int64_t time_limit_s = 30;
  bool alternate_corners = false;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--alpha", opt.alpha, "edge/turn cost mix (1=edges, 0=turns)")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--delta", opt.delta, "max quadtree leaf area");
  cmd->add_option("--max-area", opt.max_area, "max joined-cell area");
  cmd->add_option("--overlap-mode", opt.overlap_mode, "max|min|neutral")
      ->check(CLI::IsMember({"max", "min", "neutral"}));
  cmd->add_option("--workers", opt.workers, "worker threads (0 = auto)");
  cmd->add_option("--time-limit", opt.time_limit_s, "relaxed solve limit, seconds");
  cmd->add_flag("--alternate-corners", opt.alternate_corners,
                "flip Hilbert corners on odd layers");
}

SolverConfig to_config(const CommonOptions& opt) {
  SolverConfig c;
  c.alpha = opt.alpha;
  c.delta = opt.delta;
  c.max_area = opt.max_area;
  if (opt.overlap_mode == "max") c.overlap_mode = OverlapMode::Maximize;
  if (opt.overlap_mode == "min") c.overlap_mode = OverlapMode::Minimize;
  c.worker_count = opt.workers;
  c.relaxed_time_limit = std::chrono::seconds(opt.time_limit_s);
  c.full_time_limit = std::chrono::seconds(opt.time_limit_s * 4);
  c.alternate_corners = opt.alternate_corners;
  c.validate();
  return c;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
}

int run_decompose(const std::string& input, const CommonOptions& opt,
                  const std::string& svg_path, const std::string& json_path) {
  const LayerStack stack = load_layer_stack(input);
  const auto& layer = stack.layers.front();
  std::vector<IopRegion> rasters;
  for (const auto& poly : layer.polygons) {
    GeneralPolygon scaled = poly;
    for (auto& v : scaled.outer.pts) {
      v.x /= stack.pixel_size_mm;
      v.y /= stack.pixel_size_mm;
    }
    for (auto& h : scaled.holes) {
      for (auto& v : h.pts) {
        v.x /= stack.pixel_size_mm;
        v.y /= stack.pixel_size_mm;
      }
    }
    rasters.push_back(rasterize(scaled, 1.0));
  }
  const IopRegion region = union_regions(rasters);
  Quadtree tree = build_quadtree(region, opt.delta);
  const auto corners = root_corners(tree.root_origin, tree.root_exponent);
  CellSequence seq = hilbert_order(tree, corners[0], corners[1]);
  assign_entry_exit(seq);
  if (!svg_path.empty()) write_file(svg_path, decomposition_svg(region, seq));
  if (!json_path.empty()) {
    std::ostringstream ss;
    ss << "{\n  \"cell_count\": " << seq.cells.size() << ",\n  \"cells\": [\n";
    for (std::size_t i = 0; i < seq.cells.size(); ++i) {
      const QuadCell& c = seq.cells[i];
      ss << "    {\"origin\": [" << c.origin.x << ", " << c.origin.y
         << "], \"size\": " << c.size << ", \"entry\": [" << seq.entry_corner[i].x
         << ", " << seq.entry_corner[i].y << "], \"exit\": [" << seq.exit_corner[i].x
         << ", " << seq.exit_corner[i].y << "]}" << (i + 1 < seq.cells.size() ? "," : "")
         << "\n";
    }
    ss << "  ]\n}\n";
    write_file(json_path, ss.str());
  }
  std::cout << "decomposed into " << seq.cells.size() << " cells (root 2^"
            << tree.root_exponent << ")\n";
  return 0;
}

int run_plan(const std::string& input, const CommonOptions& opt,
             const std::string& out_path, const std::string& csv_path, bool whole_stack) {
  const LayerStack stack = load_layer_stack(input);
  SolverConfig config = to_config(opt);
  LayerStack working = stack;
  if (!whole_stack) working.layers.resize(1);
  const StackPlan plan = plan_stack(working, config);
  save_plan(plan, out_path);
  if (!csv_path.empty()) {
    std::ofstream csv(csv_path, std::ios::binary);
    write_metrics_csv(plan, csv);
  }
  double mean_overlap = 0.0;
  int overlap_layers = 0;
  int flagged = 0;
  for (const auto& layer : plan.layers) {
    if (layer.overlap_with_previous) {
      mean_overlap += *layer.overlap_with_previous;
      ++overlap_layers;
    }
    flagged += layer.flagged_cells;
  }
  std::cout << "planned " << plan.layers.size() << " layer(s), flagged cells: "
            << flagged;
  if (overlap_layers > 0) {
    std::cout << ", mean overlap ratio: " << mean_overlap / overlap_layers;
  }
  std::cout << "\nwrote " << out_path << "\n";
  return flagged == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dense-infill toolpath planner"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file, overridden by flags");

  CommonOptions opt;
  std::string input, output, csv_path, svg_path, json_path;
  int layer_index = 0;

  auto* decompose = app.add_subcommand("decompose", "quadtree + Hilbert order of a layer");
  decompose->add_option("input", input, "layer-stack JSON")->required();
  add_common(decompose, opt);
  decompose->add_option("--svg", svg_path, "decomposition SVG output");
  decompose->add_option("--json", json_path, "cell list JSON output");

  auto* plan = app.add_subcommand("plan", "plan the first layer only");
  plan->add_option("input", input, "layer-stack JSON")->required();
  add_common(plan, opt);
  plan->add_option("-o,--output", output, "plan JSON output")->required();
  plan->add_option("--metrics", csv_path, "metrics CSV output");

  auto* plan_stack_cmd = app.add_subcommand("plan-stack", "plan every layer");
  plan_stack_cmd->add_option("input", input, "layer-stack JSON")->required();
  add_common(plan_stack_cmd, opt);
  plan_stack_cmd->add_option("-o,--output", output, "plan JSON output")->required();
  plan_stack_cmd->add_option("--metrics", csv_path, "metrics CSV output");

  auto* metrics = app.add_subcommand("metrics", "plan JSON -> metrics CSV");
  metrics->add_option("input", input, "plan JSON")->required();
  metrics->add_option("-o,--output", output, "CSV output")->required();

  auto* render = app.add_subcommand("render", "plan JSON -> layer SVG");
  render->add_option("input", input, "plan JSON")->required();
  render->add_option("-o,--output", output, "SVG output")->required();
  render->add_option("--layer", layer_index, "layer index (default 0)");

  auto* gcode = app.add_subcommand("gcode", "plan JSON -> G-code");
  gcode->add_option("input", input, "plan JSON")->required();
  gcode->add_option("-o,--output", output, "gcode output")->required();
  GcodeParams gp;
  gcode->add_option("--turn-multiplier", gp.extrusion_multiplier_at_turns,
                    "extrusion multiplier near 90-degree turns");
  gcode->add_option("--feedrate", gp.feedrate_mm_s, "print feedrate mm/s");
  gcode->add_option("--extrusion-width", gp.extrusion_width_mm, "extrusion width mm");
  gcode->add_option("--filament-diameter", gp.filament_diameter_mm, "filament diameter mm");
  gcode->add_option("--hotend", gp.hotend_temperature_c, "hotend temperature C");
  gcode->add_option("--bed", gp.bed_temperature_c, "bed temperature C");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;  // --help
    std::cerr << e.what() << "\n";
    std::cerr << app.help() << "\n";
    return 1;
  }

  try {
    if (decompose->parsed()) return run_decompose(input, opt, svg_path, json_path);
    if (plan->parsed()) return run_plan(input, opt, output, csv_path, false);
    if (plan_stack_cmd->parsed()) return run_plan(input, opt, output, csv_path, true);
    if (metrics->parsed()) {
      const StackPlan p = load_plan(input);
      std::ofstream csv(output, std::ios::binary);
      if (!csv) throw IoError("cannot write " + output);
      write_metrics_csv(p, csv);
      std::cout << "wrote " << output << "\n";
      return 0;
    }
    if (render->parsed()) {
      const StackPlan p = load_plan(input);
      if (layer_index < 0 || layer_index >= static_cast<int>(p.layers.size())) {
        std::cerr << "layer index out of range\n";
        return 1;
      }
      write_file(output, layer_svg(p.layers[static_cast<std::size_t>(layer_index)]));
      std::cout << "wrote " << output << "\n";
      return 0;
    }
    if (gcode->parsed()) {
      const StackPlan p = load_plan(input);
      std::ofstream gc(output, std::ios::binary);
      if (!gc) throw IoError("cannot write " + output);
      emit_gcode(p, gp, gc);
      std::cout << "wrote " << output << "\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const GeometryError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
