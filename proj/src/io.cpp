#include "infill/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace infill {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

const char* mode_name(OverlapMode m) {
  switch (m) {
    case OverlapMode::Maximize: return "max";
    case OverlapMode::Minimize: return "min";
    default: return "neutral";
  }
}

OverlapMode mode_from_name(const std::string& s) {
  if (s == "max") return OverlapMode::Maximize;
  if (s == "min") return OverlapMode::Minimize;
  if (s == "neutral") return OverlapMode::Neutral;
  throw IoError("unknown overlap mode: " + s);
}

json config_to_json(const SolverConfig& c) {
  json j;
  j["alpha"] = c.alpha;
  j["delta"] = c.delta;
  j["max_area"] = c.max_area;
  j["overlap_mode"] = mode_name(c.overlap_mode);
  j["exact_threshold"] = c.exact_threshold;
  j["relaxed_time_limit_ms"] = c.relaxed_time_limit.count();
  j["full_time_limit_ms"] = c.full_time_limit.count();
  j["alternate_corners"] = c.alternate_corners;
  j["worker_count"] = c.worker_count;
  j["overlap_max_weight"] = c.overlap_max_weight;
  j["overlap_min_weight"] = c.overlap_min_weight;
  return j;
}

SolverConfig config_from_json(const json& j) {
  SolverConfig c;
  c.alpha = j.at("alpha").get<double>();
  c.delta = j.at("delta").get<std::int64_t>();
  c.max_area = j.at("max_area").get<std::int64_t>();
  c.overlap_mode = mode_from_name(j.at("overlap_mode").get<std::string>());
  c.exact_threshold = j.at("exact_threshold").get<int>();
  c.relaxed_time_limit = std::chrono::milliseconds(j.at("relaxed_time_limit_ms").get<std::int64_t>());
  c.full_time_limit = std::chrono::milliseconds(j.at("full_time_limit_ms").get<std::int64_t>());
  c.alternate_corners = j.at("alternate_corners").get<bool>();
  c.worker_count = j.at("worker_count").get<int>();
  c.overlap_max_weight = j.at("overlap_max_weight").get<double>();
  c.overlap_min_weight = j.at("overlap_min_weight").get<double>();
  return c;
}

json move_to_json(const ToolMove& m) {
  json j;
  j["kind"] = m.kind == ToolMove::Kind::Print ? "print" : "idle";
  j["from"] = {m.from.x, m.from.y};
  j["to"] = {m.to.x, m.to.y};
  if (m.lattice) {
    j["a"] = {m.a.x, m.a.y};
    j["b"] = {m.b.x, m.b.y};
  }
  return j;
}

ToolMove move_from_json(const json& j) {
  ToolMove m;
  m.kind = j.at("kind").get<std::string>() == "print" ? ToolMove::Kind::Print
                                                      : ToolMove::Kind::Idle;
  m.from = {j.at("from")[0].get<double>(), j.at("from")[1].get<double>()};
  m.to = {j.at("to")[0].get<double>(), j.at("to")[1].get<double>()};
  if (j.contains("a")) {
    m.lattice = true;
    m.a = {j.at("a")[0].get<std::int32_t>(), j.at("a")[1].get<std::int32_t>()};
    m.b = {j.at("b")[0].get<std::int32_t>(), j.at("b")[1].get<std::int32_t>()};
  }
  return m;
}

}  // namespace

std::string plan_to_json(const StackPlan& plan) {
  json j;
  j["format"] = "toolpath-plan";
  j["version"] = kFormatVersion;
  j["pixel_size_mm"] = plan.pixel_size_mm;
  j["layer_height_mm"] = plan.layer_height_mm;
  j["config"] = config_to_json(plan.config);
  j["layers"] = json::array();
  for (const LayerPlan& layer : plan.layers) {
    json jl;
    jl["layer_index"] = layer.layer_index;
    jl["z_mm"] = layer.z_mm;
    jl["skipped"] = layer.skipped;
    jl["warnings"] = layer.warnings;
    jl["moves"] = json::array();
    for (const ToolMove& m : layer.moves) jl["moves"].push_back(move_to_json(m));
    json metrics;
    if (layer.overlap_with_previous) {
      metrics["overlap_ratio"] = *layer.overlap_with_previous;
    } else {
      metrics["overlap_ratio"] = nullptr;
    }
    if (layer.turn_ratio_value) {
      metrics["turn_ratio"] = *layer.turn_ratio_value;
    } else {
      metrics["turn_ratio"] = nullptr;
    }
    metrics["idle_length_units"] = layer.idle_length;
    metrics["cell_count"] = layer.cell_count;
    metrics["flagged_cells"] = layer.flagged_cells;
    jl["metrics"] = metrics;
    j["layers"].push_back(std::move(jl));
  }
  return j.dump(2);
}

StackPlan plan_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError("plan parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "toolpath-plan") {
      throw IoError("not a toolpath plan file");
    }
    if (j.at("version").get<int>() != kFormatVersion) {
      throw IoError("unsupported plan version");
    }
    StackPlan plan;
    plan.pixel_size_mm = j.at("pixel_size_mm").get<double>();
    plan.layer_height_mm = j.at("layer_height_mm").get<double>();
    plan.config = config_from_json(j.at("config"));
    for (const auto& jl : j.at("layers")) {
      LayerPlan layer;
      layer.layer_index = jl.at("layer_index").get<int>();
      layer.z_mm = jl.at("z_mm").get<double>();
      layer.skipped = jl.at("skipped").get<bool>();
      layer.warnings = jl.at("warnings").get<std::vector<std::string>>();
      for (const auto& jm : jl.at("moves")) layer.moves.push_back(move_from_json(jm));
      const auto& metrics = jl.at("metrics");
      if (!metrics.at("overlap_ratio").is_null()) {
        layer.overlap_with_previous = metrics.at("overlap_ratio").get<double>();
      }
      if (!metrics.at("turn_ratio").is_null()) {
        layer.turn_ratio_value = metrics.at("turn_ratio").get<double>();
      }
      layer.idle_length = metrics.at("idle_length_units").get<double>();
      layer.cell_count = metrics.at("cell_count").get<int>();
      layer.flagged_cells = metrics.at("flagged_cells").get<int>();
      plan.layers.push_back(std::move(layer));
    }
    return plan;
  } catch (const json::exception& e) {
    throw IoError(std::string("plan format error: ") + e.what());
  }
}

void save_plan(const StackPlan& plan, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write plan file: " + path);
  out << plan_to_json(plan) << "\n";
}

StackPlan load_plan(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open plan file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return plan_from_json(ss.str());
}

namespace {

struct FlatMove {
  bool print;
  double x0, y0, x1, y1;  // mm
  double z;
  bool turn_at_start = false;
  bool turn_at_end = false;
};

double length_of(const FlatMove& m) {
  return std::hypot(m.x1 - m.x0, m.y1 - m.y0);
}

}  // namespace

void emit_gcode(const StackPlan& plan, const GcodeParams& params, std::ostream& out) {
  if (plan.layers.empty()) throw IoError("empty plan");
  const double ps = plan.pixel_size_mm;
  const double filament_area =
      M_PI * (params.filament_diameter_mm / 2.0) * (params.filament_diameter_mm / 2.0);
  const double volume_per_mm =
      params.extrusion_width_mm * plan.layer_height_mm / filament_area;

  char buf[160];
  out << "; dense-infill toolpath\n";
  std::snprintf(buf, sizeof(buf), "M140 S%.0f\n", params.bed_temperature_c);
  out << buf;
  std::snprintf(buf, sizeof(buf), "M104 S%.0f\n", params.hotend_temperature_c);
  out << buf;
  out << "G92 E0\n";

  double e_total = 0.0;
  const int feed = static_cast<int>(params.feedrate_mm_s * 60.0);
  const int travel_feed = static_cast<int>(params.travel_feedrate_mm_s * 60.0);

  for (const LayerPlan& layer : plan.layers) {
    if (layer.skipped || layer.moves.empty()) continue;
    // Flatten to mm and mark 90-degree junctions between consecutive print moves.
    std::vector<FlatMove> flat;
    flat.reserve(layer.moves.size());
    for (std::size_t i = 0; i < layer.moves.size(); ++i) {
      const ToolMove& m = layer.moves[i];
      if (i > 0) {
        const ToolMove& p = layer.moves[i - 1];
        if (std::abs(p.to.x - m.from.x) > 1e-9 || std::abs(p.to.y - m.from.y) > 1e-9) {
          throw IoError("non-chaining moves in layer " + std::to_string(layer.layer_index));
        }
      }
      flat.push_back({m.kind == ToolMove::Kind::Print, m.from.x * ps, m.from.y * ps,
                      m.to.x * ps, m.to.y * ps, layer.z_mm, false, false});
    }
    for (std::size_t i = 0; i + 1 < flat.size(); ++i) {
      if (!flat[i].print || !flat[i + 1].print) continue;
      const double dx0 = flat[i].x1 - flat[i].x0, dy0 = flat[i].y1 - flat[i].y0;
      const double dx1 = flat[i + 1].x1 - flat[i + 1].x0, dy1 = flat[i + 1].y1 - flat[i + 1].y0;
      const double cross = dx0 * dy1 - dy0 * dx1;
      const double dot = dx0 * dx1 + dy0 * dy1;
      // Perpendicular junction: nonzero cross with negligible dot.
      if (std::abs(cross) > 1e-9 && std::abs(dot) < 1e-9) {
        flat[i].turn_at_end = true;
        flat[i + 1].turn_at_start = true;
      }
    }

    std::snprintf(buf, sizeof(buf), "G0 Z%.3f F%d\n", layer.z_mm, travel_feed);
    out << buf;
    std::snprintf(buf, sizeof(buf), "G0 X%.3f Y%.3f F%d\n", flat.front().x0,
                  flat.front().y0, travel_feed);
    out << buf;
    for (const FlatMove& m : flat) {
      if (!m.print) {
        std::snprintf(buf, sizeof(buf), "G0 X%.3f Y%.3f F%d\n", m.x1, m.y1, travel_feed);
        out << buf;
        continue;
      }
      const double len = length_of(m);
      if (len <= 1e-12) continue;
      // Split into up to three spans so the turn-adjacent material gets its
      // multiplier; overlapping zones merge into one hot span.
      const double z0 = m.turn_at_start ? std::min(params.turn_zone_mm, len) : 0.0;
      const double z1 = m.turn_at_end ? std::min(params.turn_zone_mm, len) : 0.0;
      struct Span {
        double len;
        bool hot;
      };
      Span spans[3];
      int nspan = 0;
      if (z0 + z1 >= len - 1e-12) {
        spans[nspan++] = {len, z0 + z1 > 0.0};
      } else {
        if (z0 > 0.0) spans[nspan++] = {z0, true};
        spans[nspan++] = {len - z0 - z1, false};
        if (z1 > 0.0) spans[nspan++] = {z1, true};
      }
      double done = 0.0;
      for (int k = 0; k < nspan; ++k) {
        done += spans[k].len;
        const double frac = done / len;
        const double x = m.x0 + (m.x1 - m.x0) * frac;
        const double y = m.y0 + (m.y1 - m.y0) * frac;
        const double mult = spans[k].hot ? params.extrusion_multiplier_at_turns : 1.0;
        e_total += spans[k].len * volume_per_mm * mult;
        std::snprintf(buf, sizeof(buf), "G1 X%.3f Y%.3f E%.5f F%d\n", x, y, e_total, feed);
        out << buf;
      }
    }
  }
  out << "M104 S0\nM140 S0\n";
}

std::string layer_svg(const LayerPlan& plan, const SvgOptions& options) {
  double minx = 1e18, miny = 1e18, maxx = -1e18, maxy = -1e18;
  for (const ToolMove& m : plan.moves) {
    minx = std::min({minx, m.from.x, m.to.x});
    maxx = std::max({maxx, m.from.x, m.to.x});
    miny = std::min({miny, m.from.y, m.to.y});
    maxy = std::max({maxy, m.from.y, m.to.y});
  }
  for (const QuadCell& c : plan.cells) {
    minx = std::min(minx, static_cast<double>(c.origin.x));
    miny = std::min(miny, static_cast<double>(c.origin.y));
    maxx = std::max(maxx, static_cast<double>(c.origin.x + c.size));
    maxy = std::max(maxy, static_cast<double>(c.origin.y + c.size));
  }
  if (plan.moves.empty() && plan.cells.empty()) {
    minx = miny = 0.0;
    maxx = maxy = 1.0;
  }
  const double scale = options.scale;
  const double pad = scale / 2.0;
  const double w = (maxx - minx) * scale + 2 * pad;
  const double h = (maxy - miny) * scale + 2 * pad;
  auto px = [&](double x) { return pad + (x - minx) * scale; };
  auto py = [&](double y) { return pad + (maxy - y) * scale; };
  char buf[256];
  std::ostringstream svg;
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.3f\" height=\"%.3f\">\n",
                w, h);
  svg << buf;
  if (options.draw_cells) {
    for (const QuadCell& c : plan.cells) {
      std::snprintf(buf, sizeof(buf),
                    "<rect x=\"%.3f\" y=\"%.3f\" width=\"%.3f\" height=\"%.3f\" "
                    "fill=\"none\" stroke=\"#bbbbbb\" stroke-width=\"1\"/>\n",
                    px(c.origin.x), py(c.origin.y + c.size), c.size * scale,
                    c.size * scale);
      svg << buf;
    }
  }
  for (const ToolMove& m : plan.moves) {
    if (m.kind == ToolMove::Kind::Print) {
      std::snprintf(buf, sizeof(buf),
                    "<line x1=\"%.3f\" y1=\"%.3f\" x2=\"%.3f\" y2=\"%.3f\" "
                    "stroke=\"#d62728\" stroke-width=\"2\"/>\n",
                    px(m.from.x), py(m.from.y), px(m.to.x), py(m.to.y));
    } else {
      std::snprintf(buf, sizeof(buf),
                    "<line x1=\"%.3f\" y1=\"%.3f\" x2=\"%.3f\" y2=\"%.3f\" "
                    "stroke=\"#f2a6d4\" stroke-width=\"1.5\" stroke-dasharray=\"3,3\"/>\n",
                    px(m.from.x), py(m.from.y), px(m.to.x), py(m.to.y));
    }
    svg << buf;
  }
  if (options.draw_entries) {
    for (const auto& [s, t] : plan.joined_entries) {
      std::snprintf(buf, sizeof(buf),
                    "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"4\" fill=\"#2ca02c\"/>\n",
                    px(s.x + 0.5), py(s.y + 0.5));
      svg << buf;
      std::snprintf(buf, sizeof(buf),
                    "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"4\" fill=\"#1f77b4\"/>\n",
                    px(t.x + 0.5), py(t.y + 0.5));
      svg << buf;
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_metrics_csv(const StackPlan& plan, std::ostream& out) {
  out << "layer_index,overlap_ratio,turn_ratio,idle_length_units,cell_count,flagged_cells\n";
  char buf[160];
  for (const LayerPlan& layer : plan.layers) {
    out << layer.layer_index << ",";
    if (layer.overlap_with_previous) {
      std::snprintf(buf, sizeof(buf), "%.6f", *layer.overlap_with_previous);
      out << buf;
    }
    out << ",";
    if (layer.turn_ratio_value) {
      std::snprintf(buf, sizeof(buf), "%.6f", *layer.turn_ratio_value);
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), ",%.3f,%d,%d\n", layer.idle_length,
                  layer.cell_count, layer.flagged_cells);
    out << buf;
  }
}

}  // namespace infill
