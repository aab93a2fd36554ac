#include "infill/planner.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "infill/boundary.hpp"

namespace infill {

namespace {

Vec2 center_of(GridPoint p) { return {p.x + 0.5, p.y + 0.5}; }

ToolMove lattice_print(GridPoint a, GridPoint b) {
  return {ToolMove::Kind::Print, center_of(a), center_of(b), true, a, b};
}

// ---------------------------------------------------------------------------
// Solution memo shared across layers: cells recur, especially on stacks of
// identical layers. Keyed by the translated region mask, endpoints, alpha and
// the weight vector.
// ---------------------------------------------------------------------------

std::mutex g_memo_mutex;
std::unordered_map<std::string, PathSolution> g_memo;

std::string memo_key(const JoinedCell& jc, double alpha,
                     const std::vector<std::int32_t>& hint) {
  std::string key;
  const IopRegion& r = jc.region;
  key.reserve(r.mask.size() + 64 + jc.graph.edges.size() * 8 + hint.size() * 4);
  auto put_i32 = [&key](std::int32_t v) {
    key.append(reinterpret_cast<const char*>(&v), sizeof(v));
  };
  auto put_f64 = [&key](double v) {
    key.append(reinterpret_cast<const char*>(&v), sizeof(v));
  };
  put_i32(r.width);
  put_i32(r.height);
  key.append(reinterpret_cast<const char*>(r.mask.data()), r.mask.size());
  put_i32(jc.s);
  put_i32(jc.t);
  put_f64(alpha);
  for (const auto& e : jc.graph.edges) put_f64(e.weight);
  for (const auto v : hint) put_i32(v);
  return key;
}

// The previous layer's path restricted to this cell, when it traverses the
// cell's vertex set as one clean s-t path; used to warm-start the solver.
std::vector<std::int32_t> hint_from_previous(const JoinedCell& jc,
                                             const EdgeSet& prev_edges) {
  const DualGraph& g = jc.graph;
  if (g.n() < 2 || prev_edges.empty()) return {};
  std::vector<std::array<std::int32_t, 2>> adj(
      static_cast<std::size_t>(g.n()), {-1, -1});
  auto attach = [&](std::int32_t a, std::int32_t b) {
    auto& slots = adj[static_cast<std::size_t>(a)];
    if (slots[0] < 0) {
      slots[0] = b;
    } else if (slots[1] < 0) {
      slots[1] = b;
    } else {
      return false;
    }
    return true;
  };
  for (std::int32_t v = 0; v < g.n(); ++v) {
    for (int d : {DualGraph::East, DualGraph::North}) {
      const std::int32_t w = g.neighbor[static_cast<std::size_t>(v)][d];
      if (w < 0) continue;
      if (!prev_edges.count(make_edge_key(g.vertices[static_cast<std::size_t>(v)],
                                          g.vertices[static_cast<std::size_t>(w)]))) {
        continue;
      }
      if (!attach(v, w) || !attach(w, v)) return {};
    }
  }
  auto degree = [&](std::int32_t v) {
    return (adj[static_cast<std::size_t>(v)][0] >= 0 ? 1 : 0) +
           (adj[static_cast<std::size_t>(v)][1] >= 0 ? 1 : 0);
  };
  if (degree(g.s) != 1 || degree(g.t) != 1) return {};
  std::vector<std::int32_t> path;
  path.reserve(static_cast<std::size_t>(g.n()));
  std::int32_t prev = -1, cur = g.s;
  path.push_back(cur);
  while (cur != g.t) {
    const auto& slots = adj[static_cast<std::size_t>(cur)];
    const std::int32_t nxt = slots[0] == prev ? slots[1] : slots[0];
    if (nxt < 0 || static_cast<std::int32_t>(path.size()) > g.n()) return {};
    path.push_back(nxt);
    prev = cur;
    cur = nxt;
  }
  if (static_cast<std::int32_t>(path.size()) != g.n()) return {};
  return path;
}

}  // namespace

void clear_solution_memo() {
  std::lock_guard<std::mutex> lock(g_memo_mutex);
  g_memo.clear();
}

EdgeKey make_edge_key(GridPoint p, GridPoint q) {
  const bool ordered = (p.y < q.y) || (p.y == q.y && p.x <= q.x);
  return ordered ? EdgeKey{p, q} : EdgeKey{q, p};
}

EdgeSet realized_print_edges(const LayerPlan& plan) {
  EdgeSet set;
  for (const ToolMove& m : plan.moves) {
    if (m.kind == ToolMove::Kind::Print && m.lattice) {
      set.insert(make_edge_key(m.a, m.b));
    }
  }
  return set;
}

DualGraph apply_overlap_weights(DualGraph graph, const EdgeSet& previous_layer_edges,
                                OverlapMode mode, double max_weight,
                                double min_weight) {
  if (mode == OverlapMode::Neutral) return graph;
  const double w = mode == OverlapMode::Maximize ? max_weight : min_weight;
  for (auto& e : graph.edges) {
    const GridPoint p = graph.vertices[static_cast<std::size_t>(e.u)];
    const GridPoint q = graph.vertices[static_cast<std::size_t>(e.v)];
    if (previous_layer_edges.count(make_edge_key(p, q))) e.weight = w;
  }
  return graph;
}

namespace {

// Tree-walk fallback for a cell whose solver run failed outright: every
// vertex still gets printed once (first visits), backtracking is idle.
void emit_fallback_walk(const JoinedCell& jc, std::vector<ToolMove>& moves,
                        double& idle_length, GridPoint& tail) {
  const DualGraph& g = jc.graph;
  std::vector<char> visited(static_cast<std::size_t>(g.n()), 0);
  std::vector<std::pair<std::int32_t, int>> stack;  // (vertex, next dir)
  std::int32_t cur = jc.s;
  visited[static_cast<std::size_t>(cur)] = 1;
  stack.push_back({cur, 0});
  while (!stack.empty()) {
    auto& [v, d] = stack.back();
    bool advanced = false;
    for (; d < 4; ++d) {
      const std::int32_t w = g.neighbor[static_cast<std::size_t>(v)][d];
      if (w >= 0 && !visited[static_cast<std::size_t>(w)]) {
        visited[static_cast<std::size_t>(w)] = 1;
        moves.push_back(lattice_print(g.vertices[static_cast<std::size_t>(v)],
                                      g.vertices[static_cast<std::size_t>(w)]));
        stack.push_back({w, 0});
        advanced = true;
        ++d;
        break;
      }
    }
    if (!advanced) {
      stack.pop_back();
      if (!stack.empty()) {
        const std::int32_t up = stack.back().first;
        ToolMove m;
        m.kind = ToolMove::Kind::Idle;
        m.from = center_of(g.vertices[static_cast<std::size_t>(v)]);
        m.to = center_of(g.vertices[static_cast<std::size_t>(up)]);
        moves.push_back(m);
        idle_length += 1.0;
      } else {
        tail = g.vertices[static_cast<std::size_t>(v)];
      }
    }
  }
}

std::optional<double> compute_turn_ratio(const std::vector<ToolMove>& moves) {
  std::int64_t turns = 0, straights = 0;
  for (std::size_t i = 0; i + 1 < moves.size(); ++i) {
    const ToolMove& m0 = moves[i];
    const ToolMove& m1 = moves[i + 1];
    if (m0.kind != ToolMove::Kind::Print || !m0.lattice) continue;
    if (m1.kind != ToolMove::Kind::Print || !m1.lattice) continue;
    if (!(m0.b == m1.a)) continue;
    const bool ax0 = m0.a.y == m0.b.y;  // horizontal
    const bool ax1 = m1.a.y == m1.b.y;
    if (ax0 != ax1) {
      ++turns;
    } else {
      ++straights;
    }
  }
  if (turns + straights == 0) return std::nullopt;
  return static_cast<double>(turns) / static_cast<double>(turns + straights);
}

}  // namespace

LayerPlan plan_components(const std::vector<IopRegion>& components,
                          const EdgeSet& previous_layer_edges,
                          const SolverConfig& config, int layer_index,
                          double z_mm, bool flip_corners) {
  config.validate();
  LayerPlan plan;
  plan.layer_index = layer_index;
  plan.z_mm = z_mm;
  if (components.empty()) {
    plan.skipped = true;
    plan.warnings.push_back("layer has no printable area");
    return plan;
  }
  plan.region = union_regions(components);

  // Shared root cell over the whole layer so Hilbert indices are comparable
  // across components.
  std::int32_t q = 0;
  while ((1 << q) < std::max(plan.region.width, plan.region.height)) ++q;
  const GridPoint root = plan.region.origin;
  const std::int32_t side = 1 << q;
  GridPoint entry{root.x, root.y};
  GridPoint exit{root.x + side, root.y};
  if (flip_corners) {
    entry = {root.x, root.y + side};
    exit = {root.x + side, root.y + side};
  }

  struct ComponentSeq {
    CellSequence seq;
    std::uint64_t min_low = 0;
  };
  std::vector<ComponentSeq> comp_seqs;
  for (const IopRegion& comp : components) {
    Quadtree tree = build_quadtree(comp, config.delta, root, q);
    CellSequence seq = hilbert_order(tree, entry, exit);
    assign_entry_exit(seq);
    std::uint64_t lo = seq.hilbert_low.empty() ? 0 : seq.hilbert_low.front();
    comp_seqs.push_back({std::move(seq), lo});
  }
  std::stable_sort(comp_seqs.begin(), comp_seqs.end(),
                   [](const ComponentSeq& a, const ComponentSeq& b) {
                     return a.min_low < b.min_low;
                   });

  // Concatenate component sequences (component-grouped, groups in Hilbert
  // order of their first cell).
  CellSequence seq;
  seq.root_origin = root;
  seq.root_exponent = q;
  seq.global_entry = entry;
  seq.global_exit = exit;
  for (auto& cs : comp_seqs) {
    for (std::size_t i = 0; i < cs.seq.cells.size(); ++i) {
      seq.cells.push_back(cs.seq.cells[i]);
      seq.entry_corner.push_back(cs.seq.entry_corner[i]);
      seq.exit_corner.push_back(cs.seq.exit_corner[i]);
      seq.hilbert_low.push_back(cs.seq.hilbert_low[i]);
      seq.s_vertex.push_back(cs.seq.s_vertex[i]);
      seq.t_vertex.push_back(cs.seq.t_vertex[i]);
    }
  }
  plan.cells = seq.cells;

  JoinedSequence jseq = join_cells(seq, config.max_area);
  update_entry_exit(jseq);

  for (auto& jc : jseq.items) {
    jc.graph = apply_overlap_weights(
        std::move(jc.graph),
        layer_index == 0 ? EdgeSet{} : previous_layer_edges,
        layer_index == 0 ? OverlapMode::Neutral : config.overlap_mode,
        config.overlap_max_weight, config.overlap_min_weight);
  }

  // Solve the joined cells in parallel; results land by index, so the plan
  // does not depend on the worker count.
  const std::size_t ncells = jseq.items.size();
  std::vector<std::optional<PathSolution>> solutions(ncells);
  std::vector<std::string> failures(ncells);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= ncells) break;
      const JoinedCell& jc = jseq.items[i];
      const std::vector<std::int32_t> hint =
          layer_index == 0 ? std::vector<std::int32_t>{}
                           : hint_from_previous(jc, previous_layer_edges);
      const std::string key = memo_key(jc, config.alpha, hint);
      {
        std::lock_guard<std::mutex> lock(g_memo_mutex);
        auto it = g_memo.find(key);
        if (it != g_memo.end()) {
          solutions[i] = it->second;
          continue;
        }
      }
      try {
        PathSolution sol = solve_cell(jc.graph, config.alpha, config, hint);
        {
          std::lock_guard<std::mutex> lock(g_memo_mutex);
          g_memo.emplace(key, sol);
        }
        solutions[i] = std::move(sol);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  int nworkers = config.worker_count > 0
                     ? config.worker_count
                     : static_cast<int>(std::thread::hardware_concurrency());
  nworkers = std::max(1, std::min<int>(nworkers, static_cast<int>(ncells)));
  if (nworkers <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int i = 0; i < nworkers; ++i) threads.emplace_back(worker);
    for (auto& th : threads) th.join();
  }

  // Stitch: cell paths joined by unit print connectors or idle hops.
  plan.cell_count = static_cast<int>(ncells);
  bool have_tail = false;
  GridPoint tail{};
  for (std::size_t i = 0; i < ncells; ++i) {
    const JoinedCell& jc = jseq.items[i];
    const GridPoint head = jc.s_vertex();
    if (have_tail) {
      const std::int64_t gap = rectilinear_gap(tail, head);
      if (gap == 1) {
        plan.moves.push_back(lattice_print(tail, head));
      } else if (gap > 1) {
        ToolMove m;
        m.kind = ToolMove::Kind::Idle;
        m.from = center_of(tail);
        m.to = center_of(head);
        plan.moves.push_back(m);
        plan.idle_length += static_cast<double>(gap);
      }
    }
    plan.joined_entries.push_back({jc.s_vertex(), jc.t_vertex()});
    if (solutions[i]) {
      const auto& verts = solutions[i]->vertices;
      for (std::size_t k = 0; k + 1 < verts.size(); ++k) {
        plan.moves.push_back(
            lattice_print(jc.graph.vertices[static_cast<std::size_t>(verts[k])],
                          jc.graph.vertices[static_cast<std::size_t>(verts[k + 1])]));
      }
      tail = jc.t_vertex();
      have_tail = true;
    } else {
      ++plan.flagged_cells;
      plan.warnings.push_back("cell " + std::to_string(i) +
                              " solver failure: " + failures[i]);
      emit_fallback_walk(jc, plan.moves, plan.idle_length, tail);
      have_tail = true;
    }
  }
  plan.turn_ratio_value = compute_turn_ratio(plan.moves);
  return plan;
}

LayerPlan plan_layer(const std::vector<GeneralPolygon>& polygons_mm,
                     const LayerPlan* previous, const SolverConfig& config,
                     int layer_index, double z_mm, double pixel_size_mm) {
  // Work in lattice units: scale the polygons by 1/pixel_size.
  std::vector<GeneralPolygon> polys;
  polys.reserve(polygons_mm.size());
  for (const auto& p : polygons_mm) {
    GeneralPolygon sp = p;
    for (auto& v : sp.outer.pts) {
      v.x /= pixel_size_mm;
      v.y /= pixel_size_mm;
    }
    for (auto& h : sp.holes) {
      for (auto& v : h.pts) {
        v.x /= pixel_size_mm;
        v.y /= pixel_size_mm;
      }
    }
    polys.push_back(std::move(sp));
  }

  std::vector<IopRegion> components;
  std::vector<std::string> raster_warnings;
  std::vector<IopRegion> rasters;
  for (std::size_t pi = 0; pi < polys.size(); ++pi) {
    try {
      rasters.push_back(rasterize(polys[pi], 1.0));
    } catch (const EmptyRasterError&) {
      raster_warnings.push_back("polygon " + std::to_string(pi) +
                                " thinner than one pixel; skipped");
    }
  }
  if (!rasters.empty()) {
    components = connected_components(union_regions(rasters));
  }

  const bool flip = config.alternate_corners && (layer_index % 2 == 1);
  EdgeSet prev_edges;
  if (previous != nullptr) prev_edges = realized_print_edges(*previous);
  LayerPlan plan =
      plan_components(components, prev_edges, config, layer_index, z_mm, flip);
  for (auto& w : raster_warnings) plan.warnings.push_back(w);
  if (plan.skipped) return plan;

  plan = project_to_boundary(std::move(plan), polys);
  if (previous != nullptr && !previous->skipped) {
    plan.overlap_with_previous = overlap_ratio(plan, *previous);
  }
  return plan;
}

StackPlan plan_stack(const LayerStack& stack, const SolverConfig& config) {
  config.validate();
  if (stack.layers.empty()) throw ConfigError("empty layer stack");
  StackPlan out;
  out.config = config;
  out.pixel_size_mm = stack.pixel_size_mm;
  out.layer_height_mm = stack.layer_height_mm;
  const LayerPlan* previous = nullptr;
  for (std::size_t i = 0; i < stack.layers.size(); ++i) {
    const double z = stack.layer_height_mm * static_cast<double>(i + 1);
    LayerPlan plan = plan_layer(stack.layers[i].polygons, previous, config,
                                static_cast<int>(i), z, stack.pixel_size_mm);
    out.layers.push_back(std::move(plan));
    if (!out.layers.back().skipped) previous = &out.layers.back();
  }
  return out;
}

std::optional<double> overlap_ratio(const LayerPlan& current, const LayerPlan& previous) {
  const EdgeSet cur = realized_print_edges(current);
  if (cur.empty()) return std::nullopt;
  const EdgeSet prev = realized_print_edges(previous);
  std::size_t shared = 0;
  for (const auto& e : cur) shared += prev.count(e);
  return static_cast<double>(shared) / static_cast<double>(cur.size());
}

std::optional<double> turn_ratio(const LayerPlan& plan) {
  return compute_turn_ratio(plan.moves);
}

}  // namespace infill
