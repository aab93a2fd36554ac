#include "infill/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>

namespace infill {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kInf = 1e18;
constexpr double kCostEps = 1e-9;

inline int axis_of(int dir) { return dir >> 1; }  // W/E -> 0, S/N -> 1

// Direction from a to b (unit-distance lattice neighbors).
inline int dir_between(GridPoint a, GridPoint b) {
  if (b.x == a.x - 1) return DualGraph::West;
  if (b.x == a.x + 1) return DualGraph::East;
  if (b.y == a.y - 1) return DualGraph::South;
  return DualGraph::North;
}

}  // namespace

MipModel build_mip(const DualGraph& graph, double alpha, bool subtours) {
  if (graph.s < 0 || graph.t < 0) throw SolverError("graph s/t unset");
  if (alpha < 0.0 || alpha > 1.0) throw SolverError("alpha out of [0,1]");
  MipModel model;
  model.alpha = alpha;
  model.subtours = subtours;
  model.graph = &graph;
  model.arcs.reserve(graph.edges.size() * 2);
  for (const auto& e : graph.edges) {
    model.arcs.push_back({e.u, e.v, e.weight});
    model.arcs.push_back({e.v, e.u, e.weight});
  }
  // Arc ids per (vertex, outgoing dir): arc 2e goes u->v with u < v.
  auto arc_out = [&](std::int32_t v, int d) -> std::int32_t {
    const std::int32_t eid = graph.edge_at[static_cast<std::size_t>(v)][d];
    if (eid < 0) return -1;
    return graph.edges[static_cast<std::size_t>(eid)].u == v ? 2 * eid : 2 * eid + 1;
  };
  for (std::int32_t j = 0; j < graph.n(); ++j) {
    for (int din = 0; din < 4; ++din) {
      const std::int32_t i = graph.neighbor[static_cast<std::size_t>(j)][din];
      if (i < 0) continue;
      const std::int32_t in_arc = arc_out(i, din ^ 1);  // arc i->j
      for (int dout = 0; dout < 4; ++dout) {
        const std::int32_t k = graph.neighbor[static_cast<std::size_t>(j)][dout];
        if (k < 0) continue;
        const std::int32_t out_arc = arc_out(j, dout);
        model.turn_entries.push_back(
            {in_arc, out_arc, j, axis_of(din) != axis_of(dout)});
      }
    }
  }
  return model;
}

void write_lp(const MipModel& model, std::ostream& out) {
  const DualGraph& g = *model.graph;
  const std::int32_t n = g.n();
  auto xname = [&](std::int32_t arc) {
    const auto& a = model.arcs[static_cast<std::size_t>(arc)];
    return "x_" + std::to_string(a.from) + "_" + std::to_string(a.to);
  };
  out << "\\ relaxed grid tour model, alpha = " << model.alpha << "\n";
  out << "Minimize\n obj:";
  for (std::size_t i = 0; i < model.arcs.size(); ++i) {
    out << " + " << model.alpha * model.arcs[i].weight << " "
        << xname(static_cast<std::int32_t>(i));
  }
  for (std::int32_t j = 0; j < n; ++j) {
    if (j == g.s || j == g.t) continue;
    out << " + " << (1.0 - model.alpha) << " c_" << j;
  }
  out << "\nSubject To\n";
  std::size_t cid = 0;
  for (const auto& te : model.turn_entries) {
    if (!te.perpendicular) continue;
    if (te.vertex == g.s || te.vertex == g.t) continue;
    out << " turn" << cid++ << ": c_" << te.vertex << " - " << xname(te.arc_in)
        << " - " << xname(te.arc_out) << " >= -1\n";
  }
  for (std::int32_t v = 0; v < n; ++v) {
    std::string outs, ins;
    for (std::size_t i = 0; i < model.arcs.size(); ++i) {
      if (model.arcs[i].from == v) outs += " + " + xname(static_cast<std::int32_t>(i));
      if (model.arcs[i].to == v) ins += " + " + xname(static_cast<std::int32_t>(i));
    }
    const int outdeg = (v == g.t) ? 0 : 1;
    const int indeg = (v == g.s) ? 0 : 1;
    out << " degout" << v << ":" << outs << " = " << outdeg << "\n";
    out << " degin" << v << ":" << ins << " = " << indeg << "\n";
  }
  if (model.subtours) {
    for (std::size_t i = 0; i < model.arcs.size(); ++i) {
      const auto& a = model.arcs[i];
      if (a.from == g.s || a.from == g.t) continue;
      out << " mtz" << i << ": u_" << a.from << " - u_" << a.to << " + " << n
          << " " << xname(static_cast<std::int32_t>(i)) << " <= " << n - 1 << "\n";
    }
  }
  out << "Bounds\n";
  for (std::int32_t j = 0; j < n; ++j) {
    if (j == g.s || j == g.t) {
      out << " c_" << j << " = 0\n";
    } else {
      out << " c_" << j << " >= 0\n";
    }
  }
  if (model.subtours) {
    out << " u_" << g.s << " = 1\n";
    for (std::int32_t j = 0; j < n; ++j) {
      if (j == g.s) continue;
      out << " 1 <= u_" << j << " <= " << n << "\n";
    }
  }
  out << "Binaries\n";
  for (std::size_t i = 0; i < model.arcs.size(); ++i) {
    out << " " << xname(static_cast<std::int32_t>(i)) << "\n";
  }
  out << "End\n";
}

// ---------------------------------------------------------------------------
// Relaxed model: exact branch-and-bound over per-vertex edge pairings.
//
// Vertices are processed in id (row-major) order. When vertex v is reached
// its West/South edge multiplicities are already decided, so only the East
// and North edges are free, giving a branching factor of at most three. Edge
// costs are charged at the lower endpoint; the bound adds, for every
// unprocessed vertex, the cheapest stub pairing consistent with the decided
// part of its neighborhood.
// ---------------------------------------------------------------------------

namespace {

struct RelaxedSearch {
  const DualGraph& g;
  double alpha;
  std::vector<std::int8_t> need;                 // 1 at terminals, else 2
  std::vector<std::array<std::int8_t, 4>> mult;  // -1 = undecided
  std::vector<std::int8_t> decided_used;         // sum of decided multiplicities
  std::vector<std::uint8_t> edge_mult;
  // Two bounds per unprocessed vertex: cheapest consistent pairing with and
  // without its turn term. The edge-only track carries the global
  // path-must-turn requirement without double counting local turn minima.
  std::vector<double> lb_full;
  std::vector<double> lb_edge;
  double sum_full = 0.0;
  double sum_edge = 0.0;
  double committed = 0.0;
  double turn_committed = 0.0;
  double path_turn_bound = 0.0;
  double best = kInf;
  std::vector<std::uint8_t> best_edges;
  bool found = false;
  std::uint64_t nodes = 0;
  std::uint64_t node_budget = 0;
  Clock::time_point deadline;
  bool budget_hit = false;

  explicit RelaxedSearch(const DualGraph& graph, double a) : g(graph), alpha(a) {
    const std::size_t n = static_cast<std::size_t>(g.n());
    need.assign(n, 2);
    need[static_cast<std::size_t>(g.s)] = 1;
    need[static_cast<std::size_t>(g.t)] = 1;
    mult.assign(n, {-1, -1, -1, -1});
    for (std::size_t v = 0; v < n; ++v) {
      for (int d = 0; d < 4; ++d) {
        if (g.neighbor[v][d] < 0) mult[v][static_cast<std::size_t>(d)] = 0;
      }
    }
    decided_used.assign(n, 0);
    edge_mult.assign(g.edges.size(), 0);
    lb_full.assign(n, 0.0);
    lb_edge.assign(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
      local_lb(static_cast<std::int32_t>(v), &lb_full[v], &lb_edge[v]);
      sum_full += lb_full[v];
      sum_edge += lb_edge[v];
    }
    // A zero-turn s-t path runs straight, so off-line terminals force at
    // least one turn somewhere in the cover.
    const GridPoint sv = g.vertices[static_cast<std::size_t>(g.s)];
    const GridPoint tv = g.vertices[static_cast<std::size_t>(g.t)];
    if (sv.x != tv.x && sv.y != tv.y) path_turn_bound = 1.0 - alpha;
  }

  double edge_w(std::int32_t v, int d) const {
    const std::int32_t eid = g.edge_at[static_cast<std::size_t>(v)][d];
    return eid < 0 ? 0.0 : g.edges[static_cast<std::size_t>(eid)].weight;
  }

  // Cheapest completion of one vertex, with every incident used edge charged
  // half here and half at the other endpoint, minimized over stub pairs
  // consistent with the decided part of the neighborhood.
  void local_lb(std::int32_t v, double* full, double* edge_only) const {
    const std::size_t vi = static_cast<std::size_t>(v);
    int dirs[4];
    int ndir = 0;
    for (int d = 0; d < 4; ++d) {
      if (g.neighbor[vi][d] >= 0) dirs[ndir++] = d;
    }
    double best_full = kInf;
    double best_edge = kInf;
    auto try_counts = [&](const std::int8_t counts[4], int d1, int d2) {
      for (int d = 0; d < 4; ++d) {
        if (mult[vi][static_cast<std::size_t>(d)] >= 0 &&
            counts[d] != mult[vi][static_cast<std::size_t>(d)]) {
          return;
        }
      }
      double c = 0.0;
      for (int d = 0; d < 4; ++d) {
        if (counts[d]) c += 0.5 * alpha * counts[d] * edge_w(v, d);
      }
      best_edge = std::min(best_edge, c);
      if (need[vi] == 2 && axis_of(d1) != axis_of(d2)) c += (1.0 - alpha);
      best_full = std::min(best_full, c);
    };
    if (need[vi] == 1) {
      for (int a = 0; a < ndir; ++a) {
        std::int8_t counts[4] = {0, 0, 0, 0};
        counts[dirs[a]] = 1;
        try_counts(counts, dirs[a], dirs[a]);
      }
    } else {
      for (int a = 0; a < ndir; ++a) {
        for (int b = a; b < ndir; ++b) {
          std::int8_t counts[4] = {0, 0, 0, 0};
          counts[dirs[a]] += 1;
          counts[dirs[b]] += 1;
          try_counts(counts, dirs[a], dirs[b]);
        }
      }
    }
    *full = best_full;
    *edge_only = best_edge;
  }

  double bound(double extra_committed, double extra_turn, double full_rest,
               double edge_rest) const {
    const double need_turn =
        std::max(0.0, path_turn_bound - (turn_committed + extra_turn));
    return committed + extra_committed + std::max(full_rest, edge_rest + need_turn);
  }

  bool out_of_budget() {
    if (budget_hit) return true;
    if (nodes > node_budget) {
      budget_hit = true;
      return true;
    }
    if ((nodes & 0x1fff) == 0 && Clock::now() > deadline) {
      budget_hit = true;
      return true;
    }
    return false;
  }

  void search(std::int32_t v) {
    const std::size_t n = static_cast<std::size_t>(g.n());
    if (static_cast<std::size_t>(v) == n) {
      if (committed < best - kCostEps) {
        best = committed;
        best_edges = edge_mult;
        found = true;
      }
      return;
    }
    if (out_of_budget()) return;
    const std::size_t vi = static_cast<std::size_t>(v);
    const int mW = mult[vi][DualGraph::West];
    const int mS = mult[vi][DualGraph::South];
    const int r = need[vi] - mW - mS;
    if (r < 0) return;
    const std::int32_t ev = g.neighbor[vi][DualGraph::East];
    const std::int32_t nv = g.neighbor[vi][DualGraph::North];
    const int capE =
        ev < 0 ? 0
               : std::min(2, need[static_cast<std::size_t>(ev)] -
                                 decided_used[static_cast<std::size_t>(ev)]);
    const int capN =
        nv < 0 ? 0
               : std::min(2, need[static_cast<std::size_t>(nv)] -
                                 decided_used[static_cast<std::size_t>(nv)]);

    struct Option {
      int mE, mN;
      double delta;   // committed cost of this choice
      double dturn;   // turn-cost part of delta
      double full_rest, edge_rest;
      double lbE_full, lbE_edge, lbN_full, lbN_edge;
    };
    Option options[6];
    int nopt = 0;
    const double full_wo_v = sum_full - lb_full[vi];
    const double edge_wo_v = sum_edge - lb_edge[vi];
    for (int mE = 0; mE <= std::min(2, r); ++mE) {
      const int mN = r - mE;
      if (mE > capE || mN > capN || mN > 2) continue;
      // Turn cost at v from the now-complete stub multiset.
      double turn = 0.0;
      if (need[vi] == 2) {
        int per_dir[4] = {0, 0, 0, 0};
        per_dir[DualGraph::West] = mW;
        per_dir[DualGraph::East] = mE;
        per_dir[DualGraph::South] = mS;
        per_dir[DualGraph::North] = mN;
        int used[2] = {-1, -1};
        int nu = 0;
        for (int d = 0; d < 4; ++d) {
          for (int k = 0; k < per_dir[d]; ++k) used[nu++] = d;
        }
        if (axis_of(used[0]) != axis_of(used[1])) turn = 1.0;
      }
      const double dturn = (1.0 - alpha) * turn;
      const double delta =
          0.5 * alpha *
              (mW * edge_w(v, DualGraph::West) + mS * edge_w(v, DualGraph::South) +
               mE * edge_w(v, DualGraph::East) + mN * edge_w(v, DualGraph::North)) +
          dturn;
      Option op;
      op.mE = mE;
      op.mN = mN;
      op.delta = delta;
      op.dturn = dturn;
      double full_rest = full_wo_v;
      double edge_rest = edge_wo_v;
      op.lbE_full = op.lbE_edge = op.lbN_full = op.lbN_edge = 0.0;
      if (ev >= 0) {
        mult[static_cast<std::size_t>(ev)][DualGraph::West] =
            static_cast<std::int8_t>(mE);
        local_lb(ev, &op.lbE_full, &op.lbE_edge);
        mult[static_cast<std::size_t>(ev)][DualGraph::West] = -1;
        full_rest += op.lbE_full - lb_full[static_cast<std::size_t>(ev)];
        edge_rest += op.lbE_edge - lb_edge[static_cast<std::size_t>(ev)];
      }
      if (nv >= 0) {
        mult[static_cast<std::size_t>(nv)][DualGraph::South] =
            static_cast<std::int8_t>(mN);
        local_lb(nv, &op.lbN_full, &op.lbN_edge);
        mult[static_cast<std::size_t>(nv)][DualGraph::South] = -1;
        full_rest += op.lbN_full - lb_full[static_cast<std::size_t>(nv)];
        edge_rest += op.lbN_edge - lb_edge[static_cast<std::size_t>(nv)];
      }
      op.full_rest = full_rest;
      op.edge_rest = edge_rest;
      if (bound(delta, dturn, full_rest, edge_rest) >= best - kCostEps) continue;
      options[nopt++] = op;
    }
    std::stable_sort(options, options + nopt, [&](const Option& a, const Option& b) {
      return a.delta + a.full_rest < b.delta + b.full_rest - 1e-15;
    });

    for (int oi = 0; oi < nopt; ++oi) {
      const Option& op = options[oi];
      if (bound(op.delta, op.dturn, op.full_rest, op.edge_rest) >= best - kCostEps) {
        continue;
      }
      ++nodes;
      // Apply.
      const double saved_full = sum_full;
      const double saved_edge = sum_edge;
      double savedE_full = 0.0, savedE_edge = 0.0;
      double savedN_full = 0.0, savedN_edge = 0.0;
      mult[vi][DualGraph::East] = static_cast<std::int8_t>(op.mE);
      mult[vi][DualGraph::North] = static_cast<std::int8_t>(op.mN);
      decided_used[vi] =
          static_cast<std::int8_t>(decided_used[vi] + op.mE + op.mN);
      if (ev >= 0) {
        mult[static_cast<std::size_t>(ev)][DualGraph::West] =
            static_cast<std::int8_t>(op.mE);
        decided_used[static_cast<std::size_t>(ev)] =
            static_cast<std::int8_t>(decided_used[static_cast<std::size_t>(ev)] + op.mE);
        savedE_full = lb_full[static_cast<std::size_t>(ev)];
        savedE_edge = lb_edge[static_cast<std::size_t>(ev)];
        lb_full[static_cast<std::size_t>(ev)] = op.lbE_full;
        lb_edge[static_cast<std::size_t>(ev)] = op.lbE_edge;
        edge_mult[static_cast<std::size_t>(g.edge_at[vi][DualGraph::East])] =
            static_cast<std::uint8_t>(op.mE);
      }
      if (nv >= 0) {
        mult[static_cast<std::size_t>(nv)][DualGraph::South] =
            static_cast<std::int8_t>(op.mN);
        decided_used[static_cast<std::size_t>(nv)] =
            static_cast<std::int8_t>(decided_used[static_cast<std::size_t>(nv)] + op.mN);
        savedN_full = lb_full[static_cast<std::size_t>(nv)];
        savedN_edge = lb_edge[static_cast<std::size_t>(nv)];
        lb_full[static_cast<std::size_t>(nv)] = op.lbN_full;
        lb_edge[static_cast<std::size_t>(nv)] = op.lbN_edge;
        edge_mult[static_cast<std::size_t>(g.edge_at[vi][DualGraph::North])] =
            static_cast<std::uint8_t>(op.mN);
      }
      sum_full = op.full_rest;
      sum_edge = op.edge_rest;
      committed += op.delta;
      turn_committed += op.dturn;

      search(v + 1);

      committed -= op.delta;
      turn_committed -= op.dturn;
      sum_full = saved_full;
      sum_edge = saved_edge;
      if (nv >= 0) {
        lb_full[static_cast<std::size_t>(nv)] = savedN_full;
        lb_edge[static_cast<std::size_t>(nv)] = savedN_edge;
        decided_used[static_cast<std::size_t>(nv)] =
            static_cast<std::int8_t>(decided_used[static_cast<std::size_t>(nv)] - op.mN);
        mult[static_cast<std::size_t>(nv)][DualGraph::South] = -1;
        edge_mult[static_cast<std::size_t>(g.edge_at[vi][DualGraph::North])] = 0;
      }
      if (ev >= 0) {
        lb_full[static_cast<std::size_t>(ev)] = savedE_full;
        lb_edge[static_cast<std::size_t>(ev)] = savedE_edge;
        decided_used[static_cast<std::size_t>(ev)] =
            static_cast<std::int8_t>(decided_used[static_cast<std::size_t>(ev)] - op.mE);
        mult[static_cast<std::size_t>(ev)][DualGraph::West] = -1;
        edge_mult[static_cast<std::size_t>(g.edge_at[vi][DualGraph::East])] = 0;
      }
      decided_used[vi] =
          static_cast<std::int8_t>(decided_used[vi] - op.mE - op.mN);
      mult[vi][DualGraph::East] = -1;
      mult[vi][DualGraph::North] = -1;
      if (budget_hit) return;
    }
  }
};

// Adjacency-multiset view of a cover used by the 2-opt merge phases.
struct UCover {
  const DualGraph* g = nullptr;
  double alpha = 0.5;
  std::vector<std::array<std::int32_t, 2>> slot;  // -1 = empty
  std::vector<std::int32_t> comp;                 // 0 = the s-t path

  void init(const DualGraph& graph, double a) {
    g = &graph;
    alpha = a;
    slot.assign(static_cast<std::size_t>(graph.n()), {-1, -1});
    comp.assign(static_cast<std::size_t>(graph.n()), -1);
  }
  void add_link(std::int32_t u, std::int32_t v) {
    auto& su = slot[static_cast<std::size_t>(u)];
    auto& sv = slot[static_cast<std::size_t>(v)];
    if (su[0] < 0) {
      su[0] = v;
    } else {
      su[1] = v;
    }
    if (sv[0] < 0) {
      sv[0] = u;
    } else {
      sv[1] = u;
    }
  }
  void remove_link(std::int32_t u, std::int32_t v) {
    auto drop = [](std::array<std::int32_t, 2>& s, std::int32_t w) {
      if (s[1] == w) {
        s[1] = -1;
      } else {
        s[0] = s[1];
        s[1] = -1;
      }
    };
    drop(slot[static_cast<std::size_t>(u)], v);
    drop(slot[static_cast<std::size_t>(v)], u);
  }
  int mult(std::int32_t u, std::int32_t v) const {
    const auto& s = slot[static_cast<std::size_t>(u)];
    return (s[0] == v ? 1 : 0) + (s[1] == v ? 1 : 0);
  }
  double turn_at(std::int32_t v) const {
    const auto& s = slot[static_cast<std::size_t>(v)];
    if (s[0] < 0 || s[1] < 0) return 0.0;
    const GridPoint p = g->vertices[static_cast<std::size_t>(v)];
    const int d1 = dir_between(p, g->vertices[static_cast<std::size_t>(s[0])]);
    const int d2 = dir_between(p, g->vertices[static_cast<std::size_t>(s[1])]);
    return axis_of(d1) != axis_of(d2) ? 1.0 : 0.0;
  }
};

struct UnitSquare {
  std::int32_t a, b, c, d;  // a=(x,y) b=(x+1,y) c=(x,y+1) d=(x+1,y+1)
};

std::vector<UnitSquare> unit_squares(const DualGraph& g) {
  std::vector<UnitSquare> out;
  for (std::int32_t id = 0; id < g.n(); ++id) {
    const std::int32_t b = g.neighbor[static_cast<std::size_t>(id)][DualGraph::East];
    const std::int32_t c = g.neighbor[static_cast<std::size_t>(id)][DualGraph::North];
    if (b < 0 || c < 0) continue;
    const std::int32_t d = g.neighbor[static_cast<std::size_t>(b)][DualGraph::North];
    if (d < 0) continue;
    out.push_back({id, b, c, d});
  }
  return out;
}

double edge_weight_between(const DualGraph& g, std::int32_t u, std::int32_t v) {
  const GridPoint p = g.vertices[static_cast<std::size_t>(u)];
  const int d = dir_between(p, g.vertices[static_cast<std::size_t>(v)]);
  const std::int32_t eid = g.edge_at[static_cast<std::size_t>(u)][d];
  return g.edges[static_cast<std::size_t>(eid)].weight;
}

// Orientation 0 removes the horizontal sides (ab, cd) and inserts the
// vertical sides (ac, bd); orientation 1 is the reverse.
void exchange_sides(const UnitSquare& q, int orientation, std::int32_t rem[2][2],
                    std::int32_t add[2][2]) {
  if (orientation == 0) {
    rem[0][0] = q.a; rem[0][1] = q.b;
    rem[1][0] = q.c; rem[1][1] = q.d;
    add[0][0] = q.a; add[0][1] = q.c;
    add[1][0] = q.b; add[1][1] = q.d;
  } else {
    rem[0][0] = q.a; rem[0][1] = q.c;
    rem[1][0] = q.b; rem[1][1] = q.d;
    add[0][0] = q.a; add[0][1] = q.b;
    add[1][0] = q.c; add[1][1] = q.d;
  }
}

// Valid when the two removed sides sit in distinct components and neither
// inserted side is already used (so degrees stay intact after the swap).
bool exchange_valid(const UCover& uc, const UnitSquare& q, int orientation,
                    std::int32_t* comp1, std::int32_t* comp2) {
  std::int32_t rem[2][2], add[2][2];
  exchange_sides(q, orientation, rem, add);
  if (uc.mult(rem[0][0], rem[0][1]) < 1) return false;
  if (uc.mult(rem[1][0], rem[1][1]) < 1) return false;
  if (uc.mult(add[0][0], add[0][1]) > 0) return false;
  if (uc.mult(add[1][0], add[1][1]) > 0) return false;
  const std::int32_t c1 = uc.comp[static_cast<std::size_t>(rem[0][0])];
  const std::int32_t c2 = uc.comp[static_cast<std::size_t>(rem[1][0])];
  if (c1 == c2) return false;
  *comp1 = c1;
  *comp2 = c2;
  return true;
}

double apply_exchange(UCover& uc, const UnitSquare& q, int orientation) {
  std::int32_t rem[2][2], add[2][2];
  exchange_sides(q, orientation, rem, add);
  const std::int32_t corners[4] = {q.a, q.b, q.c, q.d};
  double turn_before = 0.0;
  for (auto v : corners) turn_before += uc.turn_at(v);
  double delta = 0.0;
  for (int i = 0; i < 2; ++i) {
    delta -= uc.alpha * edge_weight_between(*uc.g, rem[i][0], rem[i][1]);
    delta += uc.alpha * edge_weight_between(*uc.g, add[i][0], add[i][1]);
    uc.remove_link(rem[i][0], rem[i][1]);
  }
  for (int i = 0; i < 2; ++i) uc.add_link(add[i][0], add[i][1]);
  double turn_after = 0.0;
  for (auto v : corners) turn_after += uc.turn_at(v);
  return delta + (1.0 - uc.alpha) * (turn_after - turn_before);
}

void revert_exchange(UCover& uc, const UnitSquare& q, int orientation) {
  apply_exchange(uc, q, orientation == 0 ? 1 : 0);
}

double probe_exchange(UCover& uc, const UnitSquare& q, int orientation) {
  const double delta = apply_exchange(uc, q, orientation);
  revert_exchange(uc, q, orientation);
  return delta;
}

void relabel_component(UCover& uc, std::int32_t from, std::int32_t to) {
  for (auto& c : uc.comp) {
    if (c == from) c = to;
  }
}

UCover ucover_from_cover(const CycleCover& cover, const DualGraph& g) {
  UCover uc;
  uc.init(g, cover.alpha);
  std::size_t covered = cover.path.size();
  for (std::size_t i = 0; i + 1 < cover.path.size(); ++i) {
    uc.add_link(cover.path[i], cover.path[i + 1]);
  }
  for (auto v : cover.path) uc.comp[static_cast<std::size_t>(v)] = 0;
  std::int32_t next_comp = 1;
  for (const auto& cyc : cover.cycles) {
    covered += cyc.size();
    for (std::size_t i = 0; i < cyc.size(); ++i) {
      uc.add_link(cyc[i], cyc[(i + 1) % cyc.size()]);
      uc.comp[static_cast<std::size_t>(cyc[i])] = next_comp;
    }
    ++next_comp;
  }
  if (covered != static_cast<std::size_t>(g.n())) {
    throw SolverError("cover does not visit every vertex exactly once");
  }
  return uc;
}

// Walks the path and the cycles back out of the adjacency view.
CycleCover cover_from_ucover(const UCover& uc, const DualGraph& g) {
  CycleCover cover;
  cover.alpha = uc.alpha;
  const std::int32_t n = g.n();
  std::vector<std::array<std::int32_t, 2>> slots = uc.slot;
  std::vector<char> done(static_cast<std::size_t>(n), 0);
  auto take_next = [&](std::int32_t cur, std::int32_t prev) {
    auto& s = slots[static_cast<std::size_t>(cur)];
    std::int32_t nxt = -1;
    if (prev >= 0) {
      // Consume the slot we arrived through first.
      if (s[0] == prev) {
        s[0] = s[1];
        s[1] = -1;
      } else {
        s[1] = -1;
      }
    }
    nxt = s[0];
    return nxt;
  };
  if (n > 0) {
    std::int32_t cur = g.s, prev = -1;
    cover.path.push_back(cur);
    done[static_cast<std::size_t>(cur)] = 1;
    while (true) {
      const std::int32_t nxt = take_next(cur, prev);
      if (nxt < 0) break;
      cover.path.push_back(nxt);
      done[static_cast<std::size_t>(nxt)] = 1;
      prev = cur;
      cur = nxt;
    }
  }
  for (std::int32_t v = 0; v < n; ++v) {
    if (done[static_cast<std::size_t>(v)]) continue;
    std::vector<std::int32_t> cyc;
    std::int32_t cur = v, prev = -1;
    while (true) {
      cyc.push_back(cur);
      done[static_cast<std::size_t>(cur)] = 1;
      const std::int32_t nxt = take_next(cur, prev);
      prev = cur;
      cur = nxt;
      if (cur == v || cur < 0) {
        if (cur == v) take_next(cur, prev);  // consume the closing slot
        break;
      }
    }
    cover.cycles.push_back(std::move(cyc));
  }
  // Each link is charged once, from its higher endpoint; a doubled edge sits
  // in both slots and is charged twice.
  cover.objective = 0.0;
  for (std::int32_t v = 0; v < n; ++v) {
    cover.objective += (1.0 - uc.alpha) * uc.turn_at(v);
    for (int k = 0; k < 2; ++k) {
      const std::int32_t w = uc.slot[static_cast<std::size_t>(v)][k];
      if (w >= 0 && w < v) cover.objective += uc.alpha * edge_weight_between(g, v, w);
    }
  }
  return cover;
}

}  // namespace

double cover_objective(const DualGraph& graph, const CycleCover& cover) {
  UCover uc = ucover_from_cover(cover, graph);
  double obj = 0.0;
  for (std::int32_t v = 0; v < graph.n(); ++v) {
    obj += (1.0 - uc.alpha) * uc.turn_at(v);
    for (int k = 0; k < 2; ++k) {
      const std::int32_t w = uc.slot[static_cast<std::size_t>(v)][k];
      if (w >= 0 && w < v) obj += uc.alpha * edge_weight_between(graph, v, w);
    }
  }
  return obj;
}

CycleCover solve_relaxed(const MipModel& model, std::chrono::milliseconds limit) {
  if (model.subtours) throw SolverError("solve_relaxed requires subtours=false");
  const DualGraph& g = *model.graph;
  if (g.s < 0 || g.t < 0) throw SolverError("graph s/t unset");
  CycleCover trivial;
  trivial.alpha = model.alpha;
  if (g.n() == 1) {
    trivial.path = {g.s};
    return trivial;
  }
  if (g.s == g.t) throw SolverError("s == t on a multi-vertex graph");

  RelaxedSearch search(g, model.alpha);
  search.node_budget =
      std::max<std::uint64_t>(100000, static_cast<std::uint64_t>(limit.count()) * 4000);
  search.deadline = Clock::now() + limit;
  search.search(0);
  if (!search.found) {
    if (search.budget_hit) throw SolverError("relaxed solve: budget hit with no cover");
    throw SolverError("relaxed solve: no degree-feasible cover exists");
  }

  UCover uc;
  uc.init(g, model.alpha);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    for (int k = 0; k < search.best_edges[e]; ++k) {
      uc.add_link(g.edges[e].u, g.edges[e].v);
    }
  }
  CycleCover cover = cover_from_ucover(uc, g);
  cover.optimal = !search.budget_hit;
  return cover;
}

CycleCover join_cycles(CycleCover cover, const DualGraph& graph) {
  if (cover.cycles.empty()) return cover;
  UCover uc = ucover_from_cover(cover, graph);
  const auto squares = unit_squares(graph);

  struct Candidate {
    double delta;
    std::int32_t c1, c2;  // c1 < c2
    std::int32_t sq;
    int orientation;
  };

  while (true) {
    std::map<std::pair<std::int32_t, std::int32_t>, Candidate> best;
    for (std::int32_t si = 0; si < static_cast<std::int32_t>(squares.size()); ++si) {
      for (int o = 0; o < 2; ++o) {
        std::int32_t c1, c2;
        if (!exchange_valid(uc, squares[static_cast<std::size_t>(si)], o, &c1, &c2)) {
          continue;
        }
        if (c1 == 0 || c2 == 0) continue;  // cycle-cycle merges only here
        if (c1 > c2) std::swap(c1, c2);
        const double delta = probe_exchange(uc, squares[static_cast<std::size_t>(si)], o);
        const auto key = std::make_pair(c1, c2);
        auto it = best.find(key);
        if (it == best.end() || delta < it->second.delta - kCostEps) {
          best[key] = {delta, c1, c2, si, o};
        }
      }
    }
    if (best.empty()) break;
    std::vector<Candidate> cands;
    cands.reserve(best.size());
    for (auto& [k, v] : best) cands.push_back(v);
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      return a.delta < b.delta - kCostEps;
    });
    // Kruskal over cycle components; stale squares are skipped and picked up
    // on the next outer pass.
    bool applied = false;
    for (const auto& cand : cands) {
      std::int32_t c1, c2;
      if (!exchange_valid(uc, squares[static_cast<std::size_t>(cand.sq)],
                          cand.orientation, &c1, &c2)) {
        continue;
      }
      if (c1 == 0 || c2 == 0 || c1 == c2) continue;
      apply_exchange(uc, squares[static_cast<std::size_t>(cand.sq)], cand.orientation);
      relabel_component(uc, std::max(c1, c2), std::min(c1, c2));
      applied = true;
    }
    if (!applied) break;
  }
  CycleCover out = cover_from_ucover(uc, graph);
  out.optimal = cover.optimal;
  return out;
}

std::optional<PathSolution> join_cycles_with_path(const CycleCover& cover,
                                                  const DualGraph& graph) {
  UCover uc = ucover_from_cover(cover, graph);
  const auto squares = unit_squares(graph);
  std::vector<std::int32_t> remaining;
  for (std::int32_t i = 1; i <= static_cast<std::int32_t>(cover.cycles.size()); ++i) {
    remaining.push_back(i);
  }
  while (!remaining.empty()) {
    // Count exchange squares each remaining cycle shares with the current
    // path; absorb the most constrained one first.
    std::int32_t pick = -1;
    std::int64_t pick_count = std::numeric_limits<std::int64_t>::max();
    for (const auto comp : remaining) {
      std::int64_t count = 0;
      for (std::int32_t si = 0; si < static_cast<std::int32_t>(squares.size()); ++si) {
        for (int o = 0; o < 2; ++o) {
          std::int32_t c1, c2;
          if (!exchange_valid(uc, squares[static_cast<std::size_t>(si)], o, &c1, &c2)) {
            continue;
          }
          if ((c1 == 0 && c2 == comp) || (c2 == 0 && c1 == comp)) ++count;
        }
      }
      if (count > 0 && count < pick_count) {
        pick_count = count;
        pick = comp;
      }
    }
    if (pick < 0) return std::nullopt;  // some cycle shares no square with the path
    double best_delta = kInf;
    std::int32_t best_sq = -1;
    int best_o = 0;
    for (std::int32_t si = 0; si < static_cast<std::int32_t>(squares.size()); ++si) {
      for (int o = 0; o < 2; ++o) {
        std::int32_t c1, c2;
        if (!exchange_valid(uc, squares[static_cast<std::size_t>(si)], o, &c1, &c2)) {
          continue;
        }
        if (!((c1 == 0 && c2 == pick) || (c2 == 0 && c1 == pick))) continue;
        const double delta = probe_exchange(uc, squares[static_cast<std::size_t>(si)], o);
        if (delta < best_delta - kCostEps) {
          best_delta = delta;
          best_sq = si;
          best_o = o;
        }
      }
    }
    apply_exchange(uc, squares[static_cast<std::size_t>(best_sq)], best_o);
    relabel_component(uc, pick, 0);
    remaining.erase(std::find(remaining.begin(), remaining.end(), pick));
  }
  CycleCover merged = cover_from_ucover(uc, graph);
  if (!merged.cycles.empty() ||
      merged.path.size() != static_cast<std::size_t>(graph.n())) {
    return std::nullopt;
  }
  PathSolution sol = make_path_solution(graph, merged.path, cover.alpha);
  return sol;
}

PathSolution make_path_solution(const DualGraph& graph,
                                const std::vector<std::int32_t>& vertices,
                                double alpha) {
  PathSolution sol;
  sol.vertices = vertices;
  for (std::size_t i = 0; i + 1 < vertices.size(); ++i) {
    sol.edge_cost += edge_weight_between(graph, vertices[i], vertices[i + 1]);
    if (i > 0) {
      const GridPoint p = graph.vertices[static_cast<std::size_t>(vertices[i])];
      const int din = dir_between(graph.vertices[static_cast<std::size_t>(vertices[i - 1])], p);
      const int dout = dir_between(p, graph.vertices[static_cast<std::size_t>(vertices[i + 1])]);
      if (axis_of(din) != axis_of(dout)) ++sol.turn_count;
    }
  }
  const int interior = std::max(0, static_cast<int>(vertices.size()) - 2);
  sol.straight_count = interior - sol.turn_count;
  sol.objective = alpha * sol.edge_cost + (1.0 - alpha) * sol.turn_count;
  return sol;
}

// ---------------------------------------------------------------------------
// Exact Hamiltonian path searches.
// ---------------------------------------------------------------------------

namespace {

struct PathSearch {
  const DualGraph& g;
  double alpha;
  bool prune_connectivity;
  std::vector<char> visited;
  std::vector<std::int32_t> seq;
  double cost = 0.0;
  double best = kInf;
  std::vector<std::int32_t> best_seq;
  std::uint64_t nodes = 0;
  std::uint64_t node_budget = std::numeric_limits<std::uint64_t>::max();
  Clock::time_point deadline = Clock::time_point::max();
  bool budget_hit = false;
  double min_edge_weight = 0.0;
  std::vector<std::int32_t> bfs_queue;
  std::vector<std::int32_t> bfs_mark;
  std::int32_t bfs_stamp = 0;

  PathSearch(const DualGraph& graph, double a, bool conn)
      : g(graph), alpha(a), prune_connectivity(conn) {
    visited.assign(static_cast<std::size_t>(g.n()), 0);
    min_edge_weight = kInf;
    for (const auto& e : g.edges) min_edge_weight = std::min(min_edge_weight, e.weight);
    if (g.edges.empty()) min_edge_weight = 0.0;
    bfs_mark.assign(static_cast<std::size_t>(g.n()), 0);
  }

  bool out_of_budget() {
    if (budget_hit) return true;
    if (nodes > node_budget) {
      budget_hit = true;
      return true;
    }
    if ((nodes & 0x3ff) == 0 && Clock::now() > deadline) {
      budget_hit = true;
      return true;
    }
    return false;
  }

  // All unvisited vertices must stay reachable from the current endpoint.
  bool connected_remainder(std::int32_t cur, std::int32_t remaining) {
    ++bfs_stamp;
    bfs_queue.clear();
    bfs_queue.push_back(cur);
    bfs_mark[static_cast<std::size_t>(cur)] = bfs_stamp;
    std::int32_t seen = 0;
    for (std::size_t h = 0; h < bfs_queue.size(); ++h) {
      const std::int32_t v = bfs_queue[h];
      for (int d = 0; d < 4; ++d) {
        const std::int32_t w = g.neighbor[static_cast<std::size_t>(v)][d];
        if (w < 0 || visited[static_cast<std::size_t>(w)]) continue;
        if (bfs_mark[static_cast<std::size_t>(w)] == bfs_stamp) continue;
        bfs_mark[static_cast<std::size_t>(w)] = bfs_stamp;
        bfs_queue.push_back(w);
        ++seen;
      }
    }
    return seen == remaining;
  }

  void dfs(std::int32_t cur, std::int32_t prev) {
    if (static_cast<std::int32_t>(seq.size()) == g.n()) {
      if (cur == g.t && cost < best - kCostEps) {
        best = cost;
        best_seq = seq;
      }
      return;
    }
    if (cur == g.t) return;  // the exit vertex must come last
    if (out_of_budget()) return;
    const std::int32_t remaining = g.n() - static_cast<std::int32_t>(seq.size());
    if (cost + alpha * min_edge_weight * remaining >= best - kCostEps) return;
    if (prune_connectivity && !connected_remainder(cur, remaining)) return;

    // Deterministic neighbor order: ascending vertex id.
    std::int32_t order[4];
    int cnt = 0;
    for (int d = 0; d < 4; ++d) {
      const std::int32_t w = g.neighbor[static_cast<std::size_t>(cur)][d];
      if (w >= 0 && !visited[static_cast<std::size_t>(w)]) order[cnt++] = w;
    }
    std::sort(order, order + cnt);
    for (int i = 0; i < cnt; ++i) {
      const std::int32_t nxt = order[i];
      ++nodes;
      double delta = alpha * edge_weight_between(g, cur, nxt);
      if (prev >= 0) {
        const GridPoint p = g.vertices[static_cast<std::size_t>(cur)];
        const int din = dir_between(g.vertices[static_cast<std::size_t>(prev)], p);
        const int dout = dir_between(p, g.vertices[static_cast<std::size_t>(nxt)]);
        if (axis_of(din) != axis_of(dout)) delta += (1.0 - alpha);
      }
      if (cost + delta >= best - kCostEps) continue;
      visited[static_cast<std::size_t>(nxt)] = 1;
      seq.push_back(nxt);
      cost += delta;
      dfs(nxt, cur);
      cost -= delta;
      seq.pop_back();
      visited[static_cast<std::size_t>(nxt)] = 0;
      if (budget_hit) return;
    }
  }

  std::optional<PathSolution> run() {
    if (g.n() == 1) {
      if (g.s != g.t) return std::nullopt;
      PathSolution sol;
      sol.vertices = {g.s};
      sol.exact = true;
      return sol;
    }
    if (g.s == g.t) return std::nullopt;
    visited[static_cast<std::size_t>(g.s)] = 1;
    seq.push_back(g.s);
    dfs(g.s, -1);
    if (best_seq.empty()) return std::nullopt;
    PathSolution sol = make_path_solution(g, best_seq, alpha);
    sol.exact = !budget_hit;
    return sol;
  }
};

}  // namespace

std::optional<PathSolution> exact_oracle(const DualGraph& graph, double alpha) {
  if (graph.s < 0 || graph.t < 0) throw SolverError("graph s/t unset");
  PathSearch search(graph, alpha, false);
  auto sol = search.run();
  if (sol) sol->exact = true;  // unbudgeted: exhaustive by construction
  return sol;
}

std::optional<PathSolution> solve_full(const DualGraph& graph, double alpha,
                                       std::chrono::milliseconds limit) {
  if (graph.s < 0 || graph.t < 0) throw SolverError("graph s/t unset");
  PathSearch search(graph, alpha, true);
  search.node_budget =
      std::max<std::uint64_t>(100000, static_cast<std::uint64_t>(limit.count()) * 2000);
  search.deadline = Clock::now() + limit;
  return search.run();
}

PathSolution solve_cell(const DualGraph& graph, double alpha,
                        const SolverConfig& config) {
  return solve_cell(graph, alpha, config, {});
}

PathSolution solve_cell(const DualGraph& graph, double alpha,
                        const SolverConfig& config,
                        const std::vector<std::int32_t>& hint_path) {
  if (graph.s < 0 || graph.t < 0) throw SolverError("graph s/t unset");
  if (graph.n() == 1) {
    PathSolution sol;
    sol.vertices = {graph.s};
    sol.exact = true;
    return sol;
  }
  if (graph.n() <= config.exact_threshold) {
    auto sol = exact_oracle(graph, alpha);
    if (!sol) throw SolverError("no Hamiltonian path on small cell");
    return *sol;
  }
  MipModel model = build_mip(graph, alpha, false);
  CycleCover cover = solve_relaxed(model, config.relaxed_time_limit);
  const bool relaxed_exact = cover.optimal;
  const bool already_path = cover.cycles.empty();
  cover = join_cycles(std::move(cover), graph);
  auto sol = join_cycles_with_path(cover, graph);
  if (!sol) {
    auto full = solve_full(graph, alpha, config.full_time_limit);
    if (!full) throw SolverError("cell solve failed: no Hamiltonian path found in time");
    full->used_fallback = true;
    sol = std::move(full);
  } else {
    // A cycle-free optimal relaxation is itself an optimal Hamiltonian path.
    sol->exact = relaxed_exact && already_path;
  }
  if (hint_path.size() == static_cast<std::size_t>(graph.n()) &&
      hint_path.front() == graph.s && hint_path.back() == graph.t) {
    bool valid = true;
    std::vector<char> seen(static_cast<std::size_t>(graph.n()), 0);
    for (std::size_t i = 0; valid && i < hint_path.size(); ++i) {
      const std::int32_t v = hint_path[i];
      if (v < 0 || v >= graph.n() || seen[static_cast<std::size_t>(v)]) valid = false;
      if (valid) seen[static_cast<std::size_t>(v)] = 1;
      if (valid && i + 1 < hint_path.size()) {
        bool adjacent = false;
        for (int d = 0; d < 4; ++d) {
          adjacent |= graph.neighbor[static_cast<std::size_t>(v)][d] == hint_path[i + 1];
        }
        valid = adjacent;
      }
    }
    if (valid) {
      PathSolution hinted = make_path_solution(graph, hint_path, alpha);
      if (hinted.objective <= sol->objective + kCostEps) {
        hinted.exact = sol->exact;
        hinted.used_fallback = sol->used_fallback;
        return hinted;
      }
    }
  }
  return *sol;
}

// ---------------------------------------------------------------------------
// Rectangular feasibility (the four forbidden conditions).
// ---------------------------------------------------------------------------

namespace {

inline int color1(int x, int y) { return (x + y) & 1; }  // 1-based coords

}  // namespace

bool feasible_rectangular(int m, int n, GridPoint s, GridPoint t) {
  if (m < 1 || n < 1) throw SolverError("degenerate rectangle");
  if (s.x < 1 || s.x > m || s.y < 1 || s.y > n || t.x < 1 || t.x > m || t.y < 1 ||
      t.y > n) {
    throw SolverError("endpoint outside rectangle");
  }
  if (s == t) throw SolverError("s == t");
  // Normalize orientation: short side becomes the row count n.
  if (m < n) {
    std::swap(m, n);
    std::swap(s.x, s.y);
    std::swap(t.x, t.y);
  }
  // Condition 1: color compatibility. Even boards need differently colored
  // endpoints; odd boards need both endpoints on the majority color, the one
  // holding the corners.
  const std::int64_t total = static_cast<std::int64_t>(m) * n;
  const int cs = color1(s.x, s.y);
  const int ct = color1(t.x, t.y);
  if (total % 2 == 0) {
    if (cs == ct) return false;
  } else {
    if (cs != 0 || ct != 0) return false;
  }
  // Condition 2: a 1-row strip needs both endpoints at its ends.
  if (n == 1) {
    if (s.x != 1 && s.x != m) return false;
    if (t.x != 1 && t.x != m) return false;
  }
  // Condition 3: on a 2-row board, an adjacent pair across an interior rung
  // walls off one side.
  if (n == 2) {
    const bool adjacent = std::abs(s.x - t.x) + std::abs(s.y - t.y) == 1;
    if (adjacent && s.x == t.x && s.x > 1 && s.x < m) return false;
  }
  // Condition 4: 3-row boards. With p the odd-colored endpoint and q the
  // even-colored one, the path is cut off when q sits two or more columns
  // right of p, or immediately right of a middle-row p. (Only even widths
  // reach this point with differing colors; verified exhaustively against
  // the path-search oracle.)
  if (n == 3 && cs != ct) {
    const GridPoint p = (cs == 1) ? s : t;
    const GridPoint q = (cs == 1) ? t : s;
    const int diff = q.x - p.x;
    if (diff >= 2) return false;
    if (diff == 1 && p.y == 2) return false;
  }
  return true;
}

}  // namespace infill
