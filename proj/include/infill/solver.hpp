#pragma once

#include <chrono>
#include <optional>
#include <ostream>
#include <vector>

#include "infill/config.hpp"
#include "infill/geometry.hpp"

namespace infill {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The mixed integer program over directed edge variables. Absent edges are
// not modeled as variables at all. Reversal pairs ((i,j),(j,i)) count as
// collinear, so a back-and-forth over one edge carries no turn cost and the
// relaxed model admits 2-cycles, matching the formulation without the
// order-variable constraints.
struct MipModel {
  struct Arc {
    std::int32_t from = -1;
    std::int32_t to = -1;
    double weight = 1.0;
  };
  struct TurnEntry {
    std::int32_t arc_in = -1;   // arc (i,j)
    std::int32_t arc_out = -1;  // arc (j,k)
    std::int32_t vertex = -1;   // j
    bool perpendicular = false; // the A_{ijk} indicator
  };
  std::vector<Arc> arcs;              // two per undirected edge
  std::vector<TurnEntry> turn_entries;
  double alpha = 0.5;
  bool subtours = false;  // include order-variable subtour elimination
  const DualGraph* graph = nullptr;
};

// One s-t path plus vertex-disjoint directed cycles covering every vertex
// exactly once. A 2-cycle is listed as a two-vertex cycle (the edge is
// traversed in both directions).
struct CycleCover {
  std::vector<std::int32_t> path;                  // s..t
  std::vector<std::vector<std::int32_t>> cycles;   // canonical start/direction
  double alpha = 0.5;
  double objective = 0.0;
  bool optimal = true;  // false when returned as a time-limited incumbent
};

struct PathSolution {
  std::vector<std::int32_t> vertices;  // s..t, every graph vertex once
  double edge_cost = 0.0;
  int turn_count = 0;
  int straight_count = 0;
  double objective = 0.0;
  bool exact = false;          // objective proven optimal
  bool used_fallback = false;  // heuristic failed once, full model succeeded
};

MipModel build_mip(const DualGraph& graph, double alpha, bool subtours);

// LP-file text export for external solver cross-checks.
void write_lp(const MipModel& model, std::ostream& out);

// Exact minimization of the relaxed model (no subtour constraints) by
// branch-and-bound over per-vertex edge pairings. Hitting the budget returns
// the best incumbent with optimal=false.
CycleCover solve_relaxed(const MipModel& model, std::chrono::milliseconds limit);

// Merges cycles into bigger cycles along a minimum spanning forest of the
// cycle-adjacency graph, where two cycles are adjacent when a unit square has
// two opposite sides, one in each. Repeats until stable.
CycleCover join_cycles(CycleCover cover, const DualGraph& graph);

// Absorbs the remaining cycles into the s-t path, most-constrained cycle
// first, cheapest exchange square each step. Empty result when some cycle
// never shares an exchange square with the path.
std::optional<PathSolution> join_cycles_with_path(const CycleCover& cover,
                                                  const DualGraph& graph);

// Exhaustive backtracking over Hamiltonian s-t paths; minimum objective with
// lexicographic vertex-sequence tie-break. Empty when no path exists.
std::optional<PathSolution> exact_oracle(const DualGraph& graph, double alpha);

// Per-cell driver: oracle below the exact threshold, otherwise
// relax -> join cycles -> join into path, with a full-model retry on failure.
// Throws SolverError only on total failure. A warm-start hint (e.g. the
// previous layer's path over the same cell) competes with the heuristic
// result by objective and wins ties, so re-solving an unchanged subproblem
// reproduces the earlier path.
PathSolution solve_cell(const DualGraph& graph, double alpha,
                        const SolverConfig& config);
PathSolution solve_cell(const DualGraph& graph, double alpha,
                        const SolverConfig& config,
                        const std::vector<std::int32_t>& hint_path);

// Hamiltonian path existence on the rectangular grid R(m,n) with 1-based
// endpoint coordinates.
bool feasible_rectangular(int m, int n, GridPoint s, GridPoint t);

// Exact branch-and-bound over Hamiltonian s-t paths (the full model with
// subtour elimination). Returns the incumbent when the budget runs out,
// nothing if no Hamiltonian path was found at all.
std::optional<PathSolution> solve_full(const DualGraph& graph, double alpha,
                                       std::chrono::milliseconds limit);

// Objective of a cover under the turn-cost convention above; test support.
double cover_objective(const DualGraph& graph, const CycleCover& cover);

// Builds a PathSolution (costs, turn counts) from a vertex sequence.
PathSolution make_path_solution(const DualGraph& graph,
                                const std::vector<std::int32_t>& vertices,
                                double alpha);

}  // namespace infill
