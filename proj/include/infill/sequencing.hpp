#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "infill/decomposition.hpp"
#include "infill/geometry.hpp"

namespace infill {

class SequencingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A run of consecutive cells merged into one subproblem. The union region is
// solved as a single Hamiltonian path problem from s (in the first member) to
// t (in the last member).
struct JoinedCell {
  std::vector<QuadCell> members;  // ordered sublist of the cell sequence
  IopRegion region;
  DualGraph graph;
  std::int32_t s = -1;
  std::int32_t t = -1;
  std::vector<std::pair<GridPoint, GridPoint>> constituent_entries;

  GridPoint s_vertex() const { return graph.vertices[static_cast<std::size_t>(s)]; }
  GridPoint t_vertex() const { return graph.vertices[static_cast<std::size_t>(t)]; }
};

struct JoinedSequence {
  std::vector<JoinedCell> items;
};

// Splits the sequence into maximal runs where consecutive exit/entry gaps are
// exactly 1, then greedily packs each run left to right into unions of area
// at most max_area. Requires the cell s/t vertices to be assigned.
JoinedSequence join_cells(const CellSequence& seq, std::int64_t max_area);

// Re-picks entry/exit vertices to shrink the idle hops between consecutive
// joined cells, preserving each endpoint's color so a Hamiltonian path keeps
// existing. Greedy left-to-right; never increases any single gap.
void update_entry_exit(JoinedSequence& jseq);

// Total idle length: the sum of exit-to-entry gaps longer than one unit
// (unit gaps are printable connector edges).
std::int64_t total_idle_length(const JoinedSequence& jseq);

}  // namespace infill
