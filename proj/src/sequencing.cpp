#include "infill/sequencing.hpp"

#include <algorithm>
#include <limits>

namespace infill {

namespace {

IopRegion union_of_cells(const std::vector<QuadCell>& cells) {
  std::int32_t minx = std::numeric_limits<std::int32_t>::max(), maxx = -minx;
  std::int32_t miny = minx, maxy = -minx;
  for (const QuadCell& c : cells) {
    minx = std::min(minx, c.origin.x);
    miny = std::min(miny, c.origin.y);
    maxx = std::max(maxx, c.origin.x + c.size - 1);
    maxy = std::max(maxy, c.origin.y + c.size - 1);
  }
  IopRegion r;
  r.origin = {minx, miny};
  r.width = maxx - minx + 1;
  r.height = maxy - miny + 1;
  r.mask.assign(static_cast<std::size_t>(r.width) * r.height, 0);
  for (const QuadCell& c : cells) {
    for (std::int32_t y = 0; y < c.size; ++y) {
      for (std::int32_t x = 0; x < c.size; ++x) {
        const std::int32_t lx = c.origin.x + x - minx;
        const std::int32_t ly = c.origin.y + y - miny;
        r.mask[static_cast<std::size_t>(ly) * r.width + lx] = 1;
      }
    }
  }
  return r;
}

JoinedCell make_joined(const CellSequence& seq, std::size_t lo, std::size_t hi) {
  JoinedCell jc;
  for (std::size_t i = lo; i < hi; ++i) {
    jc.members.push_back(seq.cells[i]);
    jc.constituent_entries.push_back({seq.s_vertex[i], seq.t_vertex[i]});
  }
  jc.region = union_of_cells(jc.members);
  jc.graph = build_dual_graph(jc.region);
  jc.s = jc.graph.id_at(seq.s_vertex[lo]);
  jc.t = jc.graph.id_at(seq.t_vertex[hi - 1]);
  if (jc.s < 0 || jc.t < 0) {
    throw SequencingError("entry/exit vertex not in joined region");
  }
  jc.graph.s = jc.s;
  jc.graph.t = jc.t;
  return jc;
}

}  // namespace

JoinedSequence join_cells(const CellSequence& seq, std::int64_t max_area) {
  JoinedSequence out;
  if (seq.cells.empty()) return out;
  for (const QuadCell& c : seq.cells) {
    if (c.area() > max_area) {
      throw SequencingError("max area smaller than a single cell");
    }
  }
  // Phase 1: maximal runs where consecutive exit/entry gaps equal 1.
  std::vector<std::pair<std::size_t, std::size_t>> runs;  // [begin, end)
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= seq.cells.size(); ++i) {
    const bool brk =
        i == seq.cells.size() ||
        rectilinear_gap(seq.t_vertex[i - 1], seq.s_vertex[i]) > 1;
    if (brk) {
      runs.push_back({begin, i});
      begin = i;
    }
  }
  // Phase 2: greedy first-fit area packing within each run.
  for (auto [lo, hi] : runs) {
    std::size_t start = lo;
    std::int64_t area = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      const std::int64_t a = seq.cells[i].area();
      if (i > start && area + a > max_area) {
        out.items.push_back(make_joined(seq, start, i));
        start = i;
        area = 0;
      }
      area += a;
    }
    out.items.push_back(make_joined(seq, start, hi));
  }
  return out;
}

namespace {

// Candidate replacements for one end of a joined cell, all of which keep a
// Hamiltonian path guaranteed. Staying inside the first/last member cell
// preserves the chain construction for any vertex of the original's color
// (member cells are squares, where any opposite-colored endpoint pair
// works); on a rectangular union with both sides >= 4 only the color
// condition constrains endpoints at all. Thin rectangles and ragged unions
// stay on the member-cell rule.
std::vector<std::int32_t> end_candidates(const JoinedCell& jc, GridPoint original,
                                         bool entry_side) {
  std::vector<std::int32_t> out;
  const QuadCell& cell = entry_side ? jc.members.front() : jc.members.back();
  const bool wide_rectangle = jc.region.is_full_rectangle() &&
                              std::min(jc.region.width, jc.region.height) >= 4;
  for (std::int32_t id = 0; id < jc.graph.n(); ++id) {
    const GridPoint v = jc.graph.vertices[static_cast<std::size_t>(id)];
    if (vertex_parity(v) != vertex_parity(original)) continue;
    if (wide_rectangle || cell.contains(v)) out.push_back(id);
  }
  return out;
}

}  // namespace

void update_entry_exit(JoinedSequence& jseq) {
  const std::size_t k = jseq.items.size();
  for (std::size_t i = 0; i < k; ++i) {
    JoinedCell& jc = jseq.items[i];
    if (jc.graph.n() == 1) continue;

    // Entry side: the first joined cell keeps its entry (no gap constrains it).
    if (i > 0) {
      const GridPoint prev_exit = jseq.items[i - 1].t_vertex();
      const GridPoint original = jc.s_vertex();
      std::int32_t best = jc.s;
      std::int64_t best_gap = rectilinear_gap(prev_exit, original);
      for (const auto id : end_candidates(jc, original, true)) {
        const std::int64_t gap = rectilinear_gap(
            prev_exit, jc.graph.vertices[static_cast<std::size_t>(id)]);
        if (gap < best_gap || (gap == best_gap && id < best)) {
          best = id;
          best_gap = gap;
        }
      }
      jc.s = best;
      jc.graph.s = best;
    }
    // Exit side: the last joined cell keeps its exit. The forward gap is
    // measured against the next cell's current entry, which step i+1 then
    // improves further.
    if (i + 1 < k) {
      const GridPoint next_entry = jseq.items[i + 1].s_vertex();
      const GridPoint original = jc.t_vertex();
      std::int32_t best = jc.t;
      std::int64_t best_gap = rectilinear_gap(original, next_entry);
      for (const auto id : end_candidates(jc, original, false)) {
        const std::int64_t gap = rectilinear_gap(
            jc.graph.vertices[static_cast<std::size_t>(id)], next_entry);
        if (gap < best_gap || (gap == best_gap && id < best)) {
          best = id;
          best_gap = gap;
        }
      }
      jc.t = best;
      jc.graph.t = best;
    }
  }
}

std::int64_t total_idle_length(const JoinedSequence& jseq) {
  std::int64_t idle = 0;
  for (std::size_t i = 0; i + 1 < jseq.items.size(); ++i) {
    const std::int64_t gap =
        rectilinear_gap(jseq.items[i].t_vertex(), jseq.items[i + 1].s_vertex());
    if (gap > 1) idle += gap;
  }
  return idle;
}

}  // namespace infill
