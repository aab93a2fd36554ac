#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <set>

#include "infill/decomposition.hpp"
#include "test_support.hpp"

using namespace infill;
using testsupport::full_rect;
using testsupport::region_from_art;

namespace {

// The L-shaped 8x8 domain missing its north-east quadrant; with delta=4 its
// twelve 2x2 cells order as [0..7, 12..15] of the full 16-cell grid.
IopRegion l_shape_8x8() {
  return region_from_art({
      "####....",
      "####....",
      "####....",
      "####....",
      "########",
      "########",
      "########",
      "########",
  });
}

std::vector<GridPoint> cell_origins(const CellSequence& seq) {
  std::vector<GridPoint> out;
  for (const auto& c : seq.cells) out.push_back(c.origin);
  return out;
}

}  // namespace

TEST_CASE("8x8 with delta 4 gives sixteen 2x2 leaves") {
  const auto tree = build_quadtree(full_rect(8, 8), 4);
  CHECK(tree.root_exponent == 3);
  CHECK(tree.leaves.size() == 16);
  for (const auto& leaf : tree.leaves) {
    CHECK(leaf.size == 2);
    CHECK(leaf.status == CellStatus::FullyInside);
  }
}

TEST_CASE("single pixel region gives one unit leaf") {
  const auto tree = build_quadtree(full_rect(1, 1), 64);
  CHECK(tree.leaves.size() == 1);
  CHECK(tree.leaves[0].size == 1);
}

TEST_CASE("L-shaped 4x4 minus corner with large delta keeps three 2x2 leaves") {
  const auto region = region_from_art({
      "##..",
      "##..",
      "####",
      "####",
  });
  const auto tree = build_quadtree(region, 16);
  CHECK(tree.leaves.size() == 3);
  for (const auto& leaf : tree.leaves) CHECK(leaf.size == 2);
}

TEST_CASE("quadtree leaves partition the region") {
  std::mt19937 rng(11);
  for (int iter = 0; iter < 10; ++iter) {
    const auto region = testsupport::random_blob(rng, 24);
    for (const std::int64_t delta : {4, 16, 64}) {
      const auto tree = build_quadtree(region, delta);
      std::int64_t total = 0;
      for (const auto& leaf : tree.leaves) {
        CHECK(leaf.area() <= delta);
        total += leaf.area();
        for (std::int32_t y = 0; y < leaf.size; ++y) {
          for (std::int32_t x = 0; x < leaf.size; ++x) {
            CHECK(region.at(leaf.origin.x + x, leaf.origin.y + y));
          }
        }
      }
      CHECK(total == region.pixel_count());
    }
  }
}

TEST_CASE("hilbert order of the full 8x8, entry SW, exit SE") {
  const auto tree = build_quadtree(full_rect(8, 8), 4);
  const auto seq = hilbert_order(tree, {0, 0}, {8, 0});
  const std::vector<GridPoint> expected = {
      {0, 0}, {2, 0}, {2, 2}, {0, 2}, {0, 4}, {0, 6}, {2, 6}, {2, 4},
      {4, 4}, {4, 6}, {6, 6}, {6, 4}, {6, 2}, {4, 2}, {4, 0}, {6, 0},
  };
  CHECK(cell_origins(seq) == expected);
  // Curve endpoints: first cell entered at the global entry corner, last cell
  // exits at the global exit corner.
  CHECK(seq.entry_corner.front() == GridPoint{0, 0});
  CHECK(seq.exit_corner.back() == GridPoint{8, 0});
}

TEST_CASE("hilbert order of a single-leaf tree") {
  const auto tree = build_quadtree(full_rect(4, 4), 16);
  const auto seq = hilbert_order(tree, {0, 0}, {0, 4});
  CHECK(seq.size() == 1);
  CHECK(seq.entry_corner[0] == GridPoint{0, 0});
  CHECK(seq.exit_corner[0] == GridPoint{0, 4});
}

TEST_CASE("pruned L-shape orders as the full-grid subsequence") {
  const auto tree = build_quadtree(l_shape_8x8(), 4);
  REQUIRE(tree.leaves.size() == 12);
  const auto seq = hilbert_order(tree, {0, 0}, {8, 0});
  // Full-grid positions 8..11 (the NE quadrant) are missing.
  const std::vector<GridPoint> expected = {
      {0, 0}, {2, 0}, {2, 2}, {0, 2}, {0, 4}, {0, 6},
      {2, 6}, {2, 4}, {6, 2}, {4, 2}, {4, 0}, {6, 0},
  };
  CHECK(cell_origins(seq) == expected);
}

TEST_CASE("diagonal corner pair is rejected") {
  const auto tree = build_quadtree(full_rect(4, 4), 4);
  CHECK_THROWS_AS(hilbert_order(tree, {0, 0}, {4, 4}), DecompositionError);
  CHECK_THROWS_AS(hilbert_order(tree, {1, 0}, {4, 0}), DecompositionError);
}

TEST_CASE("entry and exit corners always share a cell edge") {
  std::mt19937 rng(5);
  for (int iter = 0; iter < 8; ++iter) {
    const auto region = testsupport::random_blob(rng, 20);
    const auto tree = build_quadtree(region, 16);
    const auto corners = root_corners(tree.root_origin, tree.root_exponent);
    const auto seq = hilbert_order(tree, corners[0], corners[1]);
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const GridPoint e = seq.entry_corner[i];
      const GridPoint x = seq.exit_corner[i];
      const bool same_x = e.x == x.x;
      const bool same_y = e.y == x.y;
      CHECK(same_x != same_y);  // shares an edge, never diagonal
      CHECK(std::abs(e.x - x.x) + std::abs(e.y - x.y) == seq.cells[i].size);
    }
  }
}

TEST_CASE("uniform quadtrees keep consecutive cells edge-adjacent") {
  for (int depth = 1; depth <= 4; ++depth) {
    const std::int32_t side = 1 << depth;
    const auto tree = build_quadtree(full_rect(side, side), 1);
    const auto seq = hilbert_order(tree, {0, 0}, {side, 0});
    REQUIRE(static_cast<int>(seq.size()) == side * side);
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
      const auto& a = seq.cells[i];
      const auto& b = seq.cells[i + 1];
      const std::int64_t dist = std::abs(a.origin.x - b.origin.x) +
                                std::abs(a.origin.y - b.origin.y);
      CHECK(dist == 1);  // unit cells sharing an edge
    }
  }
}

TEST_CASE("pruning preserves the order as a subsequence") {
  const auto full_tree = build_quadtree(full_rect(8, 8), 1);
  const auto full_seq = hilbert_order(full_tree, {0, 0}, {8, 0});
  std::mt19937 rng(23);
  for (int iter = 0; iter < 10; ++iter) {
    // Knock out random pixels and re-order whatever remains.
    IopRegion region = full_rect(8, 8);
    std::uniform_int_distribution<int> coin(0, 3);
    for (auto& m : region.mask) {
      if (coin(rng) == 0) m = 0;
    }
    if (region.pixel_count() == 0) continue;
    const auto tree = build_quadtree(region, 1, {0, 0}, 3);
    const auto seq = hilbert_order(tree, {0, 0}, {8, 0});
    // Subsequence check against the full ordering.
    std::size_t j = 0;
    for (const auto& cell : seq.cells) {
      while (j < full_seq.cells.size() && !(full_seq.cells[j].origin == cell.origin)) {
        ++j;
      }
      CHECK(j < full_seq.cells.size());
      ++j;
    }
  }
}

TEST_CASE("changing the corner pair permutes the same leaf set") {
  const auto tree = build_quadtree(l_shape_8x8(), 4);
  const auto corners = root_corners(tree.root_origin, tree.root_exponent);
  const std::vector<std::pair<GridPoint, GridPoint>> pairs = {
      {corners[0], corners[1]}, {corners[0], corners[2]}, {corners[3], corners[1]},
      {corners[2], corners[3]}, {corners[1], corners[0]},
  };
  std::set<std::pair<std::int32_t, std::int32_t>> reference;
  for (const auto& c : tree.leaves) reference.insert({c.origin.x, c.origin.y});
  for (const auto& [e, x] : pairs) {
    const auto seq = hilbert_order(tree, e, x);
    std::set<std::pair<std::int32_t, std::int32_t>> got;
    for (const auto& c : seq.cells) got.insert({c.origin.x, c.origin.y});
    CHECK(got == reference);
  }
}

TEST_CASE("entry and exit vertices are the corner pixels nearest the curve") {
  const auto tree = build_quadtree(full_rect(8, 8), 4);
  auto seq = hilbert_order(tree, {0, 0}, {8, 0});
  std::vector<DualGraph> graphs;
  for (const auto& cell : seq.cells) graphs.push_back(build_cell_graph(cell));
  assign_entry_exit(seq, graphs);
  SUBCASE("first cell enters at the SW pixel") {
    CHECK(seq.s_vertex[0] == GridPoint{0, 0});
  }
  SUBCASE("ids match coordinates") {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      CHECK(graphs[i].vertices[static_cast<std::size_t>(seq.s_id[i])] == seq.s_vertex[i]);
      CHECK(graphs[i].vertices[static_cast<std::size_t>(seq.t_id[i])] == seq.t_vertex[i]);
    }
  }
  SUBCASE("s and t are corner pixels on one cell side with opposite colors") {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const auto& c = seq.cells[i];
      const GridPoint s = seq.s_vertex[i];
      const GridPoint t = seq.t_vertex[i];
      const bool corner_x = s.x == c.origin.x || s.x == c.origin.x + c.size - 1;
      const bool corner_y = s.y == c.origin.y || s.y == c.origin.y + c.size - 1;
      CHECK(corner_x);
      CHECK(corner_y);
      CHECK((s.x == t.x || s.y == t.y));  // straight boundary path
      if (c.size >= 2) CHECK(vertex_parity(s) != vertex_parity(t));
    }
  }
}

TEST_CASE("1x1 cell has coincident entry and exit vertices") {
  const auto tree = build_quadtree(full_rect(1, 1), 4);
  auto seq = hilbert_order(tree, {0, 0}, {1, 0});
  assign_entry_exit(seq);
  CHECK(seq.s_vertex[0] == seq.t_vertex[0]);
}

TEST_CASE("4x4 cell entry SW exit SE picks the two southern corners") {
  const auto tree = build_quadtree(full_rect(4, 4), 16);
  auto seq = hilbert_order(tree, {0, 0}, {4, 0});
  assign_entry_exit(seq);
  CHECK(seq.s_vertex[0] == GridPoint{0, 0});
  CHECK(seq.t_vertex[0] == GridPoint{3, 0});
}

TEST_CASE("parity of s and t differs in every multi-pixel cell of a random corpus") {
  std::mt19937 rng(42);
  for (int iter = 0; iter < 10; ++iter) {
    const auto region = testsupport::random_blob(rng, 28);
    const auto tree = build_quadtree(region, 16);
    const auto corners = root_corners(tree.root_origin, tree.root_exponent);
    auto seq = hilbert_order(tree, corners[0], corners[1]);
    assign_entry_exit(seq);
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (seq.cells[i].size >= 2) {
        CHECK(vertex_parity(seq.s_vertex[i]) != vertex_parity(seq.t_vertex[i]));
      }
    }
  }
}

TEST_CASE("decomposition svg renders") {
  const auto region = full_rect(8, 8);
  const auto tree = build_quadtree(region, 4);
  auto seq = hilbert_order(tree, {0, 0}, {8, 0});
  const std::string svg = decomposition_svg(region, seq);
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("polyline") != std::string::npos);
}
