#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "saso/error.hpp"
#include "saso/scene.hpp"

namespace saso {
namespace {

using testing::make_point;

Scene parse(const std::string& text, const ValidateOptions& opts = {}) {
  std::istringstream in(text);
  return parse_scene(in, "t", opts);
}

TEST(SceneIo, EmptyScene) {
  auto s = parse("saso-scene v1\n0 3\n");
  EXPECT_TRUE(s.empty());
  EXPECT_EQ(s.num_classes, 3);
}

TEST(SceneIo, SinglePoint) {
  auto s = parse("saso-scene v1\n1 3\n0 0 0 255 0 0 2 7\n");
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.points[0].sem, 2);
  EXPECT_EQ(s.points[0].inst, 7);
  EXPECT_EQ(s.points[0].r, 255);
}

TEST(SceneIo, CommentsAndBlankLines) {
  auto s = parse("# header comment\nsaso-scene v1\n\n2 2 # counts\n0 0 0 1 2 3 0 0\n# mid\n1.5 2 3 4 5 6 1 1\n");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_DOUBLE_EQ(s.points[1].x, 1.5);
}

TEST(SceneIo, ColorOutOfRange) {
  try {
    parse("saso-scene v1\n1 3\n0 0 0 300 0 0 2 7\n");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("color channel out of range"), std::string::npos);
  }
}

TEST(SceneIo, ParseErrorCarriesLine) {
  try {
    parse("saso-scene v1\n2 3\n0 0 0 1 1 1 0 0\n0 0 zz 1 1 1 0 0\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);
  }
}

TEST(SceneIo, RejectsBadHeaderAndCounts) {
  EXPECT_THROW(parse("saso-scene v2\n0 3\n"), ParseError);
  EXPECT_THROW(parse("saso-scene v1\n2 3\n0 0 0 1 1 1 0 0\n"), ParseError);
  EXPECT_THROW(parse("saso-scene v1\n1 3\n0 0 0 1 1 1 0\n"), ParseError);
}

TEST(SceneIo, ValidationMessages) {
  EXPECT_THROW(parse("saso-scene v1\n1 3\n0 0 0 1 1 1 3 0\n"), ValidationError);
  EXPECT_THROW(parse("saso-scene v1\n1 3\n0 0 0 1 1 1 0 -1\n"), ValidationError);
  EXPECT_THROW(parse("saso-scene v1\n1 3\nnan 0 0 1 1 1 0 0\n"), ValidationError);
}

TEST(SceneIo, InstanceClassConsistency) {
  const std::string text = "saso-scene v1\n2 3\n0 0 0 1 1 1 0 5\n1 0 0 1 1 1 1 5\n";
  EXPECT_THROW(parse(text), ValidationError);
  EXPECT_NO_THROW(parse(text, ValidateOptions{.require_single_class_instances = false}));
}

TEST(SceneIo, RoundTrip) {
  auto s = testing::uniform_scene(50, 3, 2, 11, 4);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s.points[i].sem = static_cast<int>(i % 4);
    s.points[i].inst = static_cast<int>(i);
    s.points[i].r = static_cast<int>(i * 5 % 256);
  }
  std::ostringstream a;
  write_scene(a, s);
  auto back = parse(a.str());
  std::ostringstream b;
  write_scene(b, back);
  EXPECT_EQ(a.str(), b.str());
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(back.points[i].x, s.points[i].x);
    EXPECT_EQ(back.points[i].y, s.points[i].y);
    EXPECT_EQ(back.points[i].inst, s.points[i].inst);
  }
}

TEST(BlockGrid, OneMeterSceneHasNineCells) {
  Scene s = testing::uniform_scene(100, 1, 1, 3);
  s.points.push_back(make_point(0, 0, 0));
  s.points.push_back(make_point(1, 1, 0));
  auto g = block_grid(s, 1.0, 0.5);
  EXPECT_EQ(g.nx, 3u);
  EXPECT_EQ(g.ny, 3u);
}

// Brute-force cell populations: cells are half-open [x0, x0 + cell).
std::vector<std::size_t> brute_population(const Scene& s, const BlockGrid& g) {
  std::vector<std::size_t> pop(g.num_cells(), 0);
  for (std::size_t ix = 0; ix < g.nx; ++ix)
    for (std::size_t iy = 0; iy < g.ny; ++iy)
      for (const auto& p : s.points) {
        const double x0 = g.origin_x + static_cast<double>(ix) * g.stride;
        const double y0 = g.origin_y + static_cast<double>(iy) * g.stride;
        if (p.x >= x0 && p.x < x0 + g.cell && p.y >= y0 && p.y < y0 + g.cell) ++pop[ix * g.ny + iy];
      }
  return pop;
}

TEST(CutBlocks, MatchesGridEnumeration) {
  Scene s = testing::uniform_scene(5000, 1, 1, 5);
  s.points.push_back(make_point(0, 0, 0));
  s.points.push_back(make_point(1, 1, 1));
  s.points.push_back(make_point(1, 0, 1));
  s.points.push_back(make_point(0, 1, 1));
  CutOptions opts{.cell = 1, .stride = 0.5, .num_points = 4096, .min_points = 1, .seed = 1};
  auto grid = block_grid(s, 1, 0.5);
  ASSERT_EQ(grid.num_cells(), 9u);
  auto pop = brute_population(s, grid);
  auto blocks = cut_blocks(s, opts);
  std::size_t nonempty = 0;
  for (auto p : pop) nonempty += p > 0;
  ASSERT_EQ(blocks.size(), nonempty);
  for (const auto& b : blocks) {
    EXPECT_EQ(b->size(), 4096u);
    EXPECT_EQ(b->features.rows(), 4096);
    std::set<std::size_t> distinct(b->point_indices.begin(), b->point_indices.end());
    EXPECT_EQ(distinct.size(), std::min<std::size_t>(pop[b->cell_index], 4096));
    for (auto i : b->point_indices) {
      ASSERT_LT(i, s.size());
      const auto& p = s.points[i];
      EXPECT_GE(p.x, b->x0);
      EXPECT_LT(p.x, b->x0 + 1.0);
      EXPECT_GE(p.y, b->y0);
      EXPECT_LT(p.y, b->y0 + 1.0);
    }
    for (Eigen::Index r = 0; r < b->features.rows(); ++r)
      for (int c = 6; c < 9; ++c) {
        EXPECT_GE(b->features(r, c), 0.0);
        EXPECT_LE(b->features(r, c), 1.0);
      }
  }
}

TEST(CutBlocks, MinPointsFilter) {
  auto s = testing::uniform_scene(10, 1, 1, 2);
  EXPECT_TRUE(cut_blocks(s, CutOptions{.min_points = 100}).empty());
  EXPECT_TRUE(cut_blocks(Scene{}, CutOptions{}).empty());
}

TEST(CutBlocks, ReplacementPadding) {
  auto s = testing::uniform_scene(50, 0.9, 0.9, 4);
  auto blocks = cut_blocks(s, CutOptions{.cell = 1, .stride = 1, .num_points = 4096, .min_points = 10});
  ASSERT_EQ(blocks.size(), 1u);
  EXPECT_EQ(blocks[0]->size(), 4096u);
  std::set<std::size_t> distinct(blocks[0]->point_indices.begin(), blocks[0]->point_indices.end());
  EXPECT_EQ(distinct.size(), 50u);
}

TEST(CutBlocks, SeedChangesSamplesNotGrid) {
  auto s = testing::uniform_scene(6000, 2, 2, 9);
  CutOptions a{.num_points = 256, .min_points = 10, .seed = 1};
  CutOptions b = a;
  b.seed = 2;
  auto ba = cut_blocks(s, a), ba2 = cut_blocks(s, a), bb = cut_blocks(s, b);
  ASSERT_EQ(ba.size(), bb.size());
  bool any_diff = false;
  for (std::size_t k = 0; k < ba.size(); ++k) {
    EXPECT_EQ(ba[k]->point_indices, ba2[k]->point_indices);
    EXPECT_EQ(ba[k]->cell_index, bb[k]->cell_index);
    EXPECT_EQ(ba[k]->x0, bb[k]->x0);
    any_diff |= ba[k]->point_indices != bb[k]->point_indices;
  }
  EXPECT_TRUE(any_diff);
}

TEST(CutBlocks, CoverAllVisitsEveryPoint) {
  auto s = testing::uniform_scene(3000, 2, 2, 10);
  auto blocks = cut_blocks(s, CutOptions{.num_points = 128, .min_points = 1, .cover_all = true});
  std::vector<int> seen(s.size(), 0);
  for (const auto& b : blocks) {
    EXPECT_EQ(b->size(), 128u);
    for (auto i : b->point_indices) seen[i] = 1;
  }
  for (auto v : seen) EXPECT_EQ(v, 1);
}

TEST(BlockFeatures, CornersAndColors) {
  Scene s;
  s.num_classes = 1;
  s.points = {make_point(1, 2, 3, 0, 0, 0, 0, 0), make_point(5, 4, 3, 0, 0, 255, 255, 255),
              make_point(3, 3, 3)};
  const std::vector<std::size_t> idx = {0, 1, 2};
  auto f = block_features(s, idx, s.bounds());
  EXPECT_DOUBLE_EQ(f(0, 6), 0.0);
  EXPECT_DOUBLE_EQ(f(0, 7), 0.0);
  EXPECT_DOUBLE_EQ(f(1, 6), 1.0);
  EXPECT_DOUBLE_EQ(f(1, 7), 1.0);
  EXPECT_DOUBLE_EQ(f(1, 3), 1.0);
  EXPECT_DOUBLE_EQ(f(1, 5), 1.0);
  EXPECT_DOUBLE_EQ(f(0, 3), 0.0);
  // z has zero extent
  EXPECT_DOUBLE_EQ(f(0, 8), 0.5);
  EXPECT_DOUBLE_EQ(f(2, 6), 0.5);
  EXPECT_DOUBLE_EQ(f(2, 0), 3.0);
}

}  // namespace
}  // namespace saso
