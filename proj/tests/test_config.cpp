#include <gtest/gtest.h>

#include "sagseg/sagseg.hpp"

using namespace sagseg;

TEST(Config, Overrides) {
  PipelineConfig c;
  apply_override(c, "raster.tile_size=8");
  apply_override(c, "aggregation.mode", "centroid");
  apply_override(c, "aggregation.min_votes=3");
  apply_override(c, "refine.closing_radius=1");
  apply_override(c, "raster.index_mode=first_hit");
  EXPECT_EQ(c.raster.tile_size, 8);
  EXPECT_EQ(c.aggregation.mode, AggregationMode::kCentroid);
  EXPECT_EQ(c.aggregation.min_votes, 3u);
  EXPECT_EQ(c.refine.closing_radius, 1);
  EXPECT_EQ(c.raster.index_mode, IndexMode::kFirstHit);
}

TEST(Config, Rejections) {
  PipelineConfig c;
  EXPECT_THROW(apply_override(c, "raster.tile=8"), ConfigError);
  EXPECT_THROW(apply_override(c, "raster.tile_size"), ConfigError);
  EXPECT_THROW(apply_override(c, "raster.tile_size=eight"), ConfigError);
  EXPECT_THROW(apply_override(c, "raster.alpha_cutoff=0.1x"), ConfigError);
  EXPECT_THROW(apply_override(c, "aggregation.mode=vote"), ConfigError);
  apply_override(c, "raster.tile_size=2");
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(Config, JsonFlatAndNested) {
  PipelineConfig c;
  apply_config_json(c, nlohmann::json::parse(R"({"raster": {"contribution_floor": 0.4},
                                               "refine.passes": 3,
                                               "aggregation": {"mode": "centroid"}})"));
  EXPECT_DOUBLE_EQ(c.raster.contribution_floor, 0.4);
  EXPECT_EQ(c.refine.passes, 3);
  EXPECT_EQ(c.aggregation.mode, AggregationMode::kCentroid);
  EXPECT_THROW(apply_config_json(c, nlohmann::json::parse(R"({"refine": {"nope": 1}})")),
               ConfigError);
  EXPECT_THROW(apply_config_json(c, nlohmann::json::parse("[1]")), ConfigError);
  EXPECT_THROW(apply_config_file(c, "/nonexistent/cfg.json"), IoError);
}

TEST(Parallel, RunsEveryIndexAndRethrows) {
  std::vector<int> hit(1000, 0);
  parallel_for(hit.size(), [&](std::size_t i) { hit[i] += 1; }, 7);
  for (int h : hit) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(
                   100, [](std::size_t i) { if (i == 57) throw DataError("x"); }, 4),
               DataError);
}
