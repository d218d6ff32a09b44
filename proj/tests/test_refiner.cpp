#include <gtest/gtest.h>

#include <set>

#include "sagseg/sagseg.hpp"

using namespace sagseg;

namespace {

InstanceMask2D disk(int w, int h, double cx, double cy, double r, InstanceId id) {
  InstanceMask2D m(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) m.at(x, y) = id;
    }
  }
  return m;
}

std::size_t differing(const InstanceMask2D& a, const InstanceMask2D& b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.pixel_count(); ++i) n += a.ids[i] != b.ids[i];
  return n;
}

}  // namespace

TEST(Refiner, ZeroStaysZero) {
  const InstanceMask2D z(40, 30);
  EXPECT_EQ(refine_mask(z), z);
}

TEST(Refiner, DenseDiskNearlyUnchanged) {
  for (double r : {5.0, 8.0, 12.0, 20.0}) {
    const InstanceMask2D m = disk(64, 64, 31.5, 31.5, r, 3);
    std::size_t area = 0;
    for (auto v : m.ids) area += v != 0;
    EXPECT_LT(double(differing(m, refine_mask(m))), 0.01 * double(area)) << r;
  }
}

TEST(Refiner, DropoutSquareRecovered) {
  double sum = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    InstanceMask2D m(80, 80);
    SplitMix64 rng(seed);
    for (int y = 20; y < 60; ++y) {
      for (int x = 20; x < 60; ++x) m.at(x, y) = rng.bernoulli(0.5) ? 0 : 1;
    }
    const InstanceMask2D r = refine_mask(m);
    int hit = 0;
    for (int y = 20; y < 60; ++y) {
      for (int x = 20; x < 60; ++x) hit += r.at(x, y) == 1;
    }
    sum += hit / 1600.0;
    EXPECT_GT(hit / 1600.0, 0.97) << seed;
  }
  EXPECT_GE(sum / 20, 0.99);
}

TEST(Refiner, SpeckleRemoved) {
  InstanceMask2D m(40, 40);
  m.at(5, 5) = 9;
  m.at(30, 12) = 4;
  EXPECT_EQ(refine_mask(m), InstanceMask2D(40, 40));
}

TEST(Refiner, TwoObjectsStaySeparate) {
  InstanceMask2D m = disk(80, 40, 20, 20, 10, 1);
  const InstanceMask2D b = disk(80, 40, 60, 20, 10, 2);
  for (std::size_t i = 0; i < m.pixel_count(); ++i) m.ids[i] = std::max(m.ids[i], b.ids[i]);
  const InstanceMask2D r = refine_mask(m);
  EXPECT_EQ(r.at(20, 20), 1);
  EXPECT_EQ(r.at(60, 20), 2);
  EXPECT_EQ(r.at(40, 20), 0);
}

TEST(Refiner, IdSetNeverGrowsAndDeterministic) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    SplitMix64 rng(seed);
    InstanceMask2D m(int(rng.uniform_int(1, 50)), int(rng.uniform_int(1, 50)));
    for (auto& v : m.ids) {
      if (rng.bernoulli(0.4)) v = InstanceId(rng.uniform_int(1, 6));
    }
    const InstanceMask2D r = refine_mask(m);
    const auto in = m.instance_ids();
    for (InstanceId id : r.instance_ids()) {
      EXPECT_TRUE(std::find(in.begin(), in.end(), id) != in.end());
    }
    EXPECT_EQ(refine_mask(m), r);
  }
}

TEST(Refiner, AlphaSizeChecked) {
  const InstanceMask2D m(4, 4);
  std::vector<float> alpha(15, 1.0f);
  EXPECT_THROW(refine_mask(m, std::span<const float>(alpha)), ContractError);
  alpha.push_back(1.0f);
  EXPECT_NO_THROW(refine_mask(m, std::span<const float>(alpha)));
}

TEST(Refiner, ConfigValidation) {
  RefineConfig c;
  c.passes = 0;
  EXPECT_THROW(refine_mask(InstanceMask2D(4, 4), std::nullopt, c), ConfigError);
  c = {};
  c.closing_radius = -1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Refiner, OverlapGoesToLargerArea) {
  // Interleaved stripes: closing either ID alone fills the whole block, so
  // every interior pixel is claimed twice. Extra rows make one ID larger.
  for (InstanceId big : {InstanceId(1), InstanceId(2)}) {
    InstanceMask2D m(40, 40);
    for (int y = 5; y < 26; ++y) {
      for (int x = 10; x < 30; ++x) m.at(x, y) = x % 2 ? 1 : 2;
    }
    for (int y = 26; y < 31; ++y) {
      for (int x = 10; x < 30; ++x) m.at(x, y) = big;
    }
    RefineConfig c;
    c.majority_radius = 0;
    c.min_component_area = 0;
    const auto r = refine_mask(m, std::nullopt, c);
    EXPECT_EQ(r.at(15, 15), big);
    EXPECT_EQ(r.at(16, 15), big);
  }
}

TEST(Refiner, AssignmentOutputs) {
  GaussianScene s;
  s.add({0, 0, 2}, Eigen::Vector3d::Constant(0.3), Eigen::Quaterniond::Identity(), 0.99,
        {1, 1, 1});
  Camera c;
  c.width = c.height = 32;
  c.fx = c.fy = 40;
  c.cx = c.cy = 16;
  LabelAssignment zero;
  zero.labels = {0};
  auto out = refine_assignment_outputs(s, zero, c);
  EXPECT_TRUE(out.coarse.instance_ids().empty());
  EXPECT_TRUE(out.refined.instance_ids().empty());
  LabelAssignment one;
  one.labels = {1};
  out = refine_assignment_outputs(s, one, c);
  std::size_t area = 0;
  for (auto v : out.coarse.ids) area += v != 0;
  ASSERT_GT(area, 20u);
  EXPECT_LT(double(differing(out.coarse, out.refined)), 0.01 * double(area));
}

TEST(Refiner, SparseScenesImproveAgainstGroundTruth) {
  // Half the primitives dropped and the rest shrunk: coarse renders are
  // speckled. Ground truth is the dense scene rendered with its own labels.
  const int seeds = 20;
  int wins = 0;
  double coarse_sum = 0.0, refined_sum = 0.0;
  for (int seed = 1; seed <= seeds; ++seed) {
    SynthSpec s;
    s.seed = std::uint64_t(seed);
    s.camera_count = 6;
    s.width = s.height = 96;
    const Fixture f = make_fixture(s);
    const SynthScene sparse = sparsify(f.synth, 0.5, 0.5, std::uint64_t(seed));
    double coarse = 0.0, refined = 0.0;
    for (std::size_t t = 0; t < f.views.size(); ++t) {
      const auto out = refine_assignment_outputs(sparse.scene, sparse.ground_truth,
                                                 f.views.cameras[t]);
      coarse += compute_metrics(out.coarse, f.masks[t]).miou;
      refined += compute_metrics(out.refined, f.masks[t]).miou;
    }
    coarse_sum += coarse;
    refined_sum += refined;
    wins += refined >= coarse;
  }
  EXPECT_GT(refined_sum, coarse_sum);
  // One-sided sign test: 15 of 20 has p ~ 0.02 under no effect.
  EXPECT_GE(wins, 15) << "refined beat coarse on " << wins << "/" << seeds << " seeds";
}
