// Copyright 2026 The mvedit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "mvedit/config.hpp"
#include "mvedit/errors.hpp"

namespace mvedit {
namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "test.cfg");
}

TEST(RunConfig, DefaultsAreValid) {
  const RunConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.schedule().steps(), 50);
  EXPECT_LT(cfg.schedule().alpha_bar(50), 1e-3);
  EXPECT_EQ(cfg.t_end, 10);
  EXPECT_EQ(cfg.latent_factor, 4);
  EXPECT_EQ(cfg.n_su, 200);
  EXPECT_EQ(cfg.n_iu, 10);
  EXPECT_DOUBLE_EQ(cfg.lambda, 0.1);
  EXPECT_EQ(cfg.patch_size, 32);
  EXPECT_EQ(cfg.patches, 8);
  EXPECT_EQ(cfg.field_resolution, 64);
  EXPECT_EQ(cfg.samples_per_ray, 64);
  EXPECT_EQ(cfg.field_steps, 3000);
  EXPECT_EQ(cfg.rounds, 10);
  EXPECT_DOUBLE_EQ(cfg.depth_tol, 1e-3);
  EXPECT_EQ(cfg.stride, 2);
  EXPECT_FALSE(cfg.shared_init_noise);
  EXPECT_EQ(cfg.loss_mode, LossMode::kCombined);
}

TEST(RunConfig, SerializeThenParseRoundTrips) {
  RunConfig cfg;
  cfg.seed = 123456789012345ull;
  cfg.fov = 37.123456789;
  cfg.lambda = 1.0 / 3.0;
  cfg.transforms = {"warm", "swap_rb"};
  cfg.weights = {0.25, 0.75};
  cfg.edit_t_ends = {0, 5, 50};
  cfg.strategy = Strategy::kHybrid;
  cfg.loss_mode = LossMode::kRandomSwitch;
  cfg.shared_init_noise = true;
  std::ostringstream out;
  write_config(out, cfg);
  EXPECT_EQ(parse(out.str()), cfg);
  std::ostringstream again;
  write_config(again, parse(out.str()));
  EXPECT_EQ(again.str(), out.str());
}

TEST(RunConfig, EveryKeyReadsBackWhatWasSet) {
  const RunConfig cfg;
  for (const auto& key : config_keys()) {
    RunConfig copy = cfg;
    const std::string value = get_config_value(cfg, key);
    set_config_value(copy, key, value);
    EXPECT_EQ(copy, cfg) << key;
  }
}

TEST(RunConfig, CommentsAndBlankLines) {
  const RunConfig cfg = parse("# comment\n\n  seed = 42   # trailing\nviews=6\n");
  EXPECT_EQ(cfg.seed, 42u);
  EXPECT_EQ(cfg.views, 6);
}

TEST(RunConfig, UnknownKeyRejectedWithLocation) {
  try {
    parse("seed = 1\nnot_a_key = 3\n");
    FAIL() << "expected UsageError";
  } catch (const UsageError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("test.cfg:2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("not_a_key"), std::string::npos) << msg;
  }
}

TEST(RunConfig, MalformedValuesRejected) {
  EXPECT_THROW(parse("views = eight\n"), UsageError);
  EXPECT_THROW(parse("views = 8x\n"), UsageError);
  EXPECT_THROW(parse("shared_init_noise = maybe\n"), UsageError);
  EXPECT_THROW(parse("strategy = greedy\n"), UsageError);
  EXPECT_THROW(parse("loss_mode = lpips\n"), UsageError);
  EXPECT_THROW(parse("just words\n"), UsageError);
}

TEST(RunConfig, InvariantsEnforcedAtParseTime) {
  EXPECT_THROW(parse("t_end = 51\n"), UsageError);
  EXPECT_THROW(parse("edit_t_ends = 0,60\n"), UsageError);
  EXPECT_THROW(parse("latent_factor = 3\n"), UsageError);
  EXPECT_THROW(parse("views = 3\nbatch_views = 4\n"), UsageError);
  EXPECT_THROW(parse("beta_end = 0.03\n"), UsageError);  // too little terminal noise
  EXPECT_THROW(parse("samples_per_ray = 1\n"), UsageError);
  EXPECT_THROW(parse("near = 5\nfar = 4\n"), UsageError);
  EXPECT_THROW(parse("transforms = warm,nope\n"), UsageError);
  EXPECT_THROW(parse("transforms = warm,cool\nweights = 1\n"), UsageError);
  EXPECT_THROW(parse("n_iu = 0\n"), UsageError);
  EXPECT_THROW(parse("strategy = hybrid\nswitch_step = 2000\nhybrid_steps = 1000\n"), UsageError);
  EXPECT_NO_THROW(parse("strategy = iterative\nswitch_step = 2000\nhybrid_steps = 1000\n"));
}

TEST(RunConfig, StrategyNames) {
  for (auto s : {Strategy::kSinglePass, Strategy::kIterative, Strategy::kHybrid}) {
    EXPECT_EQ(parse_strategy(to_string(s)), s);
  }
  EXPECT_EQ(to_string(Strategy::kSinglePass), "single-pass");
}

TEST(RunConfig, BuildersReflectKeys) {
  const RunConfig cfg = parse("views = 5\nimage_size = 32\ndiffusion_steps = 40\n"
                              "transforms = warm,cool\nlr_color = 0.05\npatches = 3\n");
  EXPECT_EQ(cfg.cameras().size(), 5u);
  EXPECT_EQ(cfg.cameras()[0].height, 32);
  EXPECT_EQ(cfg.schedule().steps(), 40);
  EXPECT_DOUBLE_EQ(cfg.fit().color_adam.lr, 0.05);
  EXPECT_EQ(cfg.train().patches_per_step, 3);
  EXPECT_TRUE(cfg.recipe().spec_for(Raster(3, 4, 4, 0.5)).is_mixture());
  EXPECT_EQ(cfg.initial_field().resolution, cfg.field_resolution);
}

TEST(RunConfig, BundledToyConfigLoads) {
  const RunConfig cfg = load_config(MVEDIT_SOURCE_DIR "/configs/toy.cfg");
  EXPECT_EQ(cfg.views, 8);
  EXPECT_EQ(cfg.n_su, 200);
  EXPECT_EQ(cfg.n_iu, 10);
}

}  // namespace
}  // namespace mvedit
