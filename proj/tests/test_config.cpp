// Copyright 2026 The ddpmlab Authors.
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <stdexcept>

#include "ddpm/config.hpp"

using namespace ddpm;

TEST_CASE("defaults resolve to the desk configuration") {
  const RunConfig cfg;
  const auto s = cfg.schedule();
  CHECK(s.kind == ScheduleKind::kLinear);
  CHECK(s.T == 50);
  CHECK(s.beta_start == 0.002);
  CHECK(s.beta_end == 0.4);
  const auto tc = cfg.train(2);
  CHECK(tc.model.hidden == std::vector<int>{128, 128, 128});
  CHECK(tc.model.time.dim == 32);
  CHECK(tc.learning_rate == 1e-3);
  CHECK(tc.ema_decay == 0.999);
  CHECK(tc.batch_size == 128);
  CHECK(tc.loss_mode == LossMode::kSimple);
  CHECK(cfg.dataset().kind == DatasetKind::kSwissRoll);
  CHECK(cfg.eval_dataset().seed == cfg.dataset().seed + 1);
  CHECK(cfg.eval_dataset().n == 256);
}

TEST_CASE("parsing") {
  RunConfig cfg;
  cfg.parse("# comment\n\nseed = 9\nschedule.kind=quadratic\n  model.hidden = 4, 5\n");
  CHECK(cfg.seed() == 9);
  CHECK(cfg.schedule().kind == ScheduleKind::kQuadratic);
  CHECK(cfg.get_ints("model.hidden") == std::vector<int>{4, 5});
  cfg.set_assignment("train.ema_decay=0");
  CHECK(cfg.train(2).ema_decay == 0.0);

  CHECK_THROWS_AS(cfg.parse("nonsense.key=1"), std::invalid_argument);
  CHECK_THROWS_AS(cfg.parse("seed"), std::invalid_argument);
  try {
    cfg.parse("seed=1\nbogus=2\n", "run.cfg");
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("run.cfg:2") != std::string::npos);
  }
  cfg.set("model.hidden", "4,x");
  CHECK_THROWS_AS(cfg.get_ints("model.hidden"), std::invalid_argument);
  cfg.set("schedule.kind", "cosine");
  CHECK_THROWS_AS(cfg.schedule(), std::invalid_argument);
}

TEST_CASE("resolved text round trips") {
  RunConfig a;
  a.set("seed", "17");
  a.set("data.kind", "sprites");
  RunConfig b;
  b.parse(a.resolved_text());
  CHECK(b.resolved_text() == a.resolved_text());
  CHECK(b.image_like());
  CHECK(b.dataset().sprite_shape == ImageShape{8, 8, 3});
}

TEST_CASE("clamping follows the data kind unless set") {
  RunConfig cfg;
  CHECK_FALSE(cfg.reverse_modes().clamp_x0);
  cfg.set("data.kind", "sprites");
  CHECK(cfg.reverse_modes().clamp_x0);
  cfg.set("analysis.clamp_x0", "false");
  CHECK_FALSE(cfg.reverse_modes().clamp_x0);
}
