#include <doctest.h>

#include <json.hpp>

#include "oracles.hpp"
#include "sanity.hpp"
#include "test_util.hpp"

using namespace outpaint;
using testutil::error_kind;

TEST_CASE("overfit schedule splits iterations between P1 and P3") {
  const PixelImage img = oracle::random_image(16, 16, 2);
  OverfitOptions opt;
  opt.iterations = 20;
  opt.adversarial_fraction = 0.25;
  std::vector<std::int64_t> seen;
  opt.on_mark = [&](std::int64_t it, double) { seen.push_back(it); };
  const OverfitReport r = overfit_sanity(img, opt);
  CHECK(r.schedule.t1 == 15);
  CHECK(r.schedule.t2 == 0);
  CHECK(r.schedule.t3 == 5);
  CHECK(r.schedule.batch_size == 1);
  REQUIRE(r.marks.size() == 10);
  CHECK(seen == std::vector<std::int64_t>{2, 4, 6, 8, 10, 12, 14, 16, 18, 20});
  CHECK(r.final_rmse == r.marks.back().rmse);
  CHECK(r.output.shape() == img.shape());
  // The known center is pasted back, so the report image keeps it exactly.
  for (int y = 0; y < 16; ++y)
    for (int x = 4; x < 12; ++x)
      for (int c = 0; c < 3; ++c) REQUIRE(r.output(y, x, c) == img(y, x, c));

  const auto j = nlohmann::json::parse(r.to_json());
  CHECK(j.at("marks").size() == 10);
  CHECK(j.at("cosine_decay").get<bool>());
}

TEST_CASE("overfit with few iterations still marks each one") {
  OverfitOptions opt;
  opt.iterations = 3;
  const OverfitReport r = overfit_sanity(oracle::random_image(8, 8, 1), opt);
  CHECK(r.marks.size() == 10);
  CHECK(r.marks.back().iteration == 3);
}

TEST_CASE("overfit is deterministic and zero iterations reports the initial error") {
  const PixelImage img = oracle::random_image(16, 16, 3);
  OverfitOptions opt;
  opt.iterations = 6;
  const OverfitReport a = overfit_sanity(img, opt);
  const OverfitReport b = overfit_sanity(img, opt);
  CHECK(a.final_rmse == b.final_rmse);
  CHECK(a.output == b.output);

  opt.iterations = 0;
  const OverfitReport z = overfit_sanity(img, opt);
  CHECK(z.marks.empty());
  CHECK(z.final_rmse == z.initial_rmse);
  CHECK(z.baseline_rmse > 0.0);
  CHECK_FALSE(z.monotone);
}

TEST_CASE("overfit input validation") {
  OverfitOptions opt;
  CHECK(error_kind([&] { overfit_sanity(oracle::random_image(16, 18, 1), opt); }) ==
        ErrorKind::kArgument);
  opt.adversarial_fraction = 1.5;
  CHECK(error_kind([&] { overfit_sanity(oracle::random_image(16, 16, 1), opt); }) ==
        ErrorKind::kArgument);
  opt.adversarial_fraction = 0.1;
  opt.iterations = -1;
  CHECK(error_kind([&] { overfit_sanity(oracle::random_image(16, 16, 1), opt); }) ==
        ErrorKind::kArgument);
}
