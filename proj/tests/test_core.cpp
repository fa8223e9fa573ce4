#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include "ladder/core.hpp"
#include "ladder/rng.hpp"

using namespace ladder;

TEST_CASE("paper recipe validates") {
  EncodingRecipe recipe = default_recipe();
  CHECK(validate_recipe(recipe).empty());
  CHECK(recipe.resolution_count() == 7);
  CHECK(recipe.bitrate_count() == 10);
  CHECK(recipe.resolutions.front() == Resolution{1920, 1080});
  CHECK(recipe.resolutions.back() == Resolution{384, 216});
}

TEST_CASE("recipe violations are reported") {
  EncodingRecipe recipe = default_recipe();

  SUBCASE("duplicate bitrate") {
    recipe.target_bitrates_kbps = {240, 240};
    auto v = validate_recipe(recipe);
    REQUIRE(!v.empty());
    CHECK(v[0].find("duplicate bitrate") != std::string::npos);
  }
  SUBCASE("single resolution") {
    recipe.resolutions = {{1920, 1080}};
    auto v = validate_recipe(recipe);
    REQUIRE(!v.empty());
    CHECK(v[0].find("R >= 2") != std::string::npos);
  }
  SUBCASE("duplicate resolution") {
    recipe.resolutions.push_back({384, 216});
    auto v = validate_recipe(recipe);
    REQUIRE(!v.empty());
  }
  SUBCASE("tiny resolution rejected") {
    recipe.resolutions.push_back({8, 8});
    CHECK(!validate_recipe(recipe).empty());
  }
}

namespace {

RDSurface make_surface(const EncodingRecipe& recipe, uint64_t seed,
                       double drop_probability = 0.3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RDSurface surface;
  surface.sequence_id = "seq-" + std::to_string(seed);
  for (const auto& r : recipe.resolutions) {
    RDCurve curve;
    curve.resolution = r;
    for (int b : recipe.target_bitrates_kbps) {
      if (unit(rng) < drop_probability) continue;
      curve.points.push_back({r, b, b * (0.95 + 0.1 * unit(rng)),
                              100.0 * unit(rng)});
    }
    if (!curve.points.empty()) surface.curves[r] = curve;
  }
  return surface;
}

}  // namespace

TEST_CASE("surface lookup against exhaustive scan oracle") {
  EncodingRecipe recipe = default_recipe();
  for (uint64_t seed = 0; seed < 20; ++seed) {
    RDSurface surface = make_surface(recipe, seed);
    for (const auto& r : recipe.resolutions) {
      for (int b : recipe.target_bitrates_kbps) {
        // Oracle: linear scan over everything stored.
        const RDPoint* expected = nullptr;
        for (const auto& [res, curve] : surface.curves) {
          (void)res;
          for (const auto& p : curve.points) {
            if (p.resolution == r && p.target_bitrate_kbps == b) expected = &p;
          }
        }
        auto got = surface_lookup(surface, r, b);
        CHECK(got.has_value() == (expected != nullptr));
        if (got && expected) {
          CHECK(got->quality == expected->quality);
          CHECK(got->actual_bitrate_kbps == expected->actual_bitrate_kbps);
        }
      }
    }
  }
}

TEST_CASE("surface lookup absent outside CQP bounds") {
  EncodingRecipe recipe = default_recipe();
  RDSurface surface;
  surface.sequence_id = "capped";
  Resolution low{384, 216};
  RDCurve curve;
  curve.resolution = low;
  for (int b : {240, 375, 550, 750, 1000})
    curve.points.push_back({low, b, double(b), 50.0});
  surface.curves[low] = curve;
  CHECK(!surface_lookup(surface, low, 2300).has_value());
  CHECK(surface_lookup(surface, low, 1000).has_value());
  CHECK(!surface.covers_all_bitrates(recipe));
}

TEST_CASE("serialization round trip is identity") {
  EncodingRecipe recipe = default_recipe();
  for (uint64_t seed = 0; seed < 10; ++seed) {
    RDSurface surface = make_surface(recipe, 100 + seed);
    RDSurface back = surface_from_json(surface_to_json(surface, recipe));
    CHECK(back.sequence_id == surface.sequence_id);
    REQUIRE(back.curves.size() == surface.curves.size());
    for (const auto& [res, curve] : surface.curves) {
      for (const auto& p : curve.points) {
        auto q = back.lookup(res, p.target_bitrate_kbps);
        REQUIRE(q.has_value());
        CHECK(q->actual_bitrate_kbps == p.actual_bitrate_kbps);
        CHECK(q->quality == p.quality);
      }
    }
  }
  EncodingRecipe recipe_back = recipe_from_json(recipe_to_json(recipe));
  CHECK(recipe_back.resolutions == recipe.resolutions);
  CHECK(recipe_back.target_bitrates_kbps == recipe.target_bitrates_kbps);
}

TEST_CASE("one-hot / entries duality") {
  EncodingRecipe recipe = default_recipe();
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    BitrateLadder ladder;
    ladder.sequence_id = "dual";
    for (int b : recipe.target_bitrates_kbps) {
      std::uniform_int_distribution<int> pick(0, recipe.resolution_count() - 1);
      ladder.entries.emplace_back(b, recipe.resolutions[pick(rng)]);
    }
    auto matrix = ladder.one_hot(recipe);
    for (const auto& row : matrix) {
      int sum = 0;
      for (int v : row) sum += v;
      CHECK(sum == 1);
    }
    BitrateLadder back = ladder_from_one_hot("dual", matrix, recipe);
    CHECK(back.entries == ladder.entries);

    BitrateLadder json_back = ladder_from_json(ladder_to_json(ladder));
    CHECK(json_back.entries == ladder.entries);
    CHECK(validate_ladder(ladder, recipe).empty());
  }
}

TEST_CASE("one-hot column index follows recipe ordering") {
  EncodingRecipe recipe = default_recipe();
  BitrateLadder ladder;
  ladder.sequence_id = "order";
  for (int b : recipe.target_bitrates_kbps)
    ladder.entries.emplace_back(b, recipe.resolutions[0]);
  auto matrix = ladder.one_hot(recipe);
  for (const auto& row : matrix) CHECK(row[0] == 1);  // index 0 = 1080p
}
