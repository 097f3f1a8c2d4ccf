#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "modlab/errors.hpp"
#include "modlab/serialize.hpp"

using namespace modlab;

TEST_CASE("approximation documents round trip byte-stably") {
  for (auto g : {build_square(2), build_carpet(2), build_sponge(1), build_inflated_cover(build_carpet(1), 1.5)}) {
    std::string text = approximation_json(g);
    auto back = approximation_from_json(text);
    CHECK(back.size() == g.size());
    CHECK(back.edges() == g.edges());
    CHECK(back.kappa() == g.kappa());
    CHECK(back.space_tag() == g.space_tag());
    CHECK(back.base_tag() == g.base_tag());
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(back.cells()[i].center == g.cells()[i].center);
    CHECK(approximation_json(back) == text);
    auto j = Json::parse(text);
    CHECK(j["modlab_schema"] == 1);
  }
  CHECK(approximation_json(build_carpet(2)) == approximation_json(build_carpet(2)));
}

TEST_CASE("family documents round trip") {
  std::vector<CurveFamilySpec> specs{
      CurveFamilySpec::left_right(),
      CurveFamilySpec::connect(CellSet::from_ids({1, 2}), CellSet::from_ids({5}),
                               CellSet::from_box(Box{{0, 0, 0}, {1, 0.5, 1}}, CellSet::Mode::within)),
      CurveFamilySpec::cross_rect(Box{{0.1, 0.2, 0}, {0.7, 0.8, 1}}, CrossAxis::vertical),
      CurveFamilySpec::diam_at_least(0.5),
      CurveFamilySpec::tube({{0.1, 0.1, 0}, {0.9, 0.2, 0}}, 0.3),
  };
  auto g = build_carpet(2);
  for (const auto& s : specs) {
    Json j = to_json(s);
    auto back = family_from_json(j);
    CHECK(to_json(back) == j);
    auto f1 = resolve(s, g), f2 = resolve(back, g);
    CHECK(f1.sources == f2.sources);
    CHECK(f1.targets == f2.targets);
    CHECK(f1.region == f2.region);
  }
}

TEST_CASE("family documents with side shortcuts") {
  auto j = Json::parse(R"({"variant":"connect","a":{"side":"left"},"b":{"side":"right"}})");
  auto g = build_square(1);
  auto f = resolve(family_from_json(j), g);
  CHECK(f.sources.size() == 3);
  CHECK(f.targets.size() == 3);
}

TEST_CASE("malformed family documents") {
  CHECK_THROWS_AS(family_from_json(Json::parse(R"({"variant":"spiral"})")), SpecError);
  CHECK_THROWS_AS(family_from_json(Json::parse(R"({"variant":"connect","a":{}})")), SpecError);
  CHECK_THROWS_AS(family_from_json(Json::parse(R"({"variant":"diam_at_least"})")), SpecError);
  CHECK_THROWS_AS(family_from_json(Json::parse(R"({"variant":"connect","a":{"side":"up"},"b":{"side":"left"}})")),
                  SpecError);
}

TEST_CASE("solution and report documents") {
  auto g = build_square(1);
  auto sol = modulus(g, CurveFamilySpec::left_right(), 2.0, 1e-6);
  Json j = to_json(sol);
  CHECK(j["status"] == "converged");
  CHECK(j["density"].size() == 9);
  CHECK(j["upper"].get<double>() == sol.upper);
  CHECK(j.contains("active_curves"));

  ScaleSeries s = scale_series(SpaceTag::square, CurveFamilySpec::left_right(), 2.0, 1, 2, 1e-4);
  std::string csv = series_csv(s);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(to_json(s)["entries"].size() == 2);

  auto fm = build_folding(build_carpet(2), 1);
  Json fj = to_json(fm);
  CHECK(fj["tiles"] == 8);
  CHECK(fj["group"].size() == 8);
  CHECK(to_json(validate_approximation(g))["passed"] == true);
}

TEST_CASE("number formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  CHECK(std::stod(format_double(1.0 / 3)) == 1.0 / 3);
}
