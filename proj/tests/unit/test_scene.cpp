#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "geostate/scene.hpp"

using namespace geostate;
using namespace geostate::scene;

namespace {

std::string scene_path(const std::string& name) { return std::string(GEOSTATE_SCENE_DIR) + "/" + name; }

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::SceneError;
}

Outcome run_named(const Scene& scene, const std::string& name, const RunOptions& options = {}) {
  return run_request(scene, scene.request(name), options);
}

const char* kMinimal = R"json({
  "ambient_dim": 2,
  "parameters": { "a": "2*b", "b": 1.5 },
  "submanifolds": [ { "name": "C", "kind": "affine", "point": [0, "b"], "tangent": [[1, 0]] } ],
  "states": [ { "name": "s", "core": "C", "alpha": "1/2", "coeff": "a*exp(-u1^2)",
                "support": [[-8, 8]] } ],
  "tests": [ { "name": "f", "alpha": 0.5, "coeff": "1" } ],
  "requests": [ { "op": "pair", "state": "s", "test": "f" } ]
})json";

}  // namespace

TEST_CASE("cli examples") {
  const Scene axes = Scene::from_file(scene_path("axes.json"));
  const Outcome check = run_request(axes, axes.requests().front(), {});
  REQUIRE(!check.summary.empty());
  CHECK(check.summary.front() == "transverse, dim 0, points: (0,0)");
  CHECK(check.status == 0);

  const Scene lines = Scene::from_file(scene_path("tilted_lines.json"));
  const Outcome inner = run_named(lines, "overlap");
  REQUIRE(inner.table);
  CHECK(inner.table->rows[0][0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(inner.table->rows[0][1] == 0.0);
  CHECK(inner.table->rows[0][2] == doctest::Approx(4.0).epsilon(1e-12));

  const Outcome sweep = run_named(lines, "angle");
  REQUIRE(sweep.table);
  const auto& rows = sweep.table->rows;
  REQUIRE(rows.size() == 10);
  CHECK(rows.front()[0] == doctest::Approx(std::numbers::pi / 12));
  CHECK(rows.back()[0] == doctest::Approx(std::numbers::pi / 2));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i][1] < rows[i - 1][1]);
    CHECK(std::abs(rows[i][1] - 1.0 / std::sin(rows[i][0])) < 1e-12);
  }
}

TEST_CASE("parameters and expression-valued fields") {
  const Scene s = Scene::from_text(kMinimal);
  CHECK(s.parameters().at("a") == 3.0);
  CHECK(s.normalized()["states"][0]["alpha"] == "1/2");
  CHECK(s.normalized()["states"][0]["conormal"] == "orthonormal");
  CHECK(s.normalized()["requests"][0]["name"] == "pair1");
  const Outcome o = run_request(s, s.requests().front(), {});
  CHECK(o.table->rows[0][0] == doctest::Approx(3.0 * std::sqrt(std::numbers::pi)).epsilon(1e-12));

  const Scene overridden = Scene::from_text(kMinimal, {{"b", 0.5}});
  CHECK(overridden.parameters().at("a") == 1.0);
  CHECK(code_of([] { Scene::from_text(R"({"ambient_dim": 1, "parameters": {"a": "b", "b": "a"}})"); }) ==
        ErrorCode::SceneError);
}

TEST_CASE("normalized scenes re-load to the same scene and results") {
  for (const char* file : {"axes.json", "tilted_lines.json", "planes_r3.json", "circle.json", "nontransverse.json"}) {
    CAPTURE(file);
    const Scene original = Scene::from_file(scene_path(file));
    const Scene reloaded = Scene::from_text(original.normalized().dump());
    CHECK(reloaded.normalized() == original.normalized());
    for (const Request& r : original.requests()) {
      if (r.op == RequestOp::Oracle && std::string(file) == "planes_r3.json") continue;
      CAPTURE(r.name);
      int status_a = 0;
      int status_b = 0;
      std::optional<Table> a;
      std::optional<Table> b;
      try {
        const Outcome o = run_request(original, r, {});
        a = o.table;
        status_a = o.status;
      } catch (const Error& e) {
        status_a = exit_code(e.code());
      }
      try {
        const Outcome o = run_request(reloaded, reloaded.request(r.name), {});
        b = o.table;
        status_b = o.status;
      } catch (const Error& e) {
        status_b = exit_code(e.code());
      }
      CHECK(status_a == status_b);
      REQUIRE(a.has_value() == b.has_value());
      if (!a) continue;
      REQUIRE(a->rows.size() == b->rows.size());
      for (std::size_t i = 0; i < a->rows.size(); ++i) {
        for (std::size_t j = 0; j < a->rows[i].size(); ++j) {
          const double x = a->rows[i][j];
          const double y = b->rows[i][j];
          if (std::isnan(x)) {
            CHECK(std::isnan(y));
          } else {
            CHECK(std::abs(x - y) <= 1e-14 * std::max(1.0, std::abs(x)));
          }
        }
      }
    }
  }
}

TEST_CASE("randomised checks are deterministic for a fixed seed") {
  const Scene axes = Scene::from_file(scene_path("axes.json"));
  RunOptions options;
  options.trials = 25;
  options.seed = 11;
  const Outcome first = run_named(axes, "frames", options);
  const Outcome second = run_named(axes, "frames", options);
  CHECK(first.summary == second.summary);
  const std::string& last = first.summary.back();
  REQUIRE(last.rfind("choice independence: 25 trials", 0) == 0);
  CHECK(std::stod(last.substr(last.rfind(' ') + 1)) <= 1e-10);
}

TEST_CASE("scene errors") {
  CHECK(code_of([] { Scene::from_text("{ not json"); }) == ErrorCode::SyntaxError);
  CHECK(code_of([] { Scene::from_text(R"({"ambient_dim": 2, "colour": 1})"); }) == ErrorCode::SceneError);
  CHECK(code_of([] { Scene::from_text(R"({"ambient_dim": 11})"); }) == ErrorCode::SceneError);
  CHECK(code_of([] {
          Scene::from_text(R"({"ambient_dim": 2, "states": [{"name": "s", "core": "nope", "alpha": 0.5, "coeff": "1"}]})");
        }) == ErrorCode::SceneError);
  CHECK(code_of([] {
          Scene::from_text(R"({"ambient_dim": 2,
            "submanifolds": [{"name": "C", "kind": "affine", "point": [0, 0], "tangent": [[1, 0]]}],
            "states": [{"name": "s", "core": "C", "alpha": 0.5, "coeff": "1+"}]})");
        }) == ErrorCode::SyntaxError);
  CHECK(code_of([] { Scene::from_file(scene_path("degree_mismatch.json")); }) == ErrorCode::DegreeMismatch);

  const Scene bad = Scene::from_file(scene_path("nontransverse.json"));
  const Outcome check = run_request(bad, bad.requests().front(), {});
  CHECK(check.summary.front().rfind("not transverse", 0) == 0);
  CHECK(check.status == 6);
  CHECK(code_of([&] { run_request(bad, bad.requests().back(), {}); }) == ErrorCode::TransversalityFailure);
}

TEST_CASE("csv output uses full precision") {
  std::ostringstream out;
  write_csv(out, Table{{"a", "b"}, {{0.1, 2.0}, {1.0 / 3.0, -0.0}}});
  CHECK(out.str() == "a,b\n0.10000000000000001,2\n0.33333333333333331,-0\n");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
