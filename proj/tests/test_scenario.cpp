#include <filesystem>
#include <functional>
#include <string>

#include "buckrom/error.hpp"
#include "buckrom/scenario.hpp"
#include "doctest.h"

using namespace buckrom;
namespace fs = std::filesystem;

namespace {

Scenario parse(const std::string& text) { return parse_scenario(ConfigDocument::parse(text, "t.cfg")); }

std::pair<ErrorCode, std::string> failure(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return {e.code(), e.what()};
  }
  return {static_cast<ErrorCode>(0), ""};
}

const char* kMinimal = R"(
[scenario]
name = minimal
[parameters]
mu_max = 0.1
)";

}  // namespace

TEST_CASE("document grammar") {
  const auto doc = ConfigDocument::parse(
      "# comment\n[Sec]\nKey = Value  ; trailing\nlist = 1, 2.5 , -3\nflag = yes\n\n[other]\nn = 7\n", "x");
  CHECK(doc.has("sec", "key"));
  CHECK(doc.get_string("sec", "key") == "Value");
  CHECK(doc.get_doubles("sec", "list") == std::vector<double>{1.0, 2.5, -3.0});
  CHECK(doc.get_bool("sec", "flag"));
  CHECK(doc.get_int("other", "n") == 7);
  CHECK(doc.get_double("other", "missing", 4.0) == 4.0);
  doc.reject_unused();
}

TEST_CASE("document errors carry the line") {
  auto [c1, m1] = failure([] { ConfigDocument::parse("[a]\nx = 1\nx = 2\n", "f.cfg"); });
  CHECK(c1 == ErrorCode::kConfig);
  CHECK(m1.find("f.cfg:3") != std::string::npos);
  auto [c2, m2] = failure([] { ConfigDocument::parse("x = 1\n", "f.cfg"); });
  CHECK(c2 == ErrorCode::kConfig);
  CHECK(m2.find("f.cfg:1") != std::string::npos);
  auto [c3, m3] = failure([] { ConfigDocument::parse("[a\n", "f.cfg"); });
  CHECK(c3 == ErrorCode::kConfig);
  auto [c4, m4] = failure([] { ConfigDocument::parse("[a]\njunk\n", "f.cfg"); });
  CHECK(c4 == ErrorCode::kConfig);
  CHECK(m4.find("f.cfg:2") != std::string::npos);
  const auto doc = ConfigDocument::parse("[a]\n\nx = abc\n", "f.cfg");
  auto [c5, m5] = failure([&] { doc.get_double("a", "x"); });
  CHECK(c5 == ErrorCode::kConfig);
  CHECK(m5.find("f.cfg:3") != std::string::npos);
  CHECK(m5.find("[a] x") != std::string::npos);
  auto [c6, m6] = failure([&] { doc.get_int("a", "missing"); });
  CHECK(c6 == ErrorCode::kConfig);
  CHECK(failure([] { ConfigDocument::load("/nonexistent/file.cfg"); }).first == ErrorCode::kIo);
}

TEST_CASE("defaults of a minimal scenario") {
  const Scenario s = parse(kMinimal);
  CHECK(s.name == "minimal");
  CHECK(s.geometry.kind == GeometryKind::kBeam2d);
  CHECK(s.dim() == 2);
  CHECK(s.material == MaterialKind::kSvk);
  CHECK(s.loading.compression == CompressionKind::kDirichlet);
  CHECK(s.pod_tolerance == 1e-8);
  CHECK(s.functional == FunctionalKind::kInfNormY);
}

TEST_CASE("scenario errors") {
  CHECK(failure([] { parse("[parameters]\nmu_min = 0.1\nmu_max = 0.1\n"); }).first == ErrorCode::kConfig);
  auto [c, m] = failure([] { parse("[parameters]\nmu_max = 0.1\n[offline]\nn_trian = 12\n"); });
  CHECK(c == ErrorCode::kConfig);
  CHECK(m.find("n_trian") != std::string::npos);
  CHECK(m.find("t.cfg:4") != std::string::npos);
  CHECK(failure([] { parse("[parameters]\nmu_max = 0.1\n[output]\nfunctional = inf_norm_z\n"); }).first ==
        ErrorCode::kInvalidFunctional);
  CHECK(failure([] { parse("[parameters]\nmu_max = 0.1\n[material]\nmodel = rubber\n"); }).first ==
        ErrorCode::kConfig);
  CHECK(failure([] { parse("[geometry]\nkind = tube\nr_inner = 0.4\n[parameters]\nmu_max = 1\n"); }).first ==
        ErrorCode::kConfig);
  CHECK(failure([] { parse("[parameters]\nmu_max = 0.1\n[seeding]\nenabled = true\naxis = 0\n"); }).first ==
        ErrorCode::kConfig);
  CHECK(failure([] { parse("[parameters]\nmu_max = 0.1\n[material]\npoisson = 0.5\n"); }).first ==
        ErrorCode::kConfig);
  CHECK(failure([] { parse("[parameters]\nmu_max = 0.1\n[material]\nyoung_range = 1, 2\n"); }).first ==
        ErrorCode::kConfig);
}

TEST_CASE("every bundled scenario loads and builds") {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(BUCKROM_SCENARIO_DIR)) {
    if (entry.path().extension() != ".cfg") continue;
    ++count;
    CAPTURE(entry.path().string());
    const Scenario s = load_scenario(entry.path());
    CHECK(s.name == entry.path().stem().string());
    CHECK(!s.description.empty());
    auto mesh = build_mesh(s);
    const ProblemSpec spec = build_problem_spec(s, mesh);
    HyperelasticProblem prob(spec);
    for (const auto& p : training_points(s)) {
      prob.set_parameters(p);
      const auto plan = make_plan(s, prob, p, s.n_train);
      CHECK(plan.mu_at(plan.count - 1) == doctest::Approx(s.mu_max));
    }
    CHECK(!online_points(s).empty());
  }
  CHECK(count >= 16);
}

TEST_CASE("boundary conditions follow the loading") {
  const Scenario d = load_scenario(fs::path(BUCKROM_SCENARIO_DIR) / "svk3d_axial.cfg");
  CHECK_FALSE(d.loading.clamp_loaded_end);
  const auto spec = build_problem_spec(d, build_mesh(d));
  REQUIRE(spec.bcs.dirichlet.size() == 2);
  CHECK(spec.bcs.dirichlet[1].mask == std::array<bool, 3>{true, false, false});
  CHECK(spec.bcs.dirichlet[1].per_mu[0] == -1.0);

  const Scenario n = load_scenario(fs::path(BUCKROM_SCENARIO_DIR) / "tube_nh.cfg");
  const auto tspec = build_problem_spec(n, build_mesh(n));
  CHECK(tspec.bcs.dirichlet.size() == 1);
  REQUIRE(tspec.bcs.neumann.size() == 1);
  CHECK(tspec.bcs.neumann[0].per_mu[2] == -1.0);
  CHECK(tspec.material == MaterialKind::kNeoHookean);
}

TEST_CASE("training and online points") {
  const Scenario m = load_scenario(fs::path(BUCKROM_SCENARIO_DIR) / "svk2d_multi.cfg");
  const auto train = training_points(m);
  CHECK(train.size() == 4);
  CHECK(train[0].young == 1e5);
  CHECK(train[3].poisson == 0.42);
  const auto online = online_points(m);
  CHECK(online.size() == static_cast<std::size_t>(m.online.random_pairs));
  for (const auto& p : online) {
    CHECK(p.young >= 1e5);
    CHECK(p.young <= 1e7);
    CHECK(p.poisson >= 0.25);
    CHECK(p.poisson <= 0.42);
  }
  const auto again = online_points(m);
  for (std::size_t i = 0; i < online.size(); ++i) CHECK(again[i].young == online[i].young);

  const Scenario g = load_scenario(fs::path(BUCKROM_SCENARIO_DIR) / "svk2d_geometric.cfg");
  const auto gt = training_points(g);
  CHECK(gt.size() == 3);
  CHECK(gt[1].mu_g == doctest::Approx(0.75));
  const auto go = online_points(g);
  CHECK(go.size() == 5);
  CHECK(go[1].mu_g == doctest::Approx(0.625));
  CHECK(go[3].mu_g == doctest::Approx(0.875));
}

TEST_CASE("geometric split defaults to half the length") {
  const Scenario t = load_scenario(fs::path(BUCKROM_SCENARIO_DIR) / "tube_geometric.cfg");
  const auto spec = build_problem_spec(t, build_mesh(t));
  CHECK(spec.geometry == GeometricMapKind::kTubeSemilength);
  CHECK(spec.geometry_split == doctest::Approx(0.5 * t.geometry.length));
  CHECK(spec.geometry_reference_extent == doctest::Approx(0.5 * t.geometry.length));
}

TEST_CASE("geometry kind names") {
  CHECK(std::string(geometry_kind_name(GeometryKind::kBeam2d)) == "beam2d");
  CHECK(std::string(geometry_kind_name(GeometryKind::kTube)) == "tube");
}
