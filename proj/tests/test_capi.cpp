#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "buckrom/buckrom.h"
#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kData = BUCKROM_TEST_DATA_DIR;

}  // namespace

TEST_CASE("status names") {
  CHECK(std::string(brom_status_name(BROM_OK)) == "ok");
  CHECK(std::string(brom_status_name(BROM_ERR_GRID_MISMATCH)).find("grid") != std::string::npos);
  CHECK(std::string(brom_status_name(12345)).size() > 0);
}

TEST_CASE("null arguments are rejected") {
  CHECK(brom_scenario_load(nullptr, nullptr) == BROM_ERR_INVALID_ARGUMENT);
  CHECK(std::string(brom_last_error()).size() > 0);
  brom_mesh* m = nullptr;
  CHECK(brom_mesh_beam2d(1.0, 0.1, 4, 1, nullptr) == BROM_ERR_INVALID_ARGUMENT);
  CHECK(brom_mesh_from_scenario(nullptr, &m) == BROM_ERR_INVALID_ARGUMENT);
  CHECK(brom_lame(1.0, 0.3, nullptr, nullptr) == BROM_ERR_INVALID_ARGUMENT);
  brom_scenario_free(nullptr);
  brom_mesh_free(nullptr);
}

TEST_CASE("scenario from text and from file") {
  brom_scenario* s = nullptr;
  REQUIRE(brom_scenario_parse("[scenario]\nname = t\n[geometry]\nkind = beam3d\n[parameters]\nmu_max = 0.1\n",
                              &s) == BROM_OK);
  CHECK(std::string(brom_scenario_name(s)) == "t");
  CHECK(brom_scenario_dim(s) == 3);
  brom_scenario_free(s);

  s = nullptr;
  CHECK(brom_scenario_parse("[parameters]\nmu_max = 0.1\nbogus = 1\n", &s) == BROM_ERR_CONFIG);
  CHECK(s == nullptr);
  CHECK(std::string(brom_last_error()).find("bogus") != std::string::npos);
  CHECK(brom_scenario_load("/nonexistent.cfg", &s) == BROM_ERR_IO);

  REQUIRE(brom_scenario_load((fs::path(BUCKROM_SCENARIO_DIR) / "tube_svk.cfg").c_str(), &s) == BROM_OK);
  brom_mesh* m = nullptr;
  REQUIRE(brom_mesh_from_scenario(s, &m) == BROM_OK);
  CHECK(brom_mesh_dim(m) == 3);
  CHECK(brom_mesh_diameter_to_thickness(m) > 1.0);
  brom_mesh_free(m);
  brom_scenario_free(s);
}

TEST_CASE("mesh constructors and queries") {
  brom_mesh* m = nullptr;
  REQUIRE(brom_mesh_beam2d(2.0, 0.5, 4, 2, &m) == BROM_OK);
  CHECK(brom_mesh_dim(m) == 2);
  CHECK(brom_mesh_num_nodes(m) == 15);
  CHECK(brom_mesh_num_elements(m) == 16);
  CHECK(brom_mesh_volume(m) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(brom_mesh_diameter_to_thickness(m) == 0.0);
  const uint64_t fp = brom_mesh_fingerprint(m);
  brom_mesh_free(m);

  REQUIRE(brom_mesh_beam2d(2.0, 0.5, 4, 2, &m) == BROM_OK);
  CHECK(brom_mesh_fingerprint(m) == fp);
  brom_mesh_free(m);
  REQUIRE(brom_mesh_beam2d(2.0, 0.5, 5, 2, &m) == BROM_OK);
  CHECK(brom_mesh_fingerprint(m) != fp);
  brom_mesh_free(m);

  REQUIRE(brom_mesh_beam3d(1.0, 0.2, 0.1, 3, 2, 1, &m) == BROM_OK);
  CHECK(brom_mesh_num_nodes(m) == 4 * 3 * 2);
  CHECK(brom_mesh_volume(m) == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(brom_mesh_num_facets(m) > 0);
  brom_mesh_free(m);

  REQUIRE(brom_mesh_tube(0.28, 0.30, 2.0, 16, 1, 10, &m) == BROM_OK);
  CHECK(brom_mesh_diameter_to_thickness(m) == doctest::Approx(30.0));
  brom_mesh_free(m);

  m = nullptr;
  CHECK(brom_mesh_beam2d(1.0, -0.1, 4, 1, &m) == BROM_ERR_INVALID_GEOMETRY);
  CHECK(brom_mesh_tube(0.3, 0.28, 2.0, 16, 1, 10, &m) == BROM_ERR_INVALID_GEOMETRY);
  CHECK(m == nullptr);
}

TEST_CASE("Lame parameters") {
  double l1 = 0.0, l2 = 0.0;
  REQUIRE(brom_lame(1e6, 0.3, &l1, &l2) == BROM_OK);
  CHECK(l1 == doctest::Approx(1e6 / 2.6));
  CHECK(l2 == doctest::Approx(1e6 * 0.3 / (1.3 * 0.4)));
  CHECK(brom_lame(1e6, 0.5, &l1, &l2) == BROM_ERR_INCOMPRESSIBLE_LIMIT);
  CHECK(brom_lame(-1.0, 0.3, &l1, &l2) == BROM_ERR_INVALID_ARGUMENT);
}

TEST_CASE("compare buffer protocol") {
  const std::string a = kData + "/diagram_a.csv";
  size_t needed = 0;
  REQUIRE(brom_compare(a.c_str(), a.c_str(), 1e-3, nullptr, 0, &needed) == BROM_OK);
  REQUIRE(needed > 1);
  std::vector<char> small(needed - 1);
  CHECK(brom_compare(a.c_str(), a.c_str(), 1e-3, small.data(), small.size(), &needed) ==
        BROM_ERR_INVALID_ARGUMENT);
  std::vector<char> buf(needed);
  REQUIRE(brom_compare(a.c_str(), a.c_str(), 1e-3, buf.data(), buf.size(), &needed) == BROM_OK);
  CHECK(std::strlen(buf.data()) + 1 == needed);
  const auto doc = nlohmann::json::parse(buf.data());
  CHECK(doc["branches"][0]["ordering"] == "a=b");

  const std::string b = kData + "/diagram_short.csv";
  CHECK(brom_compare(a.c_str(), b.c_str(), 1e-3, nullptr, 0, &needed) == BROM_ERR_GRID_MISMATCH);
}

TEST_CASE("offline, online and artifact sizes") {
  const fs::path dir = fs::temp_directory_path() / "buckrom_test_capi";
  fs::remove_all(dir);
  brom_scenario* s = nullptr;
  REQUIRE(brom_scenario_load((kData + "/tiny2d.cfg").c_str(), &s) == BROM_OK);
  brom_offline_info off{};
  REQUIRE(brom_run_offline(s, dir.c_str(), &off) == BROM_OK);
  CHECK(off.branches == 1);
  CHECK(off.snapshots == 11);
  brom_online_info on{};
  REQUIRE(brom_run_online(s, dir.c_str(), &on) == BROM_OK);
  CHECK(on.basis_dimension == off.basis_dimension);
  CHECK(on.all_converged == 1);
  CHECK(on.deim_modes == 0);
  CHECK(on.t_hf_per_mu > 0.0);

  int64_t dofs = 0, n = 0;
  int deim = -1;
  REQUIRE(brom_basis_dims((dir / "tiny2d.brom").c_str(), &dofs, &n, &deim) == BROM_OK);
  CHECK(dofs == 2 * 21 * 3);
  CHECK(n == off.basis_dimension);
  CHECK(deim == 0);

  char path[512];
  REQUIRE(brom_mesh_export(s, dir.c_str(), path, sizeof path) == BROM_OK);
  CHECK(fs::exists(path));
  brom_scenario_free(s);
  CHECK(brom_basis_dims("/nonexistent.brom", &dofs, &n, &deim) == BROM_ERR_IO);
}
