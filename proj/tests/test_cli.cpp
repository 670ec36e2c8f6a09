#include "dgrham/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace dgrham;
namespace fs = std::filesystem;

namespace {

const char* kExample =
    "case=wave_stationary\nmesh.kind=cartesian\nmesh.nx=10\nmesh.ny=10\nspace=dBdiv\ndegree=2\nflux=godunov\n";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dgrham_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Rows of a CSV file without its header.
std::vector<std::vector<std::string>> csv_rows(const fs::path& p, std::string* header = nullptr) {
  std::istringstream in(slurp(p));
  std::string line;
  std::getline(in, line);
  if (header) *header = line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cols.push_back(cell);
    if (!line.empty() && line.back() == ',') cols.emplace_back();
    rows.push_back(cols);
  }
  return rows;
}

double max_column(const fs::path& p, std::size_t col) {
  double m = 0.0;
  for (const auto& r : csv_rows(p)) m = std::max(m, std::stod(r.at(col)));
  return m;
}

}  // namespace

TEST(ParseConfig, ExampleGetsDegreeDefaults) {
  const cli::RunConfig c = cli::parse_config(kExample);
  EXPECT_EQ(c.case_id, "wave_stationary");
  EXPECT_EQ(c.mesh.kind, "cartesian");
  EXPECT_EQ(c.mesh.nx, 10);
  EXPECT_EQ(c.space, SpaceFamily::VectorDivOptimal);
  EXPECT_EQ(c.degree, 2);
  EXPECT_EQ(c.flux, FluxFamily::Godunov);
  EXPECT_EQ(c.cfl, 0.2);
  EXPECT_EQ(c.rk_order, 3);
  EXPECT_EQ(c.stride, 1);
  EXPECT_FALSE(c.t_final.has_value());
  EXPECT_TRUE(c.warnings.empty());
}

TEST(ParseConfig, CommentsBlankLinesAndOverrides) {
  const cli::RunConfig c = cli::parse_config(
      "# maxwell run\n\ncase = maxwell_stationary  # inline\nmesh.kind=triangles\nmesh.nx=4\nmesh.ny=6\nmesh.perturb=0.1\n"
      "mesh.seed=7\nrk_order=1\ncfl=0.05\nt_final=0.5\nstride=3\nout=somewhere\n");
  EXPECT_EQ(c.case_id, "maxwell_stationary");
  EXPECT_EQ(c.space, SpaceFamily::VectorCurlOptimal);
  EXPECT_EQ(c.mesh.ny, 6);
  EXPECT_EQ(c.mesh.perturb, 0.1);
  EXPECT_EQ(c.mesh.seed, 7u);
  EXPECT_EQ(c.rk_order, 1);
  EXPECT_EQ(c.cfl, 0.05);
  EXPECT_EQ(*c.t_final, 0.5);
  EXPECT_EQ(c.stride, 3);
  EXPECT_EQ(c.out, "somewhere");
  EXPECT_EQ(c.entries.size(), 11u);
}

TEST(ParseConfig, DefaultSpaceFollowsSystem) {
  EXPECT_EQ(cli::parse_config("case=wave_wavetrain\n").space, SpaceFamily::VectorDivOptimal);
  EXPECT_EQ(cli::parse_config("case=maxwell_wavetrain\n").space, SpaceFamily::VectorCurlOptimal);
  EXPECT_EQ(cli::parse_config("case=induction_rotating_loop\n").space, SpaceFamily::VectorCurlOptimal);
  EXPECT_EQ(cli::parse_config("case=wave_wavetrain\ndegree=0\n").cfl, 0.5);
  EXPECT_EQ(cli::parse_config("case=wave_wavetrain\ndegree=1\n").rk_order, 2);
}

TEST(ParseConfig, Rejections) {
  EXPECT_THROW(cli::parse_config("case=wave_stationary\ndegree=3\n"), cli::ConfigError);
  EXPECT_THROW(cli::parse_config("case=wave_stationary\ncolour=red\n"), cli::ConfigError);
  EXPECT_THROW(cli::parse_config("case=wave_stationary\nflux=upwind\n"), cli::ConfigError);
  EXPECT_THROW(cli::parse_config("case=wave_stationary\nspace=RT\n"), cli::ConfigError);
  EXPECT_THROW(cli::parse_config("case=wave_stationary\nmesh.kind=hex\n"), cli::ConfigError);
  EXPECT_THROW(cli::parse_config("case=no_such_case\n"), cli::ConfigError);
  EXPECT_THROW(cli::parse_config("mesh.kind=cartesian\n"), cli::ConfigError);
  EXPECT_THROW(cli::parse_config("case=wave_stationary\nmesh.kind=file\n"), cli::ConfigError);
  EXPECT_THROW(cli::parse_config("case=wave_stationary\ndegree=two\n"), cli::ConfigError);
  EXPECT_THROW(cli::parse_config("case=wave_stationary\ncase=wave_stationary\n"), cli::ConfigError);
  EXPECT_THROW(cli::parse_config("case=wave_stationary\nstride=0\n"), cli::ConfigError);
  EXPECT_THROW(cli::parse_config("case=wave_stationary\nrk_order=4\n"), cli::ConfigError);
  EXPECT_THROW(cli::parse_config("case=wave_stationary\ncfl=-1\n"), cli::ConfigError);
  EXPECT_THROW(cli::parse_config("case=wave_stationary\nmesh.ladder=20,10\n"), cli::ConfigError);
  EXPECT_THROW(cli::parse_config("case=wave_stationary\nmesh.perturb=0.1\n"), cli::ConfigError);
  EXPECT_THROW(cli::parse_config("case=wave_stationary\ninit=divfree\n"), cli::ConfigError);
  EXPECT_THROW(cli::parse_config("case=wave_stationary\nnot a pair\n"), cli::ConfigError);
  EXPECT_NO_THROW(cli::parse_config("mesh.kind=perturbed\n", false));
}

TEST(ParseConfig, LineNumberInMessage) {
  try {
    cli::parse_config("case=wave_stationary\n\nbogus=1\n");
    FAIL();
  } catch (const cli::ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(ParseConfig, FluxDirectionWarnings) {
  const cli::RunConfig c = cli::parse_config("case=maxwell_stationary\nflux=lf_normal\n");
  ASSERT_EQ(c.warnings.size(), 1u);
  EXPECT_NE(c.warnings[0].find("divergence"), std::string::npos);
  EXPECT_EQ(cli::parse_config("case=wave_stationary\nflux=lf_tangential\n").warnings.size(), 1u);
  EXPECT_TRUE(cli::parse_config("case=wave_stationary\nflux=lf_normal\n").warnings.empty());
  EXPECT_TRUE(cli::parse_config("case=maxwell_stationary\nflux=lf_tangential\n").warnings.empty());
  EXPECT_EQ(cli::parse_config("case=maxwell_stationary\nflux=lax_friedrich\nspace=dQ\n").warnings.size(), 2u);
}

TEST(MeshGen, WritesLoadableMesh) {
  const fs::path out = scratch("meshgen");
  const cli::RunConfig c = cli::parse_config("mesh.kind=triangles\nmesh.nx=5\nmesh.ny=4\n", false);
  const fs::path file = cli::cmd_mesh_gen(c, out.string());
  const Mesh loaded = load_mesh(slurp(file));
  EXPECT_EQ(loaded, split_into_triangles(generate_perturbed_quad(5, 4, 0.2, 42), 42));
  EXPECT_TRUE(fs::exists(out / "manifest.txt"));

  cli::RunConfig f = cli::parse_config("case=wave_stationary\nmesh.kind=file\nmesh.file=" + file.string() + "\n");
  EXPECT_EQ(*cli::make_mesh(f.mesh), loaded);
  EXPECT_THROW(cli::cmd_mesh_gen(f, out.string()), cli::ConfigError);
}

TEST(Run, StationaryWaveArtifacts) {
  const fs::path out = scratch("run_wave");
  cli::RunConfig c = cli::parse_config(std::string(kExample) + "t_final=3\nstride=10\n");
  const RunResult r = cli::cmd_run(c, out.string());
  std::string header;
  const auto drift = csv_rows(out / "drift.csv", &header);
  EXPECT_EQ(header, "t,drift");
  EXPECT_EQ(drift.size(), r.times.size());
  EXPECT_EQ(std::stod(drift.back()[0]), 3.0);
  EXPECT_LE(max_column(out / "drift.csv", 1), 1e-11);
  const auto energy = csv_rows(out / "energy.csv", &header);
  EXPECT_EQ(header, "t,energy");
  EXPECT_EQ(std::stod(energy.front()[1]), 1.0);
  const auto errors = csv_rows(out / "errors.csv", &header);
  EXPECT_EQ(header, "variable,error");
  ASSERT_EQ(errors.size(), 4u);
  EXPECT_EQ(errors[0][0], "p");
  EXPECT_EQ(errors[3][0], "u");
  EXPECT_EQ(std::stod(errors[3][1]), r.error("u"));

  const std::string vtk = slurp(out / "fields.vtk");
  EXPECT_EQ(vtk.rfind("# vtk DataFile Version 3.0\n", 0), 0u);
  EXPECT_NE(vtk.find("DATASET UNSTRUCTURED_GRID"), std::string::npos);
  EXPECT_NE(vtk.find("POINTS 2500 double"), std::string::npos);
  EXPECT_NE(vtk.find("SCALARS p double 1"), std::string::npos);
  EXPECT_NE(vtk.find("VECTORS u double"), std::string::npos);

  const std::string manifest = slurp(out / "manifest.txt");
  for (const char* key : {"version=dgrham", "case=wave_stationary", "mesh.seed=42", "space=dBdiv", "degree=2", "cfl=0.2",
                          "rk_order=3", "steps=300", "flux=godunov"}) {
    EXPECT_NE(manifest.find(key), std::string::npos) << key;
  }
}

TEST(Run, LaxFriedrichOnTensorSpaceDrifts) {
  const fs::path out = scratch("run_lf");
  const cli::RunConfig c = cli::parse_config(
      "case=maxwell_stationary\nmesh.kind=perturbed\nmesh.nx=10\nspace=dQ\nflux=lax_friedrich\ndegree=1\nt_final=3\nstride=20\n");
  cli::cmd_run(c, out.string());
  EXPECT_GE(max_column(out / "drift.csv", 1), 1e-3);
  EXPECT_NE(slurp(out / "manifest.txt").find("warning="), std::string::npos);
}

TEST(Run, DeterministicOutputs) {
  const std::string text = "case=induction_rotating_loop\nmesh.kind=triangles\nmesh.nx=4\ndegree=1\nt_final=0.2\n";
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  cli::cmd_run(cli::parse_config(text), a.string());
  cli::cmd_run(cli::parse_config(text), b.string());
  for (const char* f : {"drift.csv", "energy.csv", "errors.csv", "fields.vtk", "manifest.txt"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  EXPECT_NE(slurp(a / "manifest.txt").find("init=divfree"), std::string::npos);
}

TEST(Convergence, TableAndRates) {
  const fs::path out = scratch("conv");
  const std::string base = "case=maxwell_wavetrain_plus_vortex\nmesh.kind=cartesian\nmesh.ladder=10,20,40\ndegree=2\n";
  const ConvergenceTable t = cli::cmd_convergence(cli::parse_config(base + "space=dBcurl\n"), out.string());
  std::string header;
  const auto rows = csv_rows(out / "table.csv", &header);
  EXPECT_EQ(header, "h,b,b_rate,e_x,e_x_rate,e_y,e_y_rate,e,e_rate");
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(std::stod(rows[0][0]), 0.1);
  EXPECT_EQ(rows[0][2], "");
  EXPECT_EQ(rows[3][0], "slope");
  EXPECT_EQ(std::stod(rows[2][4]), t.last_rate(1));
  EXPECT_GE(t.last_rate(1), 2.8);
  EXPECT_LE(t.last_rate(1), 3.2);

  const ConvergenceTable q = cli::cmd_convergence(cli::parse_config(base + "space=dQ\n"), scratch("conv_dq").string());
  EXPECT_LE(q.last_rate(1), 2.7);

  EXPECT_THROW(cli::cmd_convergence(cli::parse_config(base.substr(0, base.find("mesh.ladder")) + "degree=1\n"), out.string()),
               cli::ConfigError);
}

TEST(Properties, SuitePassesOnTwoByTwo) {
  const fs::path out = scratch("props");
  const nlohmann::json j = cli::cmd_properties(cli::parse_config("mesh.kind=cartesian\nmesh.nx=2\n", false), out.string());
  EXPECT_TRUE(j["pass"].get<bool>());
  const nlohmann::json disk = nlohmann::json::parse(slurp(out / "properties.json"));
  EXPECT_EQ(disk, j);
  int betti = 0;
  for (const auto& c : j["checks"]) {
    EXPECT_TRUE(c["pass"].get<bool>()) << c.dump();
    EXPECT_LE(c["residual"].get<double>(), c["tolerance"].get<double>());
    if (c["name"].get<std::string>().rfind("betti", 0) == 0) ++betti;
  }
  EXPECT_EQ(betti, 6);
}

TEST(Properties, SuitePassesOnPerturbedAndTriangles) {
  for (const char* kind : {"perturbed", "triangles"}) {
    const auto checks = cli::mesh_property_checks(cli::make_mesh(cli::parse_config(std::string("mesh.kind=") + kind + "\nmesh.nx=3\n", false).mesh),
                                                  kind, {0, 1, 2}, 42);
    EXPECT_EQ(checks.size(), 24u);
    for (const auto& c : checks) EXPECT_TRUE(c.pass) << c.name << " " << c.degree << " " << c.residual;
  }
}

TEST(Properties, FailingCheckIsReported) {
  std::vector<cli::PropertyCheck> v{{"x", "m", 0, 1.0, 0.5, false}, {"y", "m", 1, 0.0, 0.5, true}};
  const nlohmann::json j = cli::properties_json(v);
  EXPECT_FALSE(j["pass"].get<bool>());
  EXPECT_EQ(j["checks"].size(), 2u);
}

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 2.5, -7.25e12}) EXPECT_EQ(std::stod(cli::format_double(v)), v);
  EXPECT_EQ(cli::format_double(0.5), "0.5");
}
