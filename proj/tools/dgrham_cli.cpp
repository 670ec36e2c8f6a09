#include "dgrham/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace dgrham;

namespace {

void print_warnings(const cli::RunConfig& cfg) {
  for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structure-preserving DG solver on the periodic unit torus"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_override;
  int threads = 0;
  app.add_option("--threads", threads, "Cap on worker threads")->check(CLI::PositiveNumber);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Key=value configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_override, "Output directory (overrides the 'out' key)");
    sub->add_option("--threads", threads, "Cap on worker threads")->check(CLI::PositiveNumber);
  };
  CLI::App* mesh_gen = app.add_subcommand("mesh-gen", "Generate a mesh and write it in the text mesh format");
  CLI::App* run = app.add_subcommand("run", "Run one case and write drift, energy, errors, fields and a manifest");
  CLI::App* conv = app.add_subcommand("convergence", "Run a mesh ladder and write the convergence table");
  CLI::App* props = app.add_subcommand("properties", "Run the operator property suite and write a JSON report");
  for (CLI::App* s : {mesh_gen, run, conv, props}) add_common(s);

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) set_num_threads(threads);

  try {
    const bool needs_case = run->parsed() || conv->parsed();
    const cli::RunConfig cfg = cli::load_config(config_path, needs_case);
    const std::string out = out_override.empty() ? cfg.out : out_override;
    print_warnings(cfg);
    if (mesh_gen->parsed()) {
      std::cout << "wrote " << cli::cmd_mesh_gen(cfg, out).string() << "\n";
    } else if (run->parsed()) {
      const RunResult r = cli::cmd_run(cfg, out);
      std::cout << "steps " << r.steps << " dt " << cli::format_double(r.dt) << " max drift " << cli::format_double(r.max_drift())
                << "\n";
      for (const auto& [name, e] : r.errors) std::cout << name << " " << cli::format_double(e) << "\n";
    } else if (conv->parsed()) {
      const ConvergenceTable t = cli::cmd_convergence(cfg, out);
      for (std::size_t v = 0; v < t.variables.size(); ++v) {
        std::cout << t.variables[v] << " last rate " << cli::format_double(t.last_rate(v)) << " slope "
                  << cli::format_double(t.slopes[v]) << "\n";
      }
    } else {
      const nlohmann::json j = cli::cmd_properties(cfg, out);
      std::cout << j.dump(2) << "\n";
      return j["pass"].get<bool>() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
