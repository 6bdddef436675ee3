#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "compop/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"composition-operator experiments"};
  compop::ExperimentConfig cfg;
  std::string out_dir = "out";
  std::optional<std::size_t> k, n_dim, samples;
  std::optional<double> theta;
  bool json = false;

  std::string ids;
  for (const auto& [id, fn] : compop::registry()) ids += (ids.empty() ? "" : ", ") + id;

  app.add_option("--experiment", cfg.id, "registry id: " + ids)->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", cfg.seed, "RNG seed");
  app.add_option("--k", k, "truncation order K")->check(CLI::PositiveNumber);
  app.add_option("--n-dim", n_dim, "polydisk dimension N")->check(CLI::PositiveNumber);
  app.add_option("--samples", samples, "sample count (boundary points or WoS trajectories)")->check(CLI::PositiveNumber);
  app.add_option("--theta", theta, "symbol parameter theta");
  app.add_flag("--json", json, "print the run manifest as JSON on stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  cfg.out_dir = out_dir;
  cfg.K = k;
  cfg.N = n_dim;
  cfg.samples = samples;
  cfg.theta = theta;

  compop::RunManifest m;
  try {
    m = compop::run(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  if (json) {
    std::cout << m.to_json().dump(2) << "\n";
  } else {
    for (const auto& a : m.assertions)
      std::printf("%s %s%s%s\n", a.pass ? "PASS" : "FAIL", a.name.c_str(), a.detail.empty() ? "" : "  ",
                  a.detail.c_str());
    std::printf("%s: %s (%.1fs), %zu tables in %s\n", cfg.id.c_str(), compop::to_string(m.status), m.wall_seconds,
                m.checksums.size(), out_dir.c_str());
  }
  if (m.status == compop::RunStatus::error) {
    std::cerr << "error: " << m.error << "\n";
    return 1;
  }
  return m.status == compop::RunStatus::pass ? 0 : 2;
}
