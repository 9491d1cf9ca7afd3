#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "wass/experiment.hpp"

namespace ex = wass::experiment;

namespace {

int run_one(const std::string& kind, const std::string& config, const std::string& out, double scale) {
  const auto e = ex::run_file(config, out, scale, kind.empty() ? std::nullopt : std::optional<std::string>(kind));
  std::cout << ex::status_name(e.exit_code) << " " << e.file;
  if (!e.message.empty()) std::cout << ": " << e.message;
  std::cout << "\n";
  if (e.exit_code == ex::kConfigError) std::cerr << "error: " << e.message << "\n";
  return e.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wasserstein-space experiment runner"};
  app.require_subcommand(1);

  std::string config, out, suite_dir;
  double scale = 1.0;
  std::string chosen;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config) sub->add_option("--config", config, "experiment config (JSON)")->required();
    sub->add_option("--out", out, "output directory")->required();
    sub->add_option("--tolerance-scale", scale, "multiplier applied to every tolerance")->check(CLI::PositiveNumber);
  };

  auto* run = app.add_subcommand("run", "run a config of any kind");
  add_common(run, true);
  run->callback([&] { chosen = "run"; });
  for (const auto& kind : ex::kinds()) {
    auto* sub = app.add_subcommand(kind, "run a '" + kind + "' config");
    add_common(sub, true);
    sub->callback([&chosen, kind] { chosen = kind; });
  }
  auto* suite = app.add_subcommand("suite", "run every *.json config in a directory");
  suite->add_option("dir", suite_dir, "config directory")->required();
  add_common(suite, false);
  suite->callback([&] { chosen = "suite"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ex::kConfigError;
  }

  if (chosen == "suite") {
    try {
      const auto report = ex::suite(suite_dir, out, scale);
      for (const auto& e : report.entries) {
        std::cout << ex::status_name(e.exit_code) << " " << e.file;
        if (!e.message.empty()) std::cout << ": " << e.message;
        std::cout << "\n";
      }
      std::cout << report.entries.size() << " configs, summary in " << out << "/summary.json\n";
      return report.exit_code();
    } catch (const ex::IOError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return ex::kConfigError;
    }
  }
  return run_one(chosen == "run" ? "" : chosen, config, out, scale);
}
