#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "fairicl/errors.hpp"
#include "fairicl/harness.hpp"
#include "fairicl/keyvalue.hpp"

namespace {

enum Exit : int { kOk = 0, kConfig = 1, kBackend = 2, kInvariant = 3 };

int run_command(const std::string& config_path, const std::string& methods,
                const std::string& backend, const std::string& out) {
  auto config = fairicl::load_config(config_path);
  if (!methods.empty()) {
    config.methods.clear();
    for (const auto& m : fairicl::split_list(methods)) {
      config.methods.push_back(fairicl::method_from_string(m));
    }
  }
  if (!backend.empty()) config.backend = backend;
  if (!out.empty()) config.out_dir = out;
  config.validate();

  const auto report = fairicl::run_experiment(config);
  fairicl::write_outputs(report, config.out_dir);
  std::cout << fairicl::format_summary_table(fairicl::aggregate(report.cells));
  std::cout << "wrote " << config.out_dir << " (" << report.cells.size() << " cells, "
            << report.stats.backend_calls << " backend calls, " << report.stats.cache_hits
            << " cache hits)\n";
  for (const auto& cell : report.cells) {
    if (!cell.ok) {
      std::cerr << "cell " << fairicl::to_string(cell.method) << " seed " << cell.seed
                << " repeat " << cell.repeat << " failed: " << cell.error << '\n';
    }
  }
  return report.all_ok() ? kOk : kBackend;
}

int report_command(const std::string& dir) {
  const auto text = fairicl::read_file((std::filesystem::path(dir) / "report.json").string());
  const auto summary = fairicl::aggregate_report(nlohmann::json::parse(text));
  std::cout << fairicl::format_summary_table(summary);
  return kOk;
}

int dump_check_command(const std::string& dir) {
  const auto result = fairicl::dump_check(dir);
  for (const auto& d : result.diffs) std::cout << d << '\n';
  std::cout << result.cells_checked << " cells checked, " << result.diffs.size() << " diffs\n";
  return result.diffs.empty() ? kOk : kInvariant;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness-aware in-context example selection experiments"};
  app.require_subcommand(1);

  std::string config_path, methods, backend, out, in_dir;
  auto* run = app.add_subcommand("run", "Run an experiment from a config file");
  run->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--method", methods, "Comma-separated subset of zero_shot,random_ice,rag,smite");
  run->add_option("--backend", backend, "mock or http")->check(CLI::IsMember({"mock", "http"}));
  run->add_option("--out", out, "Output directory");

  auto* report = app.add_subcommand("report", "Aggregate a finished run");
  report->add_option("--in", in_dir, "Run output directory")->required()->check(CLI::ExistingDirectory);

  auto* check = app.add_subcommand("dump-check", "Recompute metrics from the prediction dump");
  check->add_option("--in", in_dir, "Run output directory")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*run) return run_command(config_path, methods, backend, out);
    if (*report) return report_command(in_dir);
    return dump_check_command(in_dir);
  } catch (const fairicl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const fairicl::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return kConfig;
  } catch (const fairicl::InsufficientSupportError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const fairicl::BackendError& e) {
    std::cerr << "backend error: " << e.what() << '\n';
    return kBackend;
  } catch (const fairicl::InvariantError& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kInvariant;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "malformed input: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvariant;
  }
}
