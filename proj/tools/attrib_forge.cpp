// attrib-forge: feature selection over product attributes with GA wrapper
// search, cross-validated regressors, and Shapley-value attribution.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "attribforge/config.hpp"
#include "attribforge/errors.hpp"
#include "attribforge/pipeline.hpp"

namespace {

struct CliOverrides {
  std::string config_path;
  std::int64_t seed = -1;
  std::string model;
  std::int64_t folds = 0;
  std::int64_t generations = -1;
  std::int64_t population = 0;
  std::int64_t top_k = 0;
  std::string out;
  std::int64_t threads = 0;
  std::size_t subset = 1;
};

attribforge::RunConfig resolve(const CliOverrides& cli) {
  attribforge::RunConfig config =
      attribforge::RunConfig::from_file(cli.config_path);
  if (cli.seed >= 0) config.seed = static_cast<std::uint64_t>(cli.seed);
  if (!cli.model.empty())
    config.model.kind = attribforge::model_kind_from_string(cli.model);
  if (cli.folds > 0) config.folds = static_cast<std::size_t>(cli.folds);
  if (cli.generations >= 0)
    config.ga.generations = static_cast<std::size_t>(cli.generations);
  if (cli.population > 0)
    config.ga.population = static_cast<std::size_t>(cli.population);
  if (cli.top_k > 0) config.ga.top_k = static_cast<std::size_t>(cli.top_k);
  if (!cli.out.empty()) config.out = cli.out;
  if (cli.threads > 0) config.threads = static_cast<std::size_t>(cli.threads);
  config.finalize();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attrib-forge: which product attributes drive satisfaction ratings"};
  app.require_subcommand(1);

  CliOverrides cli;
  app.add_option("--config", cli.config_path, "run configuration file")
      ->required();
  app.add_option("--seed", cli.seed, "override the run seed");
  app.add_option("--model", cli.model, "model kind: knn|dt|rf|svr|mlp");
  app.add_option("--folds", cli.folds, "cross-validation folds");
  app.add_option("--generations", cli.generations, "GA generations");
  app.add_option("--pop", cli.population, "GA population size");
  app.add_option("--topk", cli.top_k, "number of subsets to keep");
  app.add_option("--out", cli.out, "output directory");
  app.add_option("--threads", cli.threads, "worker threads");

  auto* ingest = app.add_subcommand("ingest", "load, clean and encode the dataset");
  auto* select = app.add_subcommand("select", "run GA wrapper feature selection");
  auto* explain = app.add_subcommand("explain", "Shapley attribution for a selected subset");
  explain->add_option("--subset", cli.subset, "1-based subset rank from subsets.json");
  auto* compare = app.add_subcommand("compare", "wrapper vs standalone model comparison");
  auto* report = app.add_subcommand("report", "bundle emitted artifacts into run_report.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const attribforge::RunConfig config = resolve(cli);
    if (ingest->parsed()) attribforge::cmd_ingest(config);
    if (select->parsed()) attribforge::cmd_select(config);
    if (explain->parsed()) attribforge::cmd_explain(config, cli.subset);
    if (compare->parsed()) attribforge::cmd_compare(config);
    if (report->parsed()) attribforge::cmd_report(config);
    return 0;
  } catch (const attribforge::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const attribforge::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
