#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "attribforge/config.hpp"
#include "attribforge/pipeline.hpp"

using namespace attribforge;
namespace fs = std::filesystem;

namespace {

const char* kMiniCsv = AF_TEST_DATA_DIR "/mini_laptops.csv";

std::string config_text(const fs::path& out, const std::string& extra = "") {
  std::ostringstream cfg;
  cfg << "[dataset]\n"
      << "input = " << kMiniCsv << "\n"
      << "min_ratings = 10\n"
      << "[schema]\n"
      << "Ratings = numeric:rating_count\n"
      << "Stars = numeric:star_rating\n"
      << "Brand = categorical:feature\n"
      << "[model]\n"
      << "kind = knn\n"
      << "k = 3\n"
      << "[ga]\n"
      << "population = 12\n"
      << "generations = 5\n"
      << "top_k = 3\n"
      << "[run]\n"
      << "seed = 42\n"
      << "folds = 5\n"
      << "out = " << out.string() << "\n"
      << extra;
  return cfg.str();
}

RunConfig make_config(const fs::path& out, const std::string& extra = "") {
  RunConfig config = RunConfig::from_kv(KvConfig::parse_string(config_text(out, extra)));
  config.finalize();
  return config;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config files parse sections, kinds and roles") {
  const KvConfig kv = KvConfig::parse_string(
      "# comment\n[dataset]\ninput = a.csv\n[schema]\nRAM Size = numeric:feature\n"
      "Stars = star_rating\n[model]\nkind = svr\nc = 2.5\n");
  REQUIRE(kv.get("dataset", "input") == "a.csv");
  RunConfig config = RunConfig::from_kv(kv);
  REQUIRE(config.schema.size() == 2);
  REQUIRE(config.schema[0].name == "RAM Size");
  REQUIRE(config.schema[0].kind == ColumnKind::numeric);
  REQUIRE(config.schema[1].role == ColumnRole::star_rating);
  REQUIRE(config.model.kind == ModelKind::svr);
  REQUIRE(config.model.hyperparams.at("c") == 2.5);

  REQUIRE_THROWS_AS(KvConfig::parse_string("novalue\n"), DataError);
  REQUIRE_THROWS_AS(
      RunConfig::from_kv(KvConfig::parse_string("[schema]\nx = nonsense\n")),
      DataError);
}

TEST_CASE("ingest filters, imputes and reports") {
  TempDir dir("af_ingest_test");
  const RunConfig config = make_config(dir.path);
  const IngestResult result = pipeline_ingest(config);

  // The sparse column exceeds the 40% missing rule and is dropped.
  bool sparse_dropped = false;
  for (const auto& [column, reason] : result.report.dropped_columns)
    sparse_dropped |= column == "Sparse";
  REQUIRE(sparse_dropped);
  for (const auto& name : result.data.feature_names) REQUIRE(name != "Sparse");

  REQUIRE(result.report.rows_after_filter > 0);
  REQUIRE(result.report.rows_after_filter < result.report.rows_in);
  REQUIRE(result.data.rows() == result.report.rows_after_impute);
  for (std::size_t r = 0; r < result.data.rows(); ++r)
    for (std::size_t c = 0; c < result.data.features(); ++c) {
      REQUIRE(result.data.X(r, c) >= 0.0);
      REQUIRE(result.data.X(r, c) <= 1.0);
    }

  cmd_ingest(config);
  const Json report = read_json_if_exists(dir.path / "preprocessing_report.json");
  REQUIRE(!report.is_null());
  REQUIRE(report.at("rows_in").get<std::size_t>() == 50);
  REQUIRE(report.at("config").at("run").at("seed").get<int>() == 42);
  const Json summary = read_json_if_exists(dir.path / "summary.json");
  REQUIRE(summary.at("rows").get<std::size_t>() == result.data.rows());
}

TEST_CASE("ingest on an already-clean table imputes nothing") {
  TempDir dir("af_clean_test");
  const fs::path csv = dir.path / "clean.csv";
  write_text(csv, "Ratings,Stars,a,b\n20,4.0,1,x\n30,4.5,2,y\n40,3.5,3,x\n");
  RunConfig config = make_config(dir.path);
  config.input = csv;
  config.schema = {{"Ratings", ColumnKind::numeric, ColumnRole::rating_count},
                   {"Stars", ColumnKind::numeric, ColumnRole::star_rating}};
  const IngestResult result = pipeline_ingest(config);
  REQUIRE(result.report.imputed_cells.empty());
  REQUIRE(result.report.dropped_columns.empty());
  REQUIRE(result.data.rows() == 3);
}

TEST_CASE("missing target column is a schema error") {
  TempDir dir("af_schema_err");
  const fs::path csv = dir.path / "no_stars.csv";
  write_text(csv, "Ratings,a\n20,1\n");
  RunConfig config = make_config(dir.path);
  config.input = csv;
  config.schema = {{"Ratings", ColumnKind::numeric, ColumnRole::rating_count}};
  REQUIRE_THROWS_AS(pipeline_ingest(config), DataError);
}

TEST_CASE("select emits deterministic subsets and a monotone progress log") {
  TempDir dir("af_select_test");
  const RunConfig config = make_config(dir.path);
  cmd_select(config);
  const std::string subsets_a = slurp(dir.path / "subsets.json");
  const std::string progress_a = slurp(dir.path / "ga_progress.jsonl");
  cmd_select(config);
  REQUIRE(slurp(dir.path / "subsets.json") == subsets_a);
  REQUIRE(slurp(dir.path / "ga_progress.jsonl") == progress_a);

  const Json subsets = Json::parse(subsets_a);
  REQUIRE(subsets.at("subsets").size() == 3);
  double previous = 0.0;
  for (const auto& entry : subsets.at("subsets")) {
    const double mae = entry.at("metrics").at("mae").get<double>();
    REQUIRE(mae >= previous);
    previous = mae;
  }

  double best = 1e300;
  std::istringstream lines(progress_a);
  std::string line;
  while (std::getline(lines, line)) {
    const Json entry = Json::parse(line);
    const double current = entry.at("best_mae").get<double>();
    REQUIRE(current <= best + 1e-15);
    best = current;
  }
}

TEST_CASE("explain writes aligned attribution artifacts") {
  TempDir dir("af_explain_test");
  const RunConfig config = make_config(dir.path);
  cmd_select(config);
  cmd_explain(config, 1);

  const Json ranking = read_json_if_exists(dir.path / "ranking.json");
  REQUIRE(!ranking.is_null());
  const Json subsets = read_json_if_exists(dir.path / "subsets.json");
  const std::string mask = subsets.at("subsets").at(0).at("mask").get<std::string>();
  REQUIRE(ranking.at("mask").get<std::string>() == mask);
  const std::size_t selected = Mask::from_string(mask).count();
  REQUIRE(ranking.at("ranking").size() == selected);

  const Json spec_table = read_json_if_exists(dir.path / "spec_importance.json");
  REQUIRE(spec_table.at("features").size() == selected);

  // shap_matrix.csv: base_value line + header + one line per row.
  std::istringstream csv(slurp(dir.path / "shap_matrix.csv"));
  std::string line;
  std::getline(csv, line);
  REQUIRE(line.rfind("base_value,", 0) == 0);
  std::getline(csv, line);
  std::size_t data_lines = 0;
  while (std::getline(csv, line))
    if (!line.empty()) ++data_lines;
  const IngestResult ingest = pipeline_ingest(config);
  REQUIRE(data_lines == ingest.data.rows());

  REQUIRE(fs::exists(dir.path / "beeswarm.csv"));
  REQUIRE(fs::exists(dir.path / "beeswarm.svg"));

  // Re-running explain reproduces the artifacts byte for byte.
  const std::string ranking_bytes = slurp(dir.path / "ranking.json");
  const std::string shap_bytes = slurp(dir.path / "shap_matrix.csv");
  cmd_explain(config, 1);
  REQUIRE(slurp(dir.path / "ranking.json") == ranking_bytes);
  REQUIRE(slurp(dir.path / "shap_matrix.csv") == shap_bytes);

  REQUIRE_THROWS_AS(cmd_explain(config, 99), DataError);
}

TEST_CASE("compare pairs folds and shows no wrapper handicap") {
  TempDir dir("af_compare_test");
  RunConfig config = make_config(dir.path, "compare_models = knn\n");
  config.compare_models = {ModelKind::knn};
  cmd_compare(config);
  const Json comparison = read_json_if_exists(dir.path / "comparison.json");
  REQUIRE(comparison.at("rows").size() == 1);
  const Json& row = comparison.at("rows").at(0);
  REQUIRE(row.at("model").get<std::string>() == "knn");
  const double wrapper = row.at("wrapper").at("mae").get<double>();
  const double standalone = row.at("standalone").at("mae").get<double>();
  // Both arms share one fold plan; on this small mask space the search
  // covers enough of it that its best cannot trail the all-features arm.
  REQUIRE(wrapper <= standalone + 1e-9);

  const std::string csv = slurp(dir.path / "comparison.csv");
  REQUIRE(csv.rfind("model,", 0) == 0);
  REQUIRE(csv.find("knn,") != std::string::npos);
}

TEST_CASE("report bundles emitted artifacts") {
  TempDir dir("af_report_test");
  const RunConfig config = make_config(dir.path);
  cmd_ingest(config);
  cmd_select(config);
  cmd_report(config);
  const Json report = read_json_if_exists(dir.path / "run_report.json");
  REQUIRE(!report.is_null());
  REQUIRE(report.at("seed").get<int>() == 42);
  REQUIRE(!report.at("subsets").is_null());
  REQUIRE(report.at("comparison").is_null());  // compare never ran
  REQUIRE(report.at("timings_file").get<std::string>() == "timings.json");
}

TEST_CASE("cli binary maps errors to exit codes") {
  TempDir dir("af_cli_test");
  const fs::path cfg = dir.path / "run.cfg";
  write_text(cfg, config_text(dir.path / "out"));

  const std::string base = std::string(AF_CLI_PATH) + " --config " + cfg.string();
  REQUIRE(std::system((base + " ingest > /dev/null 2>&1").c_str()) == 0);

  const int usage = std::system((std::string(AF_CLI_PATH) + " frobnicate > /dev/null 2>&1").c_str());
  REQUIRE(WEXITSTATUS(usage) == 1);

  const fs::path bad_cfg = dir.path / "bad.cfg";
  write_text(bad_cfg, "[dataset]\ninput = /nonexistent.csv\n[schema]\nRatings = rating_count\nStars = star_rating\n");
  const int data_err = std::system(
      (std::string(AF_CLI_PATH) + " --config " + bad_cfg.string() + " ingest > /dev/null 2>&1").c_str());
  REQUIRE(WEXITSTATUS(data_err) == 2);
}
