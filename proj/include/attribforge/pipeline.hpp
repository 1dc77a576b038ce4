#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "attribforge/config.hpp"
#include "attribforge/cross_validation.hpp"
#include "attribforge/dataset.hpp"
#include "attribforge/errors.hpp"
#include "attribforge/folds.hpp"
#include "attribforge/ga.hpp"
#include "attribforge/shapley.hpp"

namespace attribforge {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

inline void write_json(const std::filesystem::path& path, const Json& value) {
  write_text(path, value.dump(2) + "\n");
}

inline Json read_json_if_exists(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return nullptr;
  Json value;
  in >> value;
  return value;
}

// Wall-clock phase timings land in their own file, outside the determinism
// contract; every other artifact is byte-stable for a fixed config and seed.
class PhaseTimer {
 public:
  explicit PhaseTimer(std::string command) : command_(std::move(command)) {}

  template <typename Fn>
  auto time(const std::string& phase, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      record(phase, start);
    } else {
      auto result = fn();
      record(phase, start);
      return result;
    }
  }

  void write(const std::filesystem::path& out_dir) const {
    Json j;
    j["command"] = command_;
    Json phases = Json::object();
    for (const auto& [phase, seconds] : phases_) phases[phase] = seconds;
    j["seconds"] = phases;
    write_json(out_dir / "timings.json", j);
  }

 private:
  void record(const std::string& phase,
              std::chrono::steady_clock::time_point start) {
    const std::chrono::duration<double> elapsed =
        std::chrono::steady_clock::now() - start;
    phases_.emplace_back(phase, elapsed.count());
  }

  std::string command_;
  std::vector<std::pair<std::string, double>> phases_;
};

struct IngestResult {
  EncodedDataset data;
  Schema schema;  // post-imputation roles (40%-missing columns flip to drop)
  PreprocessReport report;
};

// load -> filter -> impute -> encode_and_scale.
inline IngestResult pipeline_ingest(const RunConfig& config) {
  IngestResult result;
  const RawTable raw = load_csv(config.input);
  result.report.rows_in = raw.rows.size();
  result.schema = resolve_schema(raw, config.schema);
  const RawTable filtered =
      filter_min_ratings(raw, result.schema, config.min_ratings, &result.report);
  const RawTable imputed = impute_missing(filtered, result.schema, &result.report);
  result.data = encode_and_scale(imputed, result.schema);
  return result;
}

inline Json preprocess_report_json(const RunConfig& config,
                                   const PreprocessReport& report) {
  Json j;
  j["config"] = config.echo();
  j["rows_in"] = report.rows_in;
  j["rows_dropped_unparseable_count"] = report.rows_dropped_bad_count;
  j["rows_dropped_below_threshold"] = report.rows_dropped_below_threshold;
  j["rows_after_filter"] = report.rows_after_filter;
  j["rows_dropped_missing_target"] = report.rows_dropped_missing_target;
  j["rows_after_impute"] = report.rows_after_impute;
  Json dropped = Json::array();
  for (const auto& [column, reason] : report.dropped_columns)
    dropped.push_back({{"column", column}, {"reason", reason}});
  j["dropped_columns"] = dropped;
  Json imputed = Json::array();
  for (const auto& [column, cells] : report.imputed_cells)
    imputed.push_back({{"column", column}, {"cells", cells}});
  j["imputed_cells"] = imputed;
  return j;
}

inline Json summary_json(const RunConfig& config, const EncodedDataset& data) {
  Json j;
  j["config"] = config.echo();
  j["rows"] = data.rows();
  j["features"] = data.features();
  Json columns = Json::array();
  for (std::size_t f = 0; f < data.features(); ++f) {
    Json c;
    c["name"] = data.feature_names[f];
    if (data.feature_kinds[f] == ColumnKind::numeric) {
      std::vector<double> values(data.rows());
      for (std::size_t r = 0; r < data.rows(); ++r) values[r] = data.X_pre(r, f);
      const ColumnStats stats = numeric_stats(data.feature_names[f], values);
      c["kind"] = "numeric";
      c["mean"] = stats.mean;
      c["mode"] = stats.mode;
      c["median"] = stats.median;
      c["dispersion"] = stats.dispersion;
      c["min"] = stats.min;
      c["max"] = stats.max;
      c["distinct"] = stats.distinct;
    } else {
      std::vector<std::string> values(data.rows());
      for (std::size_t r = 0; r < data.rows(); ++r) values[r] = data.raw_values[r][f];
      const ColumnStats stats = categorical_stats(data.feature_names[f], values);
      c["kind"] = "categorical";
      c["mode"] = stats.mode;
      c["dispersion"] = stats.dispersion;
      c["distinct"] = stats.distinct;
    }
    columns.push_back(c);
  }
  j["columns"] = columns;
  const ColumnStats mix = numeric_stats("mix_rating", data.y);
  j["mix_rating"] = {{"mean", mix.mean},   {"mode", mix.mode},
                     {"median", mix.median}, {"dispersion", mix.dispersion},
                     {"min", mix.min},     {"max", mix.max}};
  return j;
}

inline void cmd_ingest(const RunConfig& config) {
  PhaseTimer timer("ingest");
  const IngestResult result = timer.time("ingest", [&] { return pipeline_ingest(config); });
  write_json(config.out / "preprocessing_report.json",
             preprocess_report_json(config, result.report));
  write_json(config.out / "summary.json", summary_json(config, result.data));
  timer.write(config.out);
}

namespace detail {

inline Json metric_json(const MetricTriple& triple) {
  return {{"mse", triple.mse}, {"rmse", triple.rmse}, {"mae", triple.mae}};
}

inline Json subset_json(std::size_t rank, const Individual& individual,
                        const std::vector<std::string>& feature_names) {
  Json features = Json::array();
  for (const std::size_t f : individual.mask.selected())
    features.push_back(feature_names[f]);
  return {{"rank", rank},
          {"mask", individual.mask.to_string()},
          {"size", individual.mask.count()},
          {"features", features},
          {"metrics", metric_json(individual.fitness)}};
}

// Applies the once-per-run (C, gamma) tuning when enabled; returns the spec
// used for fitness evaluation.
inline RegressorSpec tuned_spec(const RunConfig& config, const EncodedDataset& data,
                                const FoldPlan& plan, const CvOptions& cv,
                                Json* tuned_out) {
  RegressorSpec spec = config.model;
  if (config.tune_svr && spec.kind == ModelKind::svr && !config.per_mask_tuning) {
    const HyperGenome genome = tune_svr(data, Mask(data.features(), true),
                                        config.ga, plan, spec, {}, cv);
    spec.hyperparams["c"] = genome.c;
    spec.hyperparams["gamma"] = genome.gamma;
    if (tuned_out) *tuned_out = {{"c", genome.c}, {"gamma", genome.gamma}};
  }
  return spec;
}

inline GAResult run_selection(const RunConfig& config, const EncodedDataset& data,
                              const FoldPlan& plan, const RegressorSpec& spec,
                              const CvOptions& cv) {
  if (config.per_mask_tuning && spec.kind == ModelKind::svr) {
    // Tune (C, gamma) inside every mask evaluation. Costly; off by default.
    return run_ga_with_fitness(data.features(), config.ga, [&](const Mask& mask) {
      const HyperGenome genome =
          tune_svr(data, mask, config.ga, plan, spec, {}, cv);
      RegressorSpec masked_spec = spec;
      masked_spec.hyperparams["c"] = genome.c;
      masked_spec.hyperparams["gamma"] = genome.gamma;
      return cross_validate(data, mask, masked_spec, plan, cv);
    });
  }
  return run_ga(data, spec, config.ga, plan, cv);
}

}  // namespace detail

inline Json subsets_json(const RunConfig& config, const EncodedDataset& data,
                         const GAResult& ga, const RegressorSpec& spec,
                         const Json& tuned) {
  Json j;
  j["config"] = config.echo();
  j["feature_names"] = data.feature_names;
  j["model"] = {{"kind", to_string(spec.kind)}, {"seed", spec.seed}};
  for (const auto& [key, value] : spec.hyperparams) j["model"][key] = value;
  if (!tuned.is_null()) j["tuned"] = tuned;
  j["evaluations"] = ga.evaluations;
  Json subsets = Json::array();
  for (std::size_t i = 0; i < ga.top.size(); ++i)
    subsets.push_back(detail::subset_json(i + 1, ga.top[i], data.feature_names));
  j["subsets"] = subsets;
  return j;
}

inline std::string progress_jsonl(const GAResult& ga) {
  std::string out;
  for (const auto& entry : ga.progress) {
    Json line = {{"generation", entry.generation},
                 {"best_mae", entry.best_mae},
                 {"mean_mae", entry.mean_mae}};
    out += line.dump() + "\n";
  }
  return out;
}

inline void cmd_select(const RunConfig& config) {
  PhaseTimer timer("select");
  const IngestResult ingest = timer.time("ingest", [&] { return pipeline_ingest(config); });
  const FoldPlan plan = make_folds(ingest.data.rows(), config.folds, config.seed);
  const CvOptions cv{config.per_fold_scaling, 1};

  Json tuned;
  const RegressorSpec spec = timer.time("tune", [&] {
    return detail::tuned_spec(config, ingest.data, plan, cv, &tuned);
  });
  const GAResult ga = timer.time("ga", [&] {
    return detail::run_selection(config, ingest.data, plan, spec, cv);
  });

  write_json(config.out / "subsets.json",
             subsets_json(config, ingest.data, ga, spec, tuned));
  write_text(config.out / "ga_progress.jsonl", progress_jsonl(ga));
  timer.write(config.out);
}

// Re-reads subsets.json, refits the selection model on the full dataset
// restricted to the chosen mask, and emits all attribution artifacts.
inline void cmd_explain(const RunConfig& config, std::size_t subset_index) {
  PhaseTimer timer("explain");
  const IngestResult ingest = timer.time("ingest", [&] { return pipeline_ingest(config); });
  const EncodedDataset& data = ingest.data;

  const Json subsets = read_json_if_exists(config.out / "subsets.json");
  if (subsets.is_null())
    throw DataError("explain: " + (config.out / "subsets.json").string() +
                    " not found; run select first");
  const auto& list = subsets.at("subsets");
  if (subset_index < 1 || subset_index > list.size())
    throw DataError("explain: subset index " + std::to_string(subset_index) +
                    " out of range 1.." + std::to_string(list.size()));
  const Json& chosen = list.at(subset_index - 1);
  const Mask mask = Mask::from_string(chosen.at("mask").get<std::string>());
  if (mask.size() != data.features())
    throw DataError("explain: subsets.json does not match the current dataset");

  RegressorSpec spec;
  spec.kind = model_kind_from_string(subsets.at("model").at("kind").get<std::string>());
  spec.seed = subsets.at("model").at("seed").get<std::uint64_t>();
  for (const auto& [key, value] : subsets.at("model").items())
    if (key != "kind" && key != "seed") spec.hyperparams[key] = value.get<double>();

  const std::vector<std::size_t> columns = mask.selected();
  const Matrix X = data.X.select_columns(columns);
  std::vector<std::string> names;
  std::vector<ColumnKind> kinds;
  std::vector<std::vector<std::string>> raw(data.rows());
  for (const std::size_t c : columns) {
    names.push_back(data.feature_names[c]);
    kinds.push_back(data.feature_kinds[c]);
  }
  for (std::size_t r = 0; r < data.rows(); ++r)
    for (const std::size_t c : columns) raw[r].push_back(data.raw_values[r][c]);

  const TrainedModel model =
      timer.time("fit", [&] { return fit(spec, X, data.y); });
  const BackgroundSet background =
      sample_background(X, config.shap_background, config.seed);
  ShapOptions options;
  options.mode = config.shap_mode;
  options.exact_cap = config.shap_exact_cap;
  options.permutations = config.shap_permutations;
  options.seed = config.seed;
  options.threads = config.threads;
  const ShapMatrix shap = timer.time("shap", [&] {
    return shap_matrix(model, X, background, names, options);
  });

  // shap_matrix.csv: base value header line, then one row of contributions
  // per product.
  std::string csv = "base_value," + format_double(shap.base_value) + "\n";
  csv += "row";
  for (const auto& name : names) csv += "," + csv_field(name);
  csv += "\n";
  for (std::size_t r = 0; r < data.rows(); ++r) {
    csv += std::to_string(r);
    for (std::size_t j = 0; j < columns.size(); ++j)
      csv += "," + format_double(shap.values(r, j));
    csv += "\n";
  }
  write_text(config.out / "shap_matrix.csv", csv);

  const std::vector<RankedFeature> ranked = rank_features(shap);
  Json ranking;
  ranking["config"] = config.echo();
  ranking["subset"] = subset_index;
  ranking["mask"] = mask.to_string();
  ranking["base_value"] = shap.base_value;
  Json order = Json::array();
  for (const auto& feature : ranked)
    order.push_back({{"feature", feature.name},
                     {"mean_abs_shap", feature.mean_abs_shap}});
  ranking["ranking"] = order;
  write_json(config.out / "ranking.json", ranking);

  const SpecImportanceTable table = spec_importance(shap, raw, kinds);
  Json spec_json;
  spec_json["config"] = config.echo();
  spec_json["subset"] = subset_index;
  Json features = Json::array();
  for (const auto& feature : table.features) {
    Json entries = Json::array();
    for (const auto& entry : feature.entries)
      entries.push_back({{"value", entry.value},
                         {"mean_shap", entry.mean_shap},
                         {"support", entry.support}});
    features.push_back({{"feature", feature.feature},
                        {"binned", feature.binned},
                        {"entries", entries}});
  }
  spec_json["features"] = features;
  write_json(config.out / "spec_importance.json", spec_json);

  beeswarm_export(shap, X, config.out / "beeswarm.csv",
                  config.out / "beeswarm.svg");
  timer.write(config.out);
}

// Wrapper-vs-standalone comparison with one shared fold plan, so both arms
// of every model see identical folds.
inline void cmd_compare(const RunConfig& config) {
  PhaseTimer timer("compare");
  const IngestResult ingest = timer.time("ingest", [&] { return pipeline_ingest(config); });
  const EncodedDataset& data = ingest.data;
  const FoldPlan plan = make_folds(data.rows(), config.folds, config.seed);
  const CvOptions cv{config.per_fold_scaling, 1};
  const Mask all_features(data.features(), true);

  Json rows = Json::array();
  std::string csv =
      "model,wrapper_mse,standalone_mse,wrapper_rmse,standalone_rmse,"
      "wrapper_mae,standalone_mae,wrapper_mask\n";
  for (const ModelKind kind : config.compare_models) {
    RegressorSpec spec = config.model;
    spec.kind = kind;
    if (kind != config.model.kind) spec.hyperparams.clear();
    Json tuned;
    const RegressorSpec run_spec = (kind == ModelKind::svr)
        ? detail::tuned_spec(config, data, plan, cv, &tuned)
        : spec;

    const GAResult ga = timer.time(std::string("ga_") + to_string(kind), [&] {
      RunConfig ga_config = config;
      ga_config.model = run_spec;
      return detail::run_selection(ga_config, data, plan, run_spec, cv);
    });
    const Individual& best = ga.top.front();
    const MetricTriple standalone = cross_validate(data, all_features, run_spec, plan, cv);

    Json row;
    row["model"] = to_string(kind);
    row["wrapper"] = detail::metric_json(best.fitness);
    row["wrapper"]["mask"] = best.mask.to_string();
    Json features = Json::array();
    for (const std::size_t f : best.mask.selected())
      features.push_back(data.feature_names[f]);
    row["wrapper"]["features"] = features;
    row["standalone"] = detail::metric_json(standalone);
    if (!tuned.is_null()) row["tuned"] = tuned;
    rows.push_back(row);

    csv += std::string(to_string(kind)) + "," + format_double(best.fitness.mse) +
           "," + format_double(standalone.mse) + "," +
           format_double(best.fitness.rmse) + "," + format_double(standalone.rmse) +
           "," + format_double(best.fitness.mae) + "," +
           format_double(standalone.mae) + "," + best.mask.to_string() + "\n";
  }

  Json j;
  j["config"] = config.echo();
  j["folds"] = config.folds;
  j["rows"] = rows;
  write_json(config.out / "comparison.json", j);
  write_text(config.out / "comparison.csv", csv);
  timer.write(config.out);
}

// Bundles whatever artifacts exist in the output directory into one report.
inline void cmd_report(const RunConfig& config) {
  Json j;
  j["config"] = config.echo();
  j["seed"] = config.seed;
  j["preprocessing"] = read_json_if_exists(config.out / "preprocessing_report.json");
  j["summary"] = read_json_if_exists(config.out / "summary.json");
  j["subsets"] = read_json_if_exists(config.out / "subsets.json");
  j["ranking"] = read_json_if_exists(config.out / "ranking.json");
  j["spec_importance"] = read_json_if_exists(config.out / "spec_importance.json");
  j["comparison"] = read_json_if_exists(config.out / "comparison.json");
  j["timings_file"] = "timings.json";  // wall-clock lives outside this report
  write_json(config.out / "run_report.json", j);
}

}  // namespace attribforge
