#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "attribforge/csv.hpp"
#include "attribforge/dataset.hpp"
#include "attribforge/errors.hpp"
#include "attribforge/ga.hpp"
#include "attribforge/model.hpp"
#include "attribforge/shapley.hpp"

namespace attribforge {

using Json = nlohmann::ordered_json;

// Plain-text `key = value` config split into [section]s. Keys may contain
// spaces (column names); the first '=' separates key from value. Lines
// starting with '#' or ';' are comments.
class KvConfig {
 public:
  static KvConfig parse_string(const std::string& text) {
    KvConfig config;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string stripped = trim(line);
      if (stripped.empty() || stripped[0] == '#' || stripped[0] == ';') continue;
      if (stripped.front() == '[') {
        if (stripped.back() != ']')
          throw DataError("config line " + std::to_string(line_no) +
                          ": unterminated section header");
        section = trim(stripped.substr(1, stripped.size() - 2));
        config.sections_[section];  // record even if empty
        continue;
      }
      const auto eq = stripped.find('=');
      if (eq == std::string::npos)
        throw DataError("config line " + std::to_string(line_no) +
                        ": expected key = value");
      config.sections_[section].emplace_back(trim(stripped.substr(0, eq)),
                                             trim(stripped.substr(eq + 1)));
    }
    return config;
  }

  static KvConfig parse_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
  }

  std::optional<std::string> get(const std::string& section,
                                 const std::string& key) const {
    const auto it = sections_.find(section);
    if (it == sections_.end()) return std::nullopt;
    for (const auto& [k, v] : it->second)
      if (k == key) return v;
    return std::nullopt;
  }

  const std::vector<std::pair<std::string, std::string>>& section(
      const std::string& name) const {
    static const std::vector<std::pair<std::string, std::string>> empty;
    const auto it = sections_.find(name);
    return it == sections_.end() ? empty : it->second;
  }

 private:
  std::map<std::string, std::vector<std::pair<std::string, std::string>>>
      sections_;
};

namespace detail {

inline double config_number(const std::string& section, const std::string& key,
                            const std::string& value) {
  double out;
  if (!parse_double(value, out))
    throw DataError("config [" + section + "] " + key +
                    ": expected a number, got '" + value + "'");
  return out;
}

inline bool config_bool(const std::string& section, const std::string& key,
                        const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw DataError("config [" + section + "] " + key +
                  ": expected true/false, got '" + value + "'");
}

inline ColumnKind parse_kind(const std::string& token) {
  if (token == "categorical") return ColumnKind::categorical;
  if (token == "numeric") return ColumnKind::numeric;
  if (token == "auto") return ColumnKind::automatic;
  throw DataError("schema: unknown column kind '" + token + "'");
}

inline ColumnRole parse_role(const std::string& token) {
  if (token == "feature") return ColumnRole::feature;
  if (token == "rating_count") return ColumnRole::rating_count;
  if (token == "star_rating") return ColumnRole::star_rating;
  if (token == "drop") return ColumnRole::drop;
  throw DataError("schema: unknown column role '" + token + "'");
}

}  // namespace detail

// Everything one run needs, resolved from the config file plus CLI
// overrides. The JSON echo of this struct is embedded in every artifact so
// any report can be reproduced from itself.
struct RunConfig {
  std::filesystem::path input;
  Schema schema;
  long long min_ratings = 10;

  RegressorSpec model;
  GAConfig ga;
  std::size_t folds = 10;
  std::uint64_t seed = 42;
  std::filesystem::path out = "attrib-forge-out";
  std::size_t threads = 1;

  bool per_fold_scaling = false;
  bool tune_svr = false;       // tune (C, gamma) once on all features
  bool per_mask_tuning = false;  // tune per evaluated mask (slow)

  std::size_t shap_background = 100;
  std::size_t shap_permutations = 2048;
  std::size_t shap_exact_cap = 15;
  ShapMode shap_mode = ShapMode::automatic;

  std::vector<ModelKind> compare_models = {ModelKind::knn, ModelKind::svr,
                                           ModelKind::dtree, ModelKind::mlp,
                                           ModelKind::rforest};

  static RunConfig from_file(const std::filesystem::path& path) {
    return from_kv(KvConfig::parse_file(path));
  }

  static RunConfig from_kv(const KvConfig& kv) {
    RunConfig config;
    using detail::config_bool;
    using detail::config_number;

    if (const auto v = kv.get("dataset", "input")) config.input = *v;
    if (const auto v = kv.get("dataset", "min_ratings"))
      config.min_ratings =
          static_cast<long long>(config_number("dataset", "min_ratings", *v));

    for (const auto& [column, value] : kv.section("schema")) {
      ColumnSchema entry{column, ColumnKind::automatic, ColumnRole::feature};
      std::istringstream tokens(value);
      std::string token;
      while (std::getline(tokens, token, ':')) {
        const std::string t = trim(token);
        if (t == "categorical" || t == "numeric" || t == "auto")
          entry.kind = detail::parse_kind(t);
        else
          entry.role = detail::parse_role(t);
      }
      config.schema.push_back(entry);
    }

    for (const auto& [key, value] : kv.section("model")) {
      if (key == "kind") config.model.kind = model_kind_from_string(value);
      else config.model.hyperparams[key] = config_number("model", key, value);
    }

    if (const auto v = kv.get("ga", "population"))
      config.ga.population = static_cast<std::size_t>(config_number("ga", "population", *v));
    if (const auto v = kv.get("ga", "generations"))
      config.ga.generations = static_cast<std::size_t>(config_number("ga", "generations", *v));
    if (const auto v = kv.get("ga", "crossover_rate"))
      config.ga.crossover_rate = config_number("ga", "crossover_rate", *v);
    if (const auto v = kv.get("ga", "mutation_rate"))
      config.ga.mutation_rate = config_number("ga", "mutation_rate", *v);
    if (const auto v = kv.get("ga", "top_k"))
      config.ga.top_k = static_cast<std::size_t>(config_number("ga", "top_k", *v));

    if (const auto v = kv.get("shapley", "background"))
      config.shap_background = static_cast<std::size_t>(config_number("shapley", "background", *v));
    if (const auto v = kv.get("shapley", "permutations"))
      config.shap_permutations = static_cast<std::size_t>(config_number("shapley", "permutations", *v));
    if (const auto v = kv.get("shapley", "exact_cap"))
      config.shap_exact_cap = static_cast<std::size_t>(config_number("shapley", "exact_cap", *v));
    if (const auto v = kv.get("shapley", "mode")) {
      if (*v == "auto") config.shap_mode = ShapMode::automatic;
      else if (*v == "exact") config.shap_mode = ShapMode::exact;
      else if (*v == "sampled") config.shap_mode = ShapMode::sampled;
      else throw DataError("config [shapley] mode: expected auto/exact/sampled");
    }

    if (const auto v = kv.get("run", "seed"))
      config.seed = static_cast<std::uint64_t>(config_number("run", "seed", *v));
    if (const auto v = kv.get("run", "folds"))
      config.folds = static_cast<std::size_t>(config_number("run", "folds", *v));
    if (const auto v = kv.get("run", "out")) config.out = *v;
    if (const auto v = kv.get("run", "threads"))
      config.threads = static_cast<std::size_t>(config_number("run", "threads", *v));
    if (const auto v = kv.get("run", "per_fold_scaling"))
      config.per_fold_scaling = config_bool("run", "per_fold_scaling", *v);
    if (const auto v = kv.get("run", "tune_svr"))
      config.tune_svr = config_bool("run", "tune_svr", *v);
    if (const auto v = kv.get("run", "per_mask_tuning"))
      config.per_mask_tuning = config_bool("run", "per_mask_tuning", *v);
    if (const auto v = kv.get("run", "compare_models")) {
      config.compare_models.clear();
      std::istringstream names(*v);
      std::string name;
      while (std::getline(names, name, ','))
        config.compare_models.push_back(model_kind_from_string(trim(name)));
    }

    if (config.out.empty()) {
      if (const char* env = std::getenv("ATTRIB_FORGE_OUT")) config.out = env;
    }
    return config;
  }

  // Seeds and thread counts propagate to the sub-configs late so CLI
  // overrides of --seed or --threads reach every stage.
  void finalize() {
    ga.seed = seed;
    ga.threads = threads;
    model.seed = seed;
    if (out.empty()) {
      if (const char* env = std::getenv("ATTRIB_FORGE_OUT")) out = env;
      if (out.empty()) out = "attrib-forge-out";
    }
  }

  Json echo() const {
    Json j;
    j["dataset"]["input"] = input.string();
    j["dataset"]["min_ratings"] = min_ratings;
    Json schema_json = Json::object();
    for (const auto& entry : schema) {
      const char* kind = entry.kind == ColumnKind::categorical ? "categorical"
                         : entry.kind == ColumnKind::numeric   ? "numeric"
                                                               : "auto";
      const char* role = entry.role == ColumnRole::feature        ? "feature"
                         : entry.role == ColumnRole::rating_count ? "rating_count"
                         : entry.role == ColumnRole::star_rating  ? "star_rating"
                                                                  : "drop";
      schema_json[entry.name] = std::string(kind) + ":" + role;
    }
    j["schema"] = schema_json;
    j["model"]["kind"] = to_string(model.kind);
    for (const auto& [key, value] : model.hyperparams) j["model"][key] = value;
    j["ga"]["population"] = ga.population;
    j["ga"]["generations"] = ga.generations;
    j["ga"]["crossover_rate"] = ga.crossover_rate;
    j["ga"]["mutation_rate"] = ga.mutation_rate;
    j["ga"]["top_k"] = ga.top_k;
    j["shapley"]["background"] = shap_background;
    j["shapley"]["permutations"] = shap_permutations;
    j["shapley"]["exact_cap"] = shap_exact_cap;
    j["shapley"]["mode"] = shap_mode == ShapMode::automatic ? "auto"
                           : shap_mode == ShapMode::exact   ? "exact"
                                                            : "sampled";
    j["run"]["seed"] = seed;
    j["run"]["folds"] = folds;
    j["run"]["out"] = out.string();
    j["run"]["threads"] = threads;
    j["run"]["per_fold_scaling"] = per_fold_scaling;
    j["run"]["tune_svr"] = tune_svr;
    j["run"]["per_mask_tuning"] = per_mask_tuning;
    Json names = Json::array();
    for (const ModelKind kind : compare_models) names.push_back(to_string(kind));
    j["run"]["compare_models"] = names;
    return j;
  }
};

}  // namespace attribforge
