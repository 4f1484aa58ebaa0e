#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sempaste/errors.hpp"
#include "sempaste/pipeline.hpp"

namespace sempaste {

namespace {

template <typename T>
void read_field(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

AugmentationConfig AugmentationConfig::from_json(const Json& j) {
  AugmentationConfig c;
  read_field(j, "strategy", c.strategy);
  read_field(j, "top_n", c.top_n);
  read_field(j, "metric", c.metric);
  read_field(j, "aggregation", c.aggregation);
  read_field(j, "counter_init", c.counter_init);
  read_field(j, "ap_table_path", c.ap_table_path);
  if (j.contains("scale_range")) {
    auto r = j.at("scale_range").get<std::vector<double>>();
    if (r.size() != 2) throw ConfigError("scale_range must be [lo, hi]");
    c.scale_lo = r[0];
    c.scale_hi = r[1];
  }
  if (j.contains("area_bounds")) {
    auto r = j.at("area_bounds").get<std::vector<std::int64_t>>();
    if (r.size() != 2) throw ConfigError("area_bounds must be [min, max]");
    c.area_min = r[0];
    c.area_max = r[1];
  }
  read_field(j, "epsilon_frac", c.epsilon_frac);
  read_field(j, "objects_per_image", c.objects_per_image);
  read_field(j, "blending", c.blending);
  read_field(j, "visibility_threshold", c.visibility_threshold);
  read_field(j, "max_retries", c.max_retries);
  read_field(j, "seed", c.seed);
  read_field(j, "epoch_base", c.epoch_base);
  read_field(j, "epochs", c.epochs);
  read_field(j, "probability", c.probability);
  read_field(j, "workers", c.workers);
  read_field(j, "embedding_path", c.embedding_path);
  read_field(j, "embedding_dim", c.embedding_dim);
  if (j.contains("substitutions"))
    for (const auto& [k, v] : j.at("substitutions").items())
      c.substitutions[lowercase(k)] = lowercase(v.get<std::string>());
  return c;
}

AugmentationConfig AugmentationConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed config " + path + ": " + e.what());
  }
  return from_json(j);
}

Json AugmentationConfig::to_json() const {
  Json j = Json::object();
  j["strategy"] = strategy;
  j["top_n"] = top_n;
  j["metric"] = metric;
  j["aggregation"] = aggregation;
  j["counter_init"] = counter_init;
  j["ap_table_path"] = ap_table_path;
  j["scale_range"] = Json::array({scale_lo, scale_hi});
  j["area_bounds"] = Json::array({area_min, area_max});
  j["epsilon_frac"] = epsilon_frac;
  j["objects_per_image"] = objects_per_image;
  j["blending"] = blending;
  j["visibility_threshold"] = visibility_threshold;
  j["max_retries"] = max_retries;
  j["seed"] = seed;
  j["epoch_base"] = epoch_base;
  j["epochs"] = epochs;
  j["probability"] = probability;
  j["embedding_path"] = embedding_path;
  j["embedding_dim"] = embedding_dim;
  Json subs = Json::object();
  for (const auto& [k, v] : substitutions) subs[k] = v;
  j["substitutions"] = std::move(subs);
  return j;
}

void AugmentationConfig::validate() const {
  parse_strategy(strategy);
  parse_metric(metric);
  parse_blending(blending);
  if (aggregation != "max" && aggregation != "mean")
    throw ConfigError("aggregation must be max or mean");
  if (counter_init != "zero" && counter_init != "dataset_frequency")
    throw ConfigError("counter_init must be zero or dataset_frequency");
  if (top_n < 1) throw ConfigError("top_n must be at least 1");
  if (objects_per_image < 1)
    throw ConfigError("objects_per_image must be at least 1");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (!(probability >= 0.0 && probability <= 1.0))
    throw ConfigError("probability must be in [0, 1]");
  if (workers < 0) throw ConfigError("workers must be non-negative");
  if (embedding_dim < 0) throw ConfigError("embedding_dim must be positive");
  placement_params().validate();
}

std::string AugmentationConfig::fingerprint() const {
  // worker count never changes outputs, keep it out of the hash
  Json j = to_json();
  std::uint64_t h = hash_str(j.dump());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

PlacementParams AugmentationConfig::placement_params() const {
  PlacementParams p;
  p.scale_lo = scale_lo;
  p.scale_hi = scale_hi;
  p.area_min = area_min;
  p.area_max = area_max;
  p.epsilon_frac = epsilon_frac;
  p.max_retries = max_retries;
  p.blending = parse_blending(blending);
  p.visibility_threshold = visibility_threshold;
  return p;
}

AugmentOptions AugmentationConfig::augment_options() const {
  AugmentOptions o;
  o.strategy.kind = parse_strategy(strategy);
  o.strategy.top_n = top_n;
  o.strategy.aggregation = aggregation == "mean"
                               ? Aggregation::mean_over_hosts
                               : Aggregation::max_over_hosts;
  o.metric = parse_metric(metric);
  o.params = placement_params();
  o.objects_per_image = objects_per_image;
  return o;
}

SubstitutionTable AugmentationConfig::merged_substitutions() const {
  SubstitutionTable table = default_substitutions();
  for (const auto& [k, v] : substitutions) table[k] = v;
  return table;
}

std::map<std::string, double> parse_ap_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open AP table: " + path);
  std::map<std::string, double> table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string s = line;
    if (auto hash = s.find('#'); hash != std::string::npos) s.resize(hash);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
      s.pop_back();
    if (s.empty()) continue;

    std::string key, value;
    if (auto eq = s.find('='); eq != std::string::npos) {
      key = s.substr(0, eq);
      value = s.substr(eq + 1);
    } else {
      auto ws = s.find_last_of(" \t");
      if (ws == std::string::npos)
        throw ConfigError("AP table " + path + " line " +
                          std::to_string(line_no) + ": expected label value");
      key = s.substr(0, ws);
      value = s.substr(ws + 1);
    }
    auto trim = [](std::string& t) {
      while (!t.empty() && std::isspace(static_cast<unsigned char>(t.front())))
        t.erase(t.begin());
      while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back())))
        t.pop_back();
    };
    trim(key);
    trim(value);
    try {
      table[key] = std::stod(value);
    } catch (...) {
      throw ConfigError("AP table " + path + " line " +
                        std::to_string(line_no) + ": bad value \"" + value +
                        "\"");
    }
  }
  if (table.empty()) throw ConfigError("AP table " + path + " is empty");
  return table;
}

EmbeddingStore load_embeddings_for(const AugmentationConfig& config) {
  if (config.embedding_path.empty())
    throw ConfigError(
        "no embedding file configured (embedding_path or SEMPASTE_EMBEDDINGS)");
  std::optional<int> dim;
  if (config.embedding_dim > 0) dim = config.embedding_dim;
  return EmbeddingStore::load_file(config.embedding_path, dim,
                                   config.merged_substitutions());
}

}  // namespace sempaste
