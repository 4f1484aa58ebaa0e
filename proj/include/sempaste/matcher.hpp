#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sempaste/annotations.hpp"
#include "sempaste/embedding.hpp"
#include "sempaste/object_bank.hpp"
#include "sempaste/rng.hpp"

namespace sempaste {

struct SimilarityPair {
  int host_object_index = -1;
  std::string bank_category;
  double score = 0.0;
};

// Per-epoch tally of pasted categories. Counts only grow within an epoch;
// callers that share one counter across workers must serialize
// select+increment (see select()).
class CategoryCounter {
 public:
  explicit CategoryCounter(std::int64_t epoch_id = 0) : epoch_id_(epoch_id) {}

  std::int64_t epoch_id() const { return epoch_id_; }
  std::int64_t count(const std::string& category) const;
  void increment(const std::string& category);
  void seed(const std::map<std::string, std::int64_t>& initial);
  const std::map<std::string, std::int64_t>& counts() const { return counts_; }

  // Zeroes every count; epoch ids must strictly increase.
  void reset_epoch(std::int64_t new_epoch_id);

 private:
  std::int64_t epoch_id_ = 0;
  std::map<std::string, std::int64_t> counts_;
};

enum class StrategyKind {
  most_similar,
  instance_balanced,
  baseline_map,
  cooccurrence,
  random_paste,
};

StrategyKind parse_strategy(const std::string& name);
std::string to_string(StrategyKind k);

// Per-category aggregation of pair scores before candidate ranking: the
// default keeps each category's best host pair; mean averages over all host
// objects (scene-level matching).
enum class Aggregation { max_over_hosts, mean_over_hosts };

// Image co-occurrence counts: entry (a, b) = number of images containing
// both categories.
struct CooccurrenceTable {
  std::vector<std::string> categories;
  std::map<std::string, int> index;
  Eigen::MatrixXd counts;

  static CooccurrenceTable from_index(const DatasetIndex& dataset);
  Json to_json() const;
  static CooccurrenceTable from_json(const Json& j);

  double weight(const std::string& candidate,
                const std::vector<std::string>& host_categories) const;
};

struct SelectionStrategy {
  StrategyKind kind = StrategyKind::instance_balanced;
  int top_n = 3;
  Aggregation aggregation = Aggregation::max_over_hosts;
  std::map<std::string, double> per_category_ap;  // baseline_map
  std::shared_ptr<const CooccurrenceTable> cooccurrence;
};

struct MatchDecision {
  int host_object_index = -1;  // a*
  std::string bank_category;   // b*
  double score = 0.0;
  StrategyKind strategy = StrategyKind::most_similar;
  std::vector<SimilarityPair> top_n_pairs;  // candidates inspected
};

// Every (host object, bank category) pair scored; |objects| x |categories|
// entries. An annotation-free host yields an empty list (the caller skips
// the image). Unresolvable host labels throw.
std::vector<SimilarityPair> score_all_pairs(const AnnotatedImage& host,
                                            const ObjectBank& bank,
                                            const EmbeddingStore& store,
                                            SimilarityMetric metric);

// One candidate pair per bank category: its best-scoring host object, with
// the category score aggregated per `agg`. Sorted by descending score, ties
// by ascending label.
std::vector<SimilarityPair> category_candidates(
    const std::vector<SimilarityPair>& pairs,
    Aggregation agg = Aggregation::max_over_hosts);

// The n best distinct-category pairs (all of them when fewer exist).
std::vector<SimilarityPair> top_n_pairs(
    const std::vector<SimilarityPair>& pairs, int n,
    Aggregation agg = Aggregation::max_over_hosts);

// Applies the strategy to the scored pairs and increments the chosen
// category in `counter`. Deterministic given (pairs, strategy, counter,
// rng): count ties break to higher similarity, then ascending label.
// host_categories (the host image's labels) only matter for the
// cooccurrence strategy's sampling weights.
MatchDecision select(const std::vector<SimilarityPair>& pairs,
                     const SelectionStrategy& strategy,
                     CategoryCounter& counter, RngStream& rng,
                     const std::vector<std::string>& host_categories = {});

}  // namespace sempaste
