#include "sempaste/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "sempaste/errors.hpp"

namespace sempaste {

std::int64_t CategoryCounter::count(const std::string& category) const {
  auto it = counts_.find(category);
  return it == counts_.end() ? 0 : it->second;
}

void CategoryCounter::increment(const std::string& category) {
  ++counts_[category];
}

void CategoryCounter::seed(
    const std::map<std::string, std::int64_t>& initial) {
  for (const auto& [cat, n] : initial) counts_[cat] += n;
}

void CategoryCounter::reset_epoch(std::int64_t new_epoch_id) {
  if (new_epoch_id <= epoch_id_)
    throw DataError("epoch id must increase (current " +
                    std::to_string(epoch_id_) + ", got " +
                    std::to_string(new_epoch_id) + ")");
  epoch_id_ = new_epoch_id;
  counts_.clear();
}

StrategyKind parse_strategy(const std::string& name) {
  if (name == "most_similar") return StrategyKind::most_similar;
  if (name == "instance_balanced") return StrategyKind::instance_balanced;
  if (name == "baseline_map") return StrategyKind::baseline_map;
  if (name == "cooccurrence") return StrategyKind::cooccurrence;
  if (name == "random_paste") return StrategyKind::random_paste;
  throw ConfigError("unknown selection strategy: \"" + name + "\"");
}

std::string to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::most_similar: return "most_similar";
    case StrategyKind::instance_balanced: return "instance_balanced";
    case StrategyKind::baseline_map: return "baseline_map";
    case StrategyKind::cooccurrence: return "cooccurrence";
    case StrategyKind::random_paste: return "random_paste";
  }
  return "?";
}

CooccurrenceTable CooccurrenceTable::from_index(const DatasetIndex& dataset) {
  CooccurrenceTable t;
  std::set<std::string> names(dataset.categories.begin(),
                              dataset.categories.end());
  t.categories.assign(names.begin(), names.end());
  for (std::size_t i = 0; i < t.categories.size(); ++i)
    t.index[t.categories[i]] = static_cast<int>(i);
  const auto n = static_cast<Eigen::Index>(t.categories.size());
  t.counts = Eigen::MatrixXd::Zero(n, n);
  for (const auto& img : dataset.images) {
    std::set<std::string> present;
    for (const auto& obj : img.objects) present.insert(obj.category);
    for (const auto& a : present)
      for (const auto& b : present)
        t.counts(t.index.at(a), t.index.at(b)) += 1.0;
  }
  return t;
}

Json CooccurrenceTable::to_json() const {
  Json j = Json::object();
  j["categories"] = categories;
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < counts.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < counts.cols(); ++c)
      row.push_back(counts(r, c));
    rows.push_back(std::move(row));
  }
  j["counts"] = std::move(rows);
  return j;
}

CooccurrenceTable CooccurrenceTable::from_json(const Json& j) {
  CooccurrenceTable t;
  t.categories = j["categories"].get<std::vector<std::string>>();
  for (std::size_t i = 0; i < t.categories.size(); ++i)
    t.index[t.categories[i]] = static_cast<int>(i);
  const auto n = static_cast<Eigen::Index>(t.categories.size());
  t.counts = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c)
      t.counts(r, c) = j["counts"][r][c].get<double>();
  return t;
}

double CooccurrenceTable::weight(
    const std::string& candidate,
    const std::vector<std::string>& host_categories) const {
  auto c = index.find(candidate);
  if (c == index.end()) return 0.0;
  double w = 0.0;
  for (const auto& h : host_categories) {
    auto hi = index.find(h);
    if (hi != index.end()) w += counts(c->second, hi->second);
  }
  return w;
}

std::vector<SimilarityPair> score_all_pairs(const AnnotatedImage& host,
                                            const ObjectBank& bank,
                                            const EmbeddingStore& store,
                                            SimilarityMetric metric) {
  std::vector<SimilarityPair> pairs;
  if (host.objects.empty()) return pairs;  // no-host-objects signal
  const auto& categories = bank.categories();
  if (categories.empty()) throw DataError("object bank is empty");

  const int d = store.dimension();
  Eigen::MatrixXd host_vecs(host.objects.size(), d);
  for (std::size_t i = 0; i < host.objects.size(); ++i)
    host_vecs.row(i) = store.resolve(host.objects[i].category).transpose();
  Eigen::MatrixXd bank_vecs(categories.size(), d);
  for (std::size_t j = 0; j < categories.size(); ++j)
    bank_vecs.row(j) = bank.category_embedding(categories[j]).transpose();

  Eigen::MatrixXd scores = pairwise_similarity(host_vecs, bank_vecs, metric);
  pairs.reserve(host.objects.size() * categories.size());
  for (std::size_t i = 0; i < host.objects.size(); ++i)
    for (std::size_t j = 0; j < categories.size(); ++j)
      pairs.push_back({static_cast<int>(i), categories[j],
                       scores(static_cast<Eigen::Index>(i),
                              static_cast<Eigen::Index>(j))});
  return pairs;
}

std::vector<SimilarityPair> category_candidates(
    const std::vector<SimilarityPair>& pairs, Aggregation agg) {
  struct Accum {
    double best = -std::numeric_limits<double>::infinity();
    int best_host = -1;
    double sum = 0.0;
    std::int64_t n = 0;
  };
  std::map<std::string, Accum> by_cat;
  for (const auto& p : pairs) {
    if (!std::isfinite(p.score))
      throw DataError("non-finite similarity score for category \"" +
                      p.bank_category + "\"");
    Accum& a = by_cat[p.bank_category];
    if (p.score > a.best || (p.score == a.best &&
                             (a.best_host < 0 ||
                              p.host_object_index < a.best_host))) {
      a.best = p.score;
      a.best_host = p.host_object_index;
    }
    a.sum += p.score;
    ++a.n;
  }

  std::vector<SimilarityPair> out;
  out.reserve(by_cat.size());
  for (const auto& [cat, a] : by_cat) {
    double score = agg == Aggregation::max_over_hosts
                       ? a.best
                       : a.sum / static_cast<double>(a.n);
    out.push_back({a.best_host, cat, score});
  }
  std::sort(out.begin(), out.end(),
            [](const SimilarityPair& x, const SimilarityPair& y) {
              if (x.score != y.score) return x.score > y.score;
              return x.bank_category < y.bank_category;
            });
  return out;
}

std::vector<SimilarityPair> top_n_pairs(
    const std::vector<SimilarityPair>& pairs, int n, Aggregation agg) {
  if (n < 1) throw DataError("top_n must be at least 1");
  if (pairs.empty()) throw DataError("top_n_pairs: empty pair list");
  std::vector<SimilarityPair> candidates = category_candidates(pairs, agg);
  if (static_cast<int>(candidates.size()) > n)
    candidates.resize(static_cast<std::size_t>(n));
  return candidates;
}

namespace {

// argmin over candidates by (key, -score, label)
const SimilarityPair& pick_min(
    const std::vector<SimilarityPair>& candidates,
    const std::function<double(const SimilarityPair&)>& key) {
  const SimilarityPair* best = &candidates.front();
  double best_key = key(*best);
  for (const auto& c : candidates) {
    double k = key(c);
    if (k < best_key ||
        (k == best_key &&
         (c.score > best->score ||
          (c.score == best->score && c.bank_category < best->bank_category))))
    {
      best = &c;
      best_key = k;
    }
  }
  return *best;
}

}  // namespace

MatchDecision select(const std::vector<SimilarityPair>& pairs,
                     const SelectionStrategy& strategy,
                     CategoryCounter& counter, RngStream& rng,
                     const std::vector<std::string>& host_categories) {
  if (pairs.empty()) throw DataError("select: empty pair list");

  MatchDecision decision;
  decision.strategy = strategy.kind;

  if (strategy.kind == StrategyKind::random_paste) {
    std::set<std::string> cats;
    std::set<int> hosts;
    for (const auto& p : pairs) {
      cats.insert(p.bank_category);
      hosts.insert(p.host_object_index);
    }
    std::vector<std::string> cat_list(cats.begin(), cats.end());
    std::vector<int> host_list(hosts.begin(), hosts.end());
    decision.bank_category = cat_list[rng.uniform_index(cat_list.size())];
    decision.host_object_index =
        host_list[rng.uniform_index(host_list.size())];
    for (const auto& p : pairs)
      if (p.host_object_index == decision.host_object_index &&
          p.bank_category == decision.bank_category)
        decision.score = p.score;
    counter.increment(decision.bank_category);
    return decision;
  }

  if (strategy.kind == StrategyKind::cooccurrence) {
    if (!strategy.cooccurrence)
      throw ConfigError(
          "cooccurrence strategy requires a co-occurrence table");
    std::vector<SimilarityPair> candidates =
        category_candidates(pairs, strategy.aggregation);
    decision.top_n_pairs = candidates;
    std::vector<double> weights(candidates.size());
    double total = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      weights[i] = strategy.cooccurrence->weight(candidates[i].bank_category,
                                                 host_categories);
      total += weights[i];
    }
    if (total <= 0.0) {
      std::fill(weights.begin(), weights.end(), 1.0);
      total = static_cast<double>(weights.size());
    }
    double u = rng.uniform() * total;
    std::size_t chosen = candidates.size() - 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      acc += weights[i];
      if (u < acc) {
        chosen = i;
        break;
      }
    }
    decision.host_object_index = candidates[chosen].host_object_index;
    decision.bank_category = candidates[chosen].bank_category;
    decision.score = candidates[chosen].score;
    counter.increment(decision.bank_category);
    return decision;
  }

  std::vector<SimilarityPair> topn =
      top_n_pairs(pairs, strategy.top_n, strategy.aggregation);
  decision.top_n_pairs = topn;

  switch (strategy.kind) {
    case StrategyKind::most_similar: {
      const SimilarityPair& p = topn.front();
      decision.host_object_index = p.host_object_index;
      decision.bank_category = p.bank_category;
      decision.score = p.score;
      break;
    }
    case StrategyKind::instance_balanced: {
      const SimilarityPair& p = pick_min(topn, [&](const SimilarityPair& c) {
        return static_cast<double>(counter.count(c.bank_category));
      });
      decision.host_object_index = p.host_object_index;
      decision.bank_category = p.bank_category;
      decision.score = p.score;
      break;
    }
    case StrategyKind::baseline_map: {
      if (strategy.per_category_ap.empty())
        throw ConfigError("baseline_map strategy requires a per-category AP "
                          "table");
      const SimilarityPair& p = pick_min(topn, [&](const SimilarityPair& c) {
        auto it = strategy.per_category_ap.find(c.bank_category);
        if (it == strategy.per_category_ap.end())
          throw ConfigError("AP table has no entry for candidate category \"" +
                            c.bank_category + "\"");
        return it->second;
      });
      decision.host_object_index = p.host_object_index;
      decision.bank_category = p.bank_category;
      decision.score = p.score;
      break;
    }
    default:
      throw ConfigError("unhandled strategy");
  }

  counter.increment(decision.bank_category);
  return decision;
}

}  // namespace sempaste
