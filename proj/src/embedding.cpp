#include "sempaste/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

namespace sempaste {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

SimilarityMetric parse_metric(std::string_view name) {
  if (name == "cosine") return SimilarityMetric::cosine;
  if (name == "euclidean") return SimilarityMetric::euclidean;
  throw ConfigError("unknown similarity metric: \"" + std::string(name) +
                    "\" (expected cosine or euclidean)");
}

std::string to_string(SimilarityMetric m) {
  return m == SimilarityMetric::cosine ? "cosine" : "euclidean";
}

SubstitutionTable default_substitutions() {
  return SubstitutionTable{
      {"baseball bat", "baseball"},  {"baseball glove", "baseball"},
      {"dining table", "table"},     {"fire hydrant", "hydrant"},
      {"parking meter", "parking"},  {"playing field", "field"},
      {"potted plant", "plant"},     {"tennis racket", "racket"},
      {"traffic light", "stoplight"}, {"stop sign", "stoplight"},
      {"waterdrops", "droplets"},
  };
}

namespace {

bool parse_double(std::string_view tok, double& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

EmbeddingStore EmbeddingStore::load(std::istream& in,
                                    std::optional<int> expected_dim,
                                    SubstitutionTable substitutions) {
  if (expected_dim && *expected_dim <= 0)
    throw DataError("embedding load: expected dimension must be positive");

  EmbeddingStore store;
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> coeffs;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::size_t pos = line.find(' ');
    if (pos == std::string::npos || pos == 0)
      throw DataError("embedding load: line " + std::to_string(line_no) +
                      ": expected \"token v1 ... vd\"");
    std::string token = lowercase(std::string_view(line).substr(0, pos));

    coeffs.clear();
    std::size_t start = pos + 1;
    while (start < line.size()) {
      std::size_t end = line.find(' ', start);
      if (end == std::string::npos) end = line.size();
      if (end > start) {
        double v;
        if (!parse_double(std::string_view(line).substr(start, end - start), v))
          throw DataError("embedding load: line " + std::to_string(line_no) +
                          ": non-numeric entry \"" +
                          line.substr(start, end - start) + "\"");
        coeffs.push_back(v);
      }
      start = end + 1;
    }

    if (coeffs.empty())
      throw DataError("embedding load: line " + std::to_string(line_no) +
                      ": token without coefficients");

    if (store.dimension_ == 0) {
      store.dimension_ = expected_dim ? *expected_dim
                                      : static_cast<int>(coeffs.size());
    }
    if (static_cast<int>(coeffs.size()) != store.dimension_)
      throw DataError("embedding load: line " + std::to_string(line_no) +
                      ": dimension " + std::to_string(coeffs.size()) +
                      " does not match store dimension " +
                      std::to_string(store.dimension_));

    Vec v = Eigen::Map<const Vec>(coeffs.data(),
                                  static_cast<Eigen::Index>(coeffs.size()));
    if (v.isZero(0.0))
      throw DataError("embedding load: line " + std::to_string(line_no) +
                      ": zero vector for token \"" + token + "\"");

    // first occurrence wins on duplicate tokens
    store.entries_.emplace(std::move(token), std::move(v));
  }

  if (store.entries_.empty())
    throw DataError("embedding load: empty stream, no vectors parsed");

  for (auto& [raw, target] : substitutions) {
    std::string raw_lc = lowercase(raw);
    std::string target_lc = lowercase(target);
    if (store.entries_.count(target_lc)) {
      store.substitutions_.emplace(std::move(raw_lc), std::move(target_lc));
    } else {
      store.dropped_substitutions_.push_back(raw_lc);
    }
  }
  return store;
}

EmbeddingStore EmbeddingStore::load_file(const std::string& path,
                                         std::optional<int> expected_dim,
                                         SubstitutionTable substitutions) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file: " + path);
  return load(in, expected_dim, std::move(substitutions));
}

bool EmbeddingStore::contains(std::string_view token) const {
  return entries_.count(lowercase(token)) > 0;
}

const Vec& EmbeddingStore::vector(std::string_view token) const {
  auto it = entries_.find(lowercase(token));
  if (it == entries_.end())
    throw UnresolvedLabelError(std::string(token));
  return it->second;
}

std::string EmbeddingStore::resolve_token(std::string_view raw_label) const {
  std::string key = lowercase(raw_label);
  if (entries_.count(key)) return key;
  auto sub = substitutions_.find(key);
  if (sub != substitutions_.end()) return sub->second;
  throw UnresolvedLabelError(std::string(raw_label));
}

const Vec& EmbeddingStore::resolve(std::string_view raw_label) const {
  return entries_.at(resolve_token(raw_label));
}

bool EmbeddingStore::resolves(std::string_view raw_label) const {
  std::string key = lowercase(raw_label);
  return entries_.count(key) > 0 || substitutions_.count(key) > 0;
}

double cosine_similarity(const Vec& a, const Vec& b) {
  if (a.size() != b.size())
    throw DataError("similarity: dimension mismatch (" +
                    std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0)
    throw DataError("cosine similarity is undefined for a zero vector");
  return a.dot(b) / (na * nb);
}

double euclidean_score(const Vec& a, const Vec& b) {
  if (a.size() != b.size())
    throw DataError("similarity: dimension mismatch (" +
                    std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")");
  return -(a - b).norm();
}

double similarity(SimilarityMetric metric, const Vec& a, const Vec& b) {
  return metric == SimilarityMetric::cosine ? cosine_similarity(a, b)
                                            : euclidean_score(a, b);
}

Eigen::MatrixXd pairwise_similarity(const Eigen::MatrixXd& hosts,
                                    const Eigen::MatrixXd& bank,
                                    SimilarityMetric metric) {
  if (hosts.cols() != bank.cols())
    throw DataError("pairwise similarity: dimension mismatch");
  if (metric == SimilarityMetric::cosine) {
    Eigen::VectorXd hn = hosts.rowwise().norm();
    Eigen::VectorXd bn = bank.rowwise().norm();
    if ((hn.array() == 0.0).any() || (bn.array() == 0.0).any())
      throw DataError("cosine similarity is undefined for a zero vector");
    return hn.cwiseInverse().asDiagonal() * (hosts * bank.transpose()) *
           bn.cwiseInverse().asDiagonal();
  }
  Eigen::MatrixXd d2 =
      (hosts.rowwise().squaredNorm().replicate(1, bank.rows()) +
       bank.rowwise().squaredNorm().transpose().replicate(hosts.rows(), 1) -
       2.0 * hosts * bank.transpose())
          .cwiseMax(0.0);
  return -d2.cwiseSqrt();
}

std::uint64_t estimate_similarity_flops(std::int64_t bank_categories,
                                        std::int64_t image_objects,
                                        std::int64_t dimension) {
  if (bank_categories <= 0 || image_objects <= 0 || dimension <= 0)
    throw DataError("estimate_similarity_flops: counts must be positive");
  return static_cast<std::uint64_t>(bank_categories) *
         static_cast<std::uint64_t>(image_objects) *
         static_cast<std::uint64_t>(dimension);
}

}  // namespace sempaste
