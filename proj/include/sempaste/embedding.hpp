#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sempaste/errors.hpp"

namespace sempaste {

using Vec = Eigen::VectorXd;

enum class SimilarityMetric { cosine, euclidean };

SimilarityMetric parse_metric(std::string_view name);
std::string to_string(SimilarityMetric m);

// raw label -> replacement token, both lowercase.
using SubstitutionTable = std::map<std::string, std::string>;

// The built-in rows for dataset labels that are not single corpus tokens.
SubstitutionTable default_substitutions();

std::string lowercase(std::string_view s);

struct WordVector {
  std::string token;
  Vec values;
};

// Immutable token -> vector dictionary loaded from the common text format
// (one token per line followed by its coefficients). All vectors share one
// dimension; similarity math is double precision throughout.
class EmbeddingStore {
 public:
  // expected_dim, when set, must match the file; otherwise the dimension is
  // inferred from the first line. Substitution rows whose replacement token
  // is not present in the stream are dropped (and reported via
  // dropped_substitutions) so lookups on them fail loudly instead of
  // pointing at nothing.
  static EmbeddingStore load(std::istream& in,
                             std::optional<int> expected_dim = {},
                             SubstitutionTable substitutions =
                                 default_substitutions());
  static EmbeddingStore load_file(const std::string& path,
                                  std::optional<int> expected_dim = {},
                                  SubstitutionTable substitutions =
                                      default_substitutions());

  int dimension() const { return dimension_; }
  std::size_t size() const { return entries_.size(); }

  bool contains(std::string_view token) const;
  const Vec& vector(std::string_view token) const;

  // Exact lowercase match first, then the substitution table, else throws
  // UnresolvedLabelError. No silent fallback vectors.
  const Vec& resolve(std::string_view raw_label) const;
  // The token the label resolved to (identity for exact matches).
  std::string resolve_token(std::string_view raw_label) const;
  bool resolves(std::string_view raw_label) const;

  const SubstitutionTable& substitutions() const { return substitutions_; }
  const std::vector<std::string>& dropped_substitutions() const {
    return dropped_substitutions_;
  }

 private:
  int dimension_ = 0;
  std::map<std::string, Vec> entries_;
  SubstitutionTable substitutions_;
  std::vector<std::string> dropped_substitutions_;
};

// Pairwise score between two embeddings; higher is always more similar.
// Cosine follows the usual normalized dot product; euclidean returns the
// negated L2 distance so both metrics rank by maximization.
double similarity(SimilarityMetric metric, const Vec& a, const Vec& b);
double cosine_similarity(const Vec& a, const Vec& b);
double euclidean_score(const Vec& a, const Vec& b);

// Rows of `hosts` scored against rows of `bank`; returns a hosts.rows() x
// bank.rows() score matrix.
Eigen::MatrixXd pairwise_similarity(const Eigen::MatrixXd& hosts,
                                    const Eigen::MatrixXd& bank,
                                    SimilarityMetric metric);

// Multiply-accumulate count of one image's matching step:
// bank_categories * image_objects * dimension.
std::uint64_t estimate_similarity_flops(std::int64_t bank_categories,
                                        std::int64_t image_objects,
                                        std::int64_t dimension);

}  // namespace sempaste
