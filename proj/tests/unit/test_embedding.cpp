#include <cmath>
#include <sstream>

#include "doctest.h"
#include "sempaste/embedding.hpp"
#include "sempaste/errors.hpp"
#include "sempaste/rng.hpp"

using namespace sempaste;

namespace {

Vec make_vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Vec random_vec(int d, RngStream& rng) {
  Vec v(d);
  for (int i = 0; i < d; ++i) v(i) = rng.uniform(-1.0, 1.0);
  if (v.isZero()) v(0) = 1.0;
  return v;
}

}  // namespace

TEST_CASE("load infers dimension and lowercases tokens") {
  std::istringstream in("Cat 1.0 0.0\ndog 0.5 0.5\n");
  EmbeddingStore store = EmbeddingStore::load(in);
  CHECK(store.dimension() == 2);
  CHECK(store.size() == 2);
  CHECK(store.contains("cat"));
  CHECK(store.contains("CAT"));
  CHECK(store.vector("cat")(0) == doctest::Approx(1.0));
}

TEST_CASE("load single minimal line") {
  std::istringstream in("cat 1.0 0.0\n");
  EmbeddingStore store = EmbeddingStore::load(in);
  CHECK(store.dimension() == 2);
  CHECK(store.size() == 1);
}

TEST_CASE("load rejects dimension mismatch naming the line") {
  std::istringstream in("cat 1.0 0.0\ndog 1.0\n");
  try {
    EmbeddingStore::load(in);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("load respects expected_dim") {
  std::istringstream in("cat 1.0 0.0 0.0\n");
  CHECK_THROWS_AS(EmbeddingStore::load(in, 2), DataError);
}

TEST_CASE("load rejects empty stream") {
  std::istringstream in("");
  CHECK_THROWS_AS(EmbeddingStore::load(in), DataError);
}

TEST_CASE("load rejects non-numeric entries") {
  std::istringstream in("cat 1.0 zebra\n");
  try {
    EmbeddingStore::load(in);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }
}

TEST_CASE("load rejects zero vectors") {
  std::istringstream in("cat 0.0 0.0\n");
  CHECK_THROWS_AS(EmbeddingStore::load(in), DataError);
}

TEST_CASE("substitution rows without a loaded target are dropped") {
  std::istringstream in("cat 1.0 0.0\n");
  EmbeddingStore store = EmbeddingStore::load(in);
  CHECK(store.substitutions().empty());
  CHECK(store.dropped_substitutions().size() ==
        default_substitutions().size());
  CHECK_THROWS_AS(store.resolve("traffic light"), UnresolvedLabelError);
}

TEST_CASE("resolve: exact match, substitution, then error") {
  std::istringstream in("cat 1.0 0.0\ntable 0.0 1.0\nstoplight 1.0 1.0\n");
  EmbeddingStore store = EmbeddingStore::load(in);

  // exact-match identity
  CHECK(store.resolve_token("cat") == "cat");
  CHECK(store.resolve("Cat")(0) == doctest::Approx(1.0));

  // substitution table rows
  CHECK(store.resolve_token("dining table") == "table");
  CHECK(store.resolve("Dining Table")(1) == doctest::Approx(1.0));
  CHECK(store.resolve_token("traffic light") == "stoplight");

  CHECK_THROWS_AS(store.resolve("spaceship"), UnresolvedLabelError);
  try {
    store.resolve("spaceship");
  } catch (const UnresolvedLabelError& e) {
    CHECK(e.label == "spaceship");
  }
}

TEST_CASE("multiword labels outside the table are rejected, not averaged") {
  std::istringstream in("coffee 1.0 0.0\nmug 0.0 1.0\n");
  EmbeddingStore store = EmbeddingStore::load(in);
  CHECK_THROWS_AS(store.resolve("coffee mug"), UnresolvedLabelError);
}

TEST_CASE("cosine similarity basics") {
  CHECK(cosine_similarity(make_vec({1, 0, 0}), make_vec({1, 0, 0})) ==
        doctest::Approx(1.0));
  CHECK(cosine_similarity(make_vec({1, 0}), make_vec({0, 1})) ==
        doctest::Approx(0.0));
  // direct evaluation with exact arithmetic: 32 / (sqrt(14) * sqrt(77))
  double expected = 32.0 / (std::sqrt(14.0) * std::sqrt(77.0));
  CHECK(cosine_similarity(make_vec({1, 2, 3}), make_vec({4, 5, 6})) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("cosine errors: zero vector and dimension mismatch") {
  CHECK_THROWS_AS(cosine_similarity(make_vec({0, 0}), make_vec({1, 0})),
                  DataError);
  CHECK_THROWS_AS(cosine_similarity(make_vec({1, 0, 0}), make_vec({1, 0})),
                  DataError);
}

TEST_CASE("euclidean score is the negated distance") {
  CHECK(euclidean_score(make_vec({0, 0}), make_vec({3, 4})) ==
        doctest::Approx(-5.0));
  CHECK(similarity(SimilarityMetric::euclidean, make_vec({1, 1}),
                   make_vec({1, 1})) == doctest::Approx(0.0));
}

TEST_CASE("similarity properties: symmetry and scale invariance") {
  RngStream rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    Vec a = random_vec(16, rng);
    Vec b = random_vec(16, rng);
    for (auto metric :
         {SimilarityMetric::cosine, SimilarityMetric::euclidean}) {
      CHECK(similarity(metric, a, b) ==
            doctest::Approx(similarity(metric, b, a)).epsilon(1e-12));
    }
    double lambda = rng.uniform(1e-3, 1000.0);
    CHECK(std::abs(cosine_similarity(lambda * a, b) -
                   cosine_similarity(a, b)) < 1e-9);
    CHECK(std::abs(cosine_similarity(a, a) - 1.0) < 1e-9);
  }
}

TEST_CASE("pairwise similarity matches the scalar path") {
  RngStream rng(7);
  Eigen::MatrixXd hosts(3, 8), bank(5, 8);
  for (Eigen::Index i = 0; i < hosts.rows(); ++i)
    hosts.row(i) = random_vec(8, rng).transpose();
  for (Eigen::Index j = 0; j < bank.rows(); ++j)
    bank.row(j) = random_vec(8, rng).transpose();

  for (auto metric : {SimilarityMetric::cosine, SimilarityMetric::euclidean}) {
    Eigen::MatrixXd s = pairwise_similarity(hosts, bank, metric);
    REQUIRE(s.rows() == 3);
    REQUIRE(s.cols() == 5);
    for (Eigen::Index i = 0; i < 3; ++i)
      for (Eigen::Index j = 0; j < 5; ++j) {
        Vec a = hosts.row(i).transpose();
        Vec b = bank.row(j).transpose();
        CHECK(s(i, j) == doctest::Approx(similarity(metric, a, b))
                             .epsilon(1e-10));
      }
  }
}

TEST_CASE("similarity flop estimate") {
  CHECK(estimate_similarity_flops(80, 20, 300) == 480000);
  CHECK(estimate_similarity_flops(1, 1, 1) == 1);
  CHECK(estimate_similarity_flops(20, 5, 100) == 10000);
  CHECK_THROWS_AS(estimate_similarity_flops(0, 1, 1), DataError);
  CHECK_THROWS_AS(estimate_similarity_flops(1, -1, 1), DataError);
  CHECK_THROWS_AS(estimate_similarity_flops(1, 1, 0), DataError);
}

TEST_CASE("default substitution table carries all eleven rows") {
  auto table = default_substitutions();
  CHECK(table.size() == 11);
  CHECK(table.at("baseball bat") == "baseball");
  CHECK(table.at("baseball glove") == "baseball");
  CHECK(table.at("dining table") == "table");
  CHECK(table.at("fire hydrant") == "hydrant");
  CHECK(table.at("parking meter") == "parking");
  CHECK(table.at("playing field") == "field");
  CHECK(table.at("potted plant") == "plant");
  CHECK(table.at("tennis racket") == "racket");
  CHECK(table.at("traffic light") == "stoplight");
  CHECK(table.at("stop sign") == "stoplight");
  CHECK(table.at("waterdrops") == "droplets");
}
