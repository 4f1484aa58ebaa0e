#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sempaste/annotations.hpp"
#include "sempaste/compositor.hpp"
#include "sempaste/embedding.hpp"
#include "sempaste/matcher.hpp"
#include "sempaste/object_bank.hpp"

namespace sempaste {

// Every knob of the augmentation run. Defaults are the recommended
// operating point: instance-balanced top-3 cosine matching, 5-40% width
// scaling against (300, 90000) area bounds, one unblended paste per image.
struct AugmentationConfig {
  std::string strategy = "instance_balanced";
  int top_n = 3;
  std::string metric = "cosine";
  std::string aggregation = "max";  // max | mean (scene-averaged scores)
  std::string counter_init = "zero";  // zero | dataset_frequency
  std::string ap_table_path;          // baseline_map only

  double scale_lo = 0.05;
  double scale_hi = 0.40;
  std::int64_t area_min = 300;
  std::int64_t area_max = 90000;
  double epsilon_frac = 0.05;
  int objects_per_image = 1;
  std::string blending = "none";
  double visibility_threshold = 0.05;
  int max_retries = 20;

  std::uint64_t seed = 0;
  std::int64_t epoch_base = 0;
  int epochs = 1;
  double probability = 1.0;  // chance an image is augmented at all
  int workers = 0;           // 0 = hardware concurrency

  std::string embedding_path;
  int embedding_dim = 0;  // 0 = infer from file
  std::map<std::string, std::string> substitutions;  // extends the builtin table

  static AugmentationConfig from_json(const Json& j);
  static AugmentationConfig load_file(const std::string& path);
  Json to_json() const;
  void validate() const;

  // Stable hash of the resolved config (seed included); equal fingerprints
  // mean byte-identical outputs.
  std::string fingerprint() const;

  PlacementParams placement_params() const;
  AugmentOptions augment_options() const;  // strategy aux data not attached
  SubstitutionTable merged_substitutions() const;
};

// key/value lines: "label = ap" (or whitespace separated, value last).
std::map<std::string, double> parse_ap_table(const std::string& path);

struct RunReport {
  std::int64_t epoch = 0;
  std::string config_fingerprint;
  std::int64_t images_processed = 0;
  std::int64_t images_skipped = 0;
  std::int64_t pastes = 0;
  std::int64_t occlusion_removals = 0;
  std::map<std::string, std::int64_t> paste_counts;
  std::map<std::string, std::int64_t> skip_reasons;
  std::map<std::string, std::int64_t> counter_final;
  std::map<std::string, std::uint64_t> similarity_flops_per_image;
  std::uint64_t total_similarity_flops = 0;
  std::vector<RecordError> record_errors;
  double wall_time_seconds = 0.0;  // printed, deliberately not serialized

  Json to_json() const;
};

struct BuildBankRun {
  DatasetManifest manifest;
  MaskSource masks;
  std::string out_dir;
};

BankBuildReport run_build_bank(const BuildBankRun& run,
                               const EmbeddingStore& store);

struct AugmentRun {
  DatasetManifest manifest;
  std::string bank_dir;
  std::string out_root;
  AugmentationConfig config;
};

// One epoch per entry of the result; wall time is filled in, everything
// else is deterministic for a fixed (config, inputs).
std::vector<RunReport> run_augment(const AugmentRun& run);

struct CategoryStats {
  std::map<std::string, std::int64_t> counts;

  std::int64_t total() const;
  double max_min_ratio() const;  // +inf when any count is zero
  double entropy_bits() const;
  Json to_json() const;
};

CategoryStats dataset_stats(const DatasetIndex& index);

struct PreviewRun {
  DatasetManifest manifest;
  std::string bank_dir;
  AugmentationConfig config;
  std::vector<std::string> image_ids;
  int n_variants = 1;
  std::string out_dir;
};

// Writes one side-by-side original/augmented file per (id, variant) with
// the pasted box outlined and the category label burned in; variants of one
// image use distinct bank instances. Returns a summary (files, entry ids).
Json run_preview(const PreviewRun& run);

// The embedding store for a config (env override SEMPASTE_EMBEDDINGS wins
// over config's embedding_path).
EmbeddingStore load_embeddings_for(const AugmentationConfig& config);

}  // namespace sempaste
