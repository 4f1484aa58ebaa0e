#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "sempaste/errors.hpp"
#include "sempaste/pipeline.hpp"

using namespace sempaste;

namespace {

std::string env_embeddings() {
  const char* env = std::getenv("SEMPASTE_EMBEDDINGS");
  return env ? env : "";
}

// flag > SEMPASTE_EMBEDDINGS > config file
void resolve_embedding_path(AugmentationConfig& cfg,
                            const std::string& flag_value) {
  if (!flag_value.empty())
    cfg.embedding_path = flag_value;
  else if (!env_embeddings().empty())
    cfg.embedding_path = env_embeddings();
}

struct CommonDatasetArgs {
  std::string dataset;
  std::string format = "coco";
  std::string images;

  void attach(CLI::App* cmd) {
    cmd->add_option("--dataset", dataset,
                    "coco: annotation json; voc: dataset root")
        ->required();
    cmd->add_option("--format", format, "dataset format")
        ->check(CLI::IsMember({"coco", "voc"}));
    cmd->add_option("--images", images, "image directory override");
  }

  DatasetManifest manifest() const {
    return make_manifest(parse_format(format), dataset, images);
  }
};

void print_stats(const std::string& title, const CategoryStats& stats) {
  std::cout << title << "\n";
  for (const auto& [cat, n] : stats.counts)
    std::cout << "  " << cat << ": " << n << "\n";
  std::cout << "  total: " << stats.total() << "\n";
  double ratio = stats.max_min_ratio();
  std::cout << "  max/min ratio: ";
  if (std::isfinite(ratio))
    std::cout << ratio << "\n";
  else
    std::cout << "inf\n";
  std::cout << "  entropy (bits): " << stats.entropy_bits() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Object-level dataset augmentation driven by word-embedding "
               "similarity between category labels"};
  app.require_subcommand(1);

  // ---- build-bank ----
  auto* bank_cmd = app.add_subcommand(
      "build-bank", "Crop labeled objects into a reusable object bank");
  CommonDatasetArgs bank_ds;
  bank_ds.attach(bank_cmd);
  std::string bank_masks = "gt";
  std::string bank_out;
  std::string bank_embeddings;
  int bank_dim = 0;
  bank_cmd->add_option("--masks", bank_masks,
                       "\"gt\" or a directory of class-indexed label images");
  bank_cmd->add_option("--out", bank_out, "bank output directory")->required();
  bank_cmd->add_option("--embeddings", bank_embeddings,
                       "word vector file (token v1 ... vd per line)");
  bank_cmd->add_option("--embedding-dim", bank_dim, "expected dimension");

  // ---- augment ----
  auto* aug_cmd = app.add_subcommand(
      "augment", "Paste semantically matched objects into every image");
  CommonDatasetArgs aug_ds;
  aug_ds.attach(aug_cmd);
  std::string aug_bank, aug_out, aug_config, aug_embeddings, aug_strategy,
      aug_metric, aug_aggregation, aug_counter_init, aug_ap_table,
      aug_blending;
  int aug_top_n = 0, aug_objects = 0, aug_workers = -1, aug_epochs = 0,
      aug_max_retries = 0, aug_dim = 0;
  std::int64_t aug_epoch_base = 0;
  std::uint64_t aug_seed = 0;
  double aug_probability = -1.0, aug_eps = -1.0, aug_visibility = -1.0;
  std::vector<double> aug_scale_range;
  std::vector<std::int64_t> aug_area_bounds;
  aug_cmd->add_option("--bank", aug_bank, "object bank directory")->required();
  aug_cmd->add_option("--out", aug_out, "output dataset root")->required();
  aug_cmd->add_option("--config", aug_config, "json config file");
  aug_cmd->add_option("--embeddings", aug_embeddings);
  aug_cmd->add_option("--strategy", aug_strategy)
      ->check(CLI::IsMember({"most_similar", "instance_balanced",
                             "baseline_map", "cooccurrence", "random_paste"}));
  aug_cmd->add_option("--top-n", aug_top_n);
  aug_cmd->add_option("--metric", aug_metric)
      ->check(CLI::IsMember({"cosine", "euclidean"}));
  aug_cmd->add_option("--aggregation", aug_aggregation)
      ->check(CLI::IsMember({"max", "mean"}));
  aug_cmd->add_option("--counter-init", aug_counter_init)
      ->check(CLI::IsMember({"zero", "dataset_frequency"}));
  aug_cmd->add_option("--ap-table", aug_ap_table);
  aug_cmd->add_option("--scale-range", aug_scale_range)->expected(2);
  aug_cmd->add_option("--area-bounds", aug_area_bounds)->expected(2);
  aug_cmd->add_option("--epsilon-frac", aug_eps);
  aug_cmd->add_option("--objects-per-image", aug_objects);
  aug_cmd->add_option("--blending", aug_blending)
      ->check(CLI::IsMember({"none", "gaussian_5x5", "averaging_5x5"}));
  aug_cmd->add_option("--visibility-threshold", aug_visibility);
  aug_cmd->add_option("--max-retries", aug_max_retries);
  aug_cmd->add_option("--seed", aug_seed);
  aug_cmd->add_option("--epoch", aug_epoch_base, "starting epoch id");
  aug_cmd->add_option("--epochs", aug_epochs, "epochs to run");
  aug_cmd->add_option("--probability", aug_probability,
                      "chance an image is augmented");
  aug_cmd->add_option("--workers", aug_workers, "0 = hardware concurrency");
  aug_cmd->add_option("--embedding-dim", aug_dim);

  // ---- stats ----
  auto* stats_cmd = app.add_subcommand(
      "stats", "Per-category instance counts and balance metrics");
  CommonDatasetArgs stats_ds;
  stats_ds.attach(stats_cmd);
  std::string stats_augmented, stats_aug_format, stats_json;
  stats_cmd->add_option("--augmented", stats_augmented,
                        "augmented dataset to compare against");
  stats_cmd->add_option("--augmented-format", stats_aug_format,
                        "format of --augmented (defaults to --format)");
  stats_cmd->add_option("--json", stats_json, "also write a json report");

  // ---- preview ----
  auto* prev_cmd = app.add_subcommand(
      "preview", "Side-by-side original/augmented previews");
  CommonDatasetArgs prev_ds;
  prev_ds.attach(prev_cmd);
  std::string prev_bank, prev_out, prev_config, prev_embeddings;
  std::vector<std::string> prev_ids;
  int prev_variants = 1, prev_dim = 0;
  std::uint64_t prev_seed = 0;
  prev_cmd->add_option("--bank", prev_bank)->required();
  prev_cmd->add_option("--out", prev_out)->required();
  prev_cmd->add_option("--config", prev_config);
  prev_cmd->add_option("--embeddings", prev_embeddings);
  prev_cmd->add_option("--id", prev_ids, "image id (repeatable)")->required();
  prev_cmd->add_option("--n-variants", prev_variants,
                       "instances of the chosen category per image");
  prev_cmd->add_option("--seed", prev_seed);
  prev_cmd->add_option("--embedding-dim", prev_dim);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*bank_cmd) {
      AugmentationConfig cfg;
      if (bank_dim > 0) cfg.embedding_dim = bank_dim;
      resolve_embedding_path(cfg, bank_embeddings);
      EmbeddingStore store = load_embeddings_for(cfg);
      BuildBankRun run{bank_ds.manifest(), MaskSource::parse(bank_masks),
                       bank_out};
      BankBuildReport report = run_build_bank(run, store);
      std::size_t kept = 0;
      for (const auto& [cat, n] : report.per_category) kept += n;
      std::cout << "bank written to " << bank_out << ": " << kept
                << " entries over " << report.per_category.size()
                << " categories (" << report.skipped.size() << " skipped)\n";
      return 0;
    }

    if (*aug_cmd) {
      AugmentationConfig cfg;
      if (!aug_config.empty()) cfg = AugmentationConfig::load_file(aug_config);
      if (aug_cmd->count("--strategy")) cfg.strategy = aug_strategy;
      if (aug_cmd->count("--top-n")) cfg.top_n = aug_top_n;
      if (aug_cmd->count("--metric")) cfg.metric = aug_metric;
      if (aug_cmd->count("--aggregation")) cfg.aggregation = aug_aggregation;
      if (aug_cmd->count("--counter-init")) cfg.counter_init = aug_counter_init;
      if (aug_cmd->count("--ap-table")) cfg.ap_table_path = aug_ap_table;
      if (aug_cmd->count("--scale-range")) {
        cfg.scale_lo = aug_scale_range[0];
        cfg.scale_hi = aug_scale_range[1];
      }
      if (aug_cmd->count("--area-bounds")) {
        cfg.area_min = aug_area_bounds[0];
        cfg.area_max = aug_area_bounds[1];
      }
      if (aug_cmd->count("--epsilon-frac")) cfg.epsilon_frac = aug_eps;
      if (aug_cmd->count("--objects-per-image"))
        cfg.objects_per_image = aug_objects;
      if (aug_cmd->count("--blending")) cfg.blending = aug_blending;
      if (aug_cmd->count("--visibility-threshold"))
        cfg.visibility_threshold = aug_visibility;
      if (aug_cmd->count("--max-retries")) cfg.max_retries = aug_max_retries;
      if (aug_cmd->count("--seed")) cfg.seed = aug_seed;
      if (aug_cmd->count("--epoch")) cfg.epoch_base = aug_epoch_base;
      if (aug_cmd->count("--epochs")) cfg.epochs = aug_epochs;
      if (aug_cmd->count("--probability")) cfg.probability = aug_probability;
      if (aug_cmd->count("--workers")) cfg.workers = aug_workers;
      if (aug_cmd->count("--embedding-dim")) cfg.embedding_dim = aug_dim;
      resolve_embedding_path(cfg, aug_embeddings);

      AugmentRun run{aug_ds.manifest(), aug_bank, aug_out, cfg};
      std::vector<RunReport> reports = run_augment(run);
      for (const auto& r : reports) {
        std::cout << "epoch " << r.epoch << ": " << r.pastes << " pastes over "
                  << r.images_processed << " images ("
                  << r.images_skipped << " skipped, "
                  << r.occlusion_removals << " annotations removed) in "
                  << r.wall_time_seconds << " s\n";
        std::cout << "  fingerprint " << r.config_fingerprint << "\n";
      }
      return 0;
    }

    if (*stats_cmd) {
      DatasetIndex index = read_dataset_index(stats_ds.manifest());
      CategoryStats before = dataset_stats(index);
      print_stats("dataset", before);
      Json out = Json::object();
      out["dataset"] = before.to_json();
      if (!stats_augmented.empty()) {
        std::string fmt = stats_aug_format.empty() ? stats_ds.format
                                                   : stats_aug_format;
        DatasetManifest am = make_manifest(parse_format(fmt), stats_augmented);
        CategoryStats after = dataset_stats(read_dataset_index(am));
        print_stats("augmented", after);
        out["augmented"] = after.to_json();
      }
      if (!stats_json.empty()) {
        std::ofstream f(stats_json);
        if (!f) throw IoError("cannot write " + stats_json);
        f << out.dump(1) << "\n";
      }
      return 0;
    }

    if (*prev_cmd) {
      AugmentationConfig cfg;
      if (!prev_config.empty())
        cfg = AugmentationConfig::load_file(prev_config);
      if (prev_cmd->count("--seed")) cfg.seed = prev_seed;
      if (prev_dim > 0) cfg.embedding_dim = prev_dim;
      resolve_embedding_path(cfg, prev_embeddings);
      PreviewRun run{prev_ds.manifest(), prev_bank, cfg, prev_ids,
                     prev_variants, prev_out};
      Json summary = run_preview(run);
      for (const auto& f : summary["files"])
        std::cout << f["file"].get<std::string>() << "  ["
                  << f["category"].get<std::string>() << " / "
                  << f["entry_id"].get<std::string>() << "] "
                  << f["status"].get<std::string>() << "\n";
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
