#include "sempaste/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include "sempaste/errors.hpp"

namespace fs = std::filesystem;

namespace sempaste {

namespace {

// Runs each ticket's critical section in ascending ticket order, so the
// shared category counter sees the same update sequence no matter how many
// workers are scheduled.
class OrderedGate {
 public:
  template <typename F>
  void run_in_order(std::size_t ticket, F&& f) {
    std::unique_lock<std::mutex> lock(mutex_);
    cv_.wait(lock, [&] { return next_ == ticket; });
    f();
    ++next_;
    cv_.notify_all();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::size_t next_ = 0;
};

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed,
                                     std::int64_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  RngStream rng = derive_stream(seed, epoch, "image-order");
  for (std::size_t i = 0; i + 1 < n; ++i) {
    std::size_t j = i + rng.uniform_index(n - i);
    std::swap(order[i], order[j]);
  }
  return order;
}

void check_labels_resolve(const DatasetIndex& index,
                          const EmbeddingStore& store) {
  std::set<std::string> unresolved;
  for (const auto& cat : index.categories)
    if (!store.resolves(cat)) unresolved.insert(cat);
  if (!unresolved.empty()) {
    std::string msg = "unresolved category labels:";
    for (const auto& c : unresolved) msg += " \"" + c + "\"";
    msg += "; extend the substitution table";
    throw UnresolvedLabelError(msg);
  }
}

std::map<std::string, std::int64_t> dataset_frequencies(
    const DatasetIndex& index) {
  std::map<std::string, std::int64_t> freq;
  for (const auto& img : index.images)
    for (const auto& obj : img.objects) ++freq[obj.category];
  return freq;
}

}  // namespace

Json RunReport::to_json() const {
  Json j = Json::object();
  j["epoch"] = epoch;
  j["config_fingerprint"] = config_fingerprint;
  j["images_processed"] = images_processed;
  j["images_skipped"] = images_skipped;
  j["pastes"] = pastes;
  j["occlusion_removals"] = occlusion_removals;
  Json pc = Json::object();
  for (const auto& [k, v] : paste_counts) pc[k] = v;
  j["paste_counts"] = std::move(pc);
  Json sr = Json::object();
  for (const auto& [k, v] : skip_reasons) sr[k] = v;
  j["skip_reasons"] = std::move(sr);
  Json cf = Json::object();
  for (const auto& [k, v] : counter_final) cf[k] = v;
  j["counter_final"] = std::move(cf);
  Json fl = Json::object();
  for (const auto& [k, v] : similarity_flops_per_image) fl[k] = v;
  j["similarity_flops_per_image"] = std::move(fl);
  j["total_similarity_flops"] = total_similarity_flops;
  Json errs = Json::array();
  for (const auto& e : record_errors) {
    Json r = Json::object();
    r["where"] = e.where;
    r["message"] = e.message;
    errs.push_back(std::move(r));
  }
  j["record_errors"] = std::move(errs);
  return j;
}

BankBuildReport run_build_bank(const BuildBankRun& run,
                               const EmbeddingStore& store) {
  BankBuildReport report;
  build_bank(run.manifest, store, run.masks, run.out_dir, &report);
  return report;
}

std::vector<RunReport> run_augment(const AugmentRun& run) {
  const AugmentationConfig& config = run.config;
  config.validate();

  EmbeddingStore store = load_embeddings_for(config);
  DatasetIndex index = read_dataset_index(run.manifest);
  if (index.images.empty()) throw DataError("dataset has no images");
  check_labels_resolve(index, store);
  ObjectBank bank = ObjectBank::load(run.bank_dir, store);

  AugmentOptions options = config.augment_options();
  if (options.strategy.kind == StrategyKind::baseline_map) {
    if (config.ap_table_path.empty())
      throw ConfigError("baseline_map strategy requires ap_table_path");
    options.strategy.per_category_ap = parse_ap_table(config.ap_table_path);
  }
  if (options.strategy.kind == StrategyKind::cooccurrence) {
    fs::path cache = fs::path(run.bank_dir) / "cooccurrence.json";
    if (fs::exists(cache)) {
      std::ifstream in(cache);
      options.strategy.cooccurrence = std::make_shared<CooccurrenceTable>(
          CooccurrenceTable::from_json(Json::parse(in)));
    } else {
      auto table = std::make_shared<CooccurrenceTable>(
          CooccurrenceTable::from_index(index));
      std::ofstream out(cache);
      if (out) out << table->to_json().dump(1) << "\n";
      options.strategy.cooccurrence = table;
    }
  }

  const std::map<std::string, std::int64_t> initial_counts =
      config.counter_init == "dataset_frequency" ? dataset_frequencies(index)
                                                 : std::map<std::string,
                                                            std::int64_t>{};

  unsigned hw = std::thread::hardware_concurrency();
  const std::size_t n_workers = std::max(
      1, config.workers > 0 ? config.workers : static_cast<int>(hw ? hw : 1));

  CategoryCounter counter(config.epoch_base - 1);
  std::vector<RunReport> reports;

  for (int ei = 0; ei < config.epochs; ++ei) {
    const std::int64_t epoch = config.epoch_base + ei;
    const auto t0 = std::chrono::steady_clock::now();

    counter.reset_epoch(epoch);
    counter.seed(initial_counts);

    fs::path out_root = config.epochs > 1
                            ? fs::path(run.out_root) /
                                  ("epoch_" + std::to_string(epoch))
                            : fs::path(run.out_root);
    fs::create_directories(out_root);
    const fs::path marker = out_root / ".incomplete";
    {
      std::ofstream m(marker);
      if (!m) throw IoError("cannot write into " + out_root.string());
    }

    DatasetWriter writer(run.manifest, index, out_root.string());

    RunReport report;
    report.epoch = epoch;
    report.config_fingerprint = config.fingerprint();
    report.record_errors = index.errors;

    std::vector<std::size_t> order =
        epoch_order(index.images.size(), config.seed, epoch);

    OrderedGate gate;
    std::atomic<std::size_t> next_ticket{0};
    std::mutex report_mutex;
    std::vector<std::string> fatal;

    auto worker = [&]() {
      while (true) {
        std::size_t ticket = next_ticket.fetch_add(1);
        if (ticket >= order.size()) return;
        const AnnotatedImage& record = index.images[order[ticket]];

        AnnotatedImage img = record;
        RngStream rng = derive_stream(config.seed, epoch, img.id);
        const bool augment_this = rng.uniform() < config.probability;

        std::string decode_error;
        std::vector<SimilarityPair> pairs;
        try {
          load_pixels(run.manifest, img);
          if (augment_this && !img.objects.empty())
            pairs = score_all_pairs(img, bank, store, options.metric);
        } catch (const std::exception& e) {
          decode_error = e.what();
        }

        std::vector<MatchDecision> decisions;
        gate.run_in_order(ticket, [&] {
          if (decode_error.empty() && !pairs.empty())
            decisions = decide_pastes(pairs, img, options, counter, rng);
        });

        if (!decode_error.empty()) {
          std::lock_guard<std::mutex> lock(report_mutex);
          ++report.images_skipped;
          ++report.skip_reasons["unreadable_image"];
          report.record_errors.push_back({img.id, decode_error});
          continue;
        }

        CompositeResult result;
        if (!decisions.empty()) {
          result = realize_pastes(img, decisions, bank, options, rng);
        } else {
          result.image = img.pixels;
          result.annotations = img.objects;
          result.skipped = true;
          result.skip_reasons.push_back(
              img.objects.empty() ? "no annotations to anchor a paste"
                                  : "not selected for augmentation");
        }

        AnnotatedImage final_image = img;
        final_image.pixels = std::move(result.image);
        final_image.objects = std::move(result.annotations);

        try {
          writer.write_image(final_image);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(report_mutex);
          fatal.push_back(e.what());
          return;
        }

        std::uint64_t flops =
            img.objects.empty()
                ? 0
                : estimate_similarity_flops(
                      static_cast<std::int64_t>(bank.categories().size()),
                      static_cast<std::int64_t>(img.objects.size()),
                      store.dimension());

        std::lock_guard<std::mutex> lock(report_mutex);
        ++report.images_processed;
        if (result.skipped) ++report.images_skipped;
        for (const auto& p : result.pastes) {
          ++report.pastes;
          ++report.paste_counts[p.category];
        }
        for (const auto& r : result.skip_reasons)
          ++report.skip_reasons[r.substr(0, r.find(':'))];
        report.occlusion_removals +=
            static_cast<std::int64_t>(img.objects.size()) +
            static_cast<std::int64_t>(result.pastes.size()) -
            static_cast<std::int64_t>(final_image.objects.size());
        report.similarity_flops_per_image[img.id] = flops;
        report.total_similarity_flops += flops;
      }
    };

    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    if (!fatal.empty())
      throw IoError("augmentation aborted: " + fatal.front());

    // decode failures land in worker order; keep reports reproducible
    std::sort(report.record_errors.begin(), report.record_errors.end(),
              [](const RecordError& a, const RecordError& b) {
                return a.where != b.where ? a.where < b.where
                                          : a.message < b.message;
              });

    writer.finalize();
    report.counter_final = counter.counts();
    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    std::ofstream rep(out_root / "report.json");
    if (!rep) throw IoError("cannot write report.json in " +
                            out_root.string());
    rep << report.to_json().dump(1) << "\n";
    rep.close();

    fs::remove(marker);
    reports.push_back(std::move(report));
  }
  return reports;
}

std::int64_t CategoryStats::total() const {
  std::int64_t t = 0;
  for (const auto& [k, v] : counts) t += v;
  return t;
}

double CategoryStats::max_min_ratio() const {
  if (counts.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::int64_t lo = std::numeric_limits<std::int64_t>::max(), hi = 0;
  for (const auto& [k, v] : counts) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo == 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(hi) / static_cast<double>(lo);
}

double CategoryStats::entropy_bits() const {
  const double t = static_cast<double>(total());
  if (t <= 0) return 0.0;
  double h = 0.0;
  for (const auto& [k, v] : counts) {
    if (v == 0) continue;
    double p = static_cast<double>(v) / t;
    h -= p * std::log2(p);
  }
  return h;
}

Json CategoryStats::to_json() const {
  Json j = Json::object();
  Json c = Json::object();
  for (const auto& [k, v] : counts) c[k] = v;
  j["counts"] = std::move(c);
  j["total"] = total();
  double ratio = max_min_ratio();
  j["max_min_ratio"] = std::isfinite(ratio) ? Json(ratio) : Json("inf");
  j["entropy_bits"] = entropy_bits();
  return j;
}

CategoryStats dataset_stats(const DatasetIndex& index) {
  if (index.images.empty()) throw DataError("dataset has no images");
  CategoryStats stats;
  for (const auto& cat : index.categories) stats.counts[cat] = 0;
  for (const auto& img : index.images)
    for (const auto& obj : img.objects) ++stats.counts[obj.category];
  return stats;
}

}  // namespace sempaste
