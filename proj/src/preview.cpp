#include <array>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>

#include "sempaste/errors.hpp"
#include "sempaste/image_codec.hpp"
#include "sempaste/pipeline.hpp"

namespace fs = std::filesystem;

namespace sempaste {

namespace {

// 5x7 glyphs, one byte per row, low 5 bits used.
const std::map<char, std::array<std::uint8_t, 7>>& font() {
  static const std::map<char, std::array<std::uint8_t, 7>> f = {
      {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
      {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
      {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
      {'D', {0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E}},
      {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
      {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
      {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
      {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
      {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
      {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
      {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
      {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
      {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
      {'N', {0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11}},
      {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
      {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
      {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
      {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
      {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
      {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
      {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
      {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
      {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x1B, 0x11}},
      {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
      {'Y', {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04}},
      {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
      {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
      {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
      {'2', {0x0E, 0x11, 0x01, 0x06, 0x08, 0x10, 0x1F}},
      {'3', {0x0E, 0x11, 0x01, 0x06, 0x01, 0x11, 0x0E}},
      {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
      {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
      {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
      {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
      {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
      {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
      {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
      {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}},
      {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
      {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
  };
  return f;
}

void put_pixel(Image& im, int x, int y, std::uint8_t r, std::uint8_t g,
               std::uint8_t b) {
  if (x < 0 || y < 0 || x >= im.width() || y >= im.height()) return;
  im.ch[0](y, x) = r;
  im.ch[1](y, x) = g;
  im.ch[2](y, x) = b;
}

void draw_box_outline(Image& im, const IntRect& r, int thickness) {
  for (int t = 0; t < thickness; ++t) {
    for (int x = r.x - t; x <= r.x1() + t - 1; ++x) {
      put_pixel(im, x, r.y - t, 255, 64, 64);
      put_pixel(im, x, r.y1() - 1 + t, 255, 64, 64);
    }
    for (int y = r.y - t; y <= r.y1() + t - 1; ++y) {
      put_pixel(im, r.x - t, y, 255, 64, 64);
      put_pixel(im, r.x1() - 1 + t, y, 255, 64, 64);
    }
  }
}

void draw_label(Image& im, int x, int y, const std::string& text) {
  const auto& glyphs = font();
  int cx = x;
  for (char raw : text) {
    char c = static_cast<char>(std::toupper(static_cast<unsigned char>(raw)));
    auto it = glyphs.find(c);
    if (it == glyphs.end()) it = glyphs.find(' ');
    for (int row = 0; row < 7; ++row)
      for (int col = 0; col < 5; ++col)
        if (it->second[row] & (0x10 >> col))
          put_pixel(im, cx + col, y + row, 255, 255, 0);
    cx += 6;
  }
}

Image side_by_side(const Image& left, const Image& right) {
  Image out(left.width() + right.width(), std::max(left.height(),
                                                   right.height()));
  for (int c = 0; c < 3; ++c) {
    out.ch[c].block(0, 0, left.height(), left.width()) = left.ch[c];
    out.ch[c].block(0, left.width(), right.height(), right.width()) =
        right.ch[c];
  }
  return out;
}

}  // namespace

Json run_preview(const PreviewRun& run) {
  const AugmentationConfig& config = run.config;
  config.validate();
  if (run.image_ids.empty()) throw UsageError("preview needs image ids");
  if (run.n_variants < 1) throw UsageError("n_variants must be at least 1");

  EmbeddingStore store = load_embeddings_for(config);
  DatasetIndex index = read_dataset_index(run.manifest);
  ObjectBank bank = ObjectBank::load(run.bank_dir, store);
  AugmentOptions options = config.augment_options();
  if (options.strategy.kind == StrategyKind::baseline_map &&
      !config.ap_table_path.empty())
    options.strategy.per_category_ap = parse_ap_table(config.ap_table_path);

  fs::create_directories(run.out_dir);

  CategoryCounter counter(config.epoch_base);
  Json summary = Json::object();
  Json files = Json::array();

  for (const auto& wanted : run.image_ids) {
    const AnnotatedImage* found = nullptr;
    for (const auto& img : index.images)
      if (img.id == wanted) {
        found = &img;
        break;
      }
    if (!found) throw DataError("unknown image id: " + wanted);

    AnnotatedImage img = *found;
    load_pixels(run.manifest, img);
    if (img.objects.empty())
      throw DataError("image " + wanted +
                      " has no annotations to anchor a paste");

    RngStream rng = derive_stream(config.seed, config.epoch_base, img.id);
    rng.uniform();  // mirrors the augment path's probability draw
    std::vector<SimilarityPair> pairs =
        score_all_pairs(img, bank, store, options.metric);
    std::vector<std::string> host_categories;
    for (const auto& o : img.objects) host_categories.push_back(o.category);
    MatchDecision decision =
        select(pairs, options.strategy, counter, rng, host_categories);

    std::vector<const BankEntry*> entries = bank.sample_distinct(
        decision.bank_category, static_cast<std::size_t>(run.n_variants), rng);

    for (int v = 0; v < run.n_variants; ++v) {
      const BankEntry& entry = *entries[v];
      RngStream vrng = derive_stream(
          config.seed, config.epoch_base, img.id + "#v" + std::to_string(v));
      std::string note;
      Image pane = img.pixels;
      std::string file_name =
          run.n_variants == 1
              ? img.id + "_preview.png"
              : img.id + "_preview_v" + std::to_string(v) + ".png";

      auto dims = draw_scale(entry, img.width, options.params, vrng);
      std::optional<Placement> placement;
      if (dims)
        placement = draw_placement(
            img.objects[decision.host_object_index].bbox,
            decision.host_object_index, img.width, img.height, dims->first,
            dims->second, options.params, vrng);
      if (dims && placement) {
        auto [crop, mask] =
            resize_instance(entry.crop, entry.mask, dims->first, dims->second);
        if (mask_area(mask) > 0) {
          try {
            CompositeResult step =
                composite(img, crop, mask, *placement, options.params,
                          decision.bank_category, entry.id, decision.score);
            pane = step.image;
            const auto& pasted = step.annotations.back();
            IntRect box = to_int_rect(pasted.bbox);
            draw_box_outline(pane, box, 2);
            int ty = box.y >= 10 ? box.y - 9 : box.y1() + 2;
            draw_label(pane, box.x, ty, pasted.category);
            note = "ok";
          } catch (const DataError& e) {
            note = e.what();
          }
        } else {
          note = "instance vanished at this scale";
        }
      } else {
        note = "unplaceable at this seed";
      }

      Image out = side_by_side(img.pixels, pane);
      fs::path path = fs::path(run.out_dir) / file_name;
      write_png(path.string(), out);

      Json f = Json::object();
      f["file"] = file_name;
      f["image_id"] = img.id;
      f["category"] = decision.bank_category;
      f["entry_id"] = entry.id;
      f["status"] = note;
      files.push_back(std::move(f));
    }
  }

  summary["files"] = std::move(files);
  std::ofstream rep(fs::path(run.out_dir) / "preview_report.json");
  if (rep) rep << summary.dump(1) << "\n";
  return summary;
}

}  // namespace sempaste
