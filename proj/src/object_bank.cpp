#include "sempaste/object_bank.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "dataset_io_detail.hpp"
#include "sempaste/errors.hpp"
#include "sempaste/image_codec.hpp"
#include "sempaste/mask_ops.hpp"

namespace fs = std::filesystem;

namespace sempaste {

MaskSource MaskSource::parse(const std::string& arg) {
  if (arg == "gt") return ground_truth();
  return external(arg);
}

MaskProvider::MaskProvider(MaskSource source, const DatasetManifest& manifest,
                           const std::map<std::string, int>& category_ids)
    : source_(std::move(source)),
      manifest_(manifest),
      category_ids_(category_ids) {}

const PlaneU8* MaskProvider::label_plane(const AnnotatedImage& image,
                                         const std::string& root,
                                         std::string* why) const {
  if (cached_id_ == image.id && cached_plane_) return &*cached_plane_;
  fs::path path = fs::path(root) / (detail::file_stem(image.file_name) + ".png");
  if (!fs::exists(path)) {
    if (why) *why = "mask file missing: " + path.string();
    return nullptr;
  }
  try {
    cached_plane_ = read_plane(path.string());
  } catch (const std::exception& e) {
    if (why) *why = e.what();
    return nullptr;
  }
  cached_id_ = image.id;
  if (cached_plane_->cols() != image.width ||
      cached_plane_->rows() != image.height) {
    if (why) *why = "mask size does not match image: " + path.string();
    cached_plane_.reset();
    return nullptr;
  }
  return &*cached_plane_;
}

std::optional<Mask> MaskProvider::mask_in_bbox(const AnnotatedImage& image,
                                               int object_index,
                                               const IntRect& bbox,
                                               std::string* why) const {
  const ObjectAnnotation& obj = image.objects[object_index];

  if (source_.kind == MaskSourceKind::ground_truth) {
    if (obj.mask) {
      Mask out = Mask::Zero(bbox.h, bbox.w);
      IntRect overlap = intersect(bbox, obj.mask->rect());
      for (int y = 0; y < overlap.h; ++y)
        for (int x = 0; x < overlap.w; ++x)
          out(overlap.y + y - bbox.y, overlap.x + x - bbox.x) =
              obj.mask->bits(overlap.y + y - obj.mask->y,
                             overlap.x + x - obj.mask->x);
      return out;
    }
    if (!manifest_.gt_mask_root.empty()) {
      // instance-indexed label image: object k is value k+1
      const PlaneU8* plane = label_plane(image, manifest_.gt_mask_root, why);
      if (!plane) return std::nullopt;
      Mask out = Mask::Zero(bbox.h, bbox.w);
      for (int y = 0; y < bbox.h; ++y)
        for (int x = 0; x < bbox.w; ++x)
          out(y, x) =
              (*plane)(bbox.y + y, bbox.x + x) == object_index + 1 ? 1 : 0;
      return out;
    }
    if (why) *why = "no ground-truth mask available";
    return std::nullopt;
  }

  const PlaneU8* plane = label_plane(image, source_.dir, why);
  if (!plane) return std::nullopt;
  auto id = category_ids_.find(obj.category);
  if (id == category_ids_.end()) {
    if (why) *why = "category has no class index: " + obj.category;
    return std::nullopt;
  }
  return largest_component_in_roi(*plane,
                                  static_cast<std::uint8_t>(id->second), bbox);
}

BankEntry extract_entry(const AnnotatedImage& image, int object_index,
                        const MaskProvider& masks,
                        const EmbeddingStore& store) {
  const ObjectAnnotation& obj = image.objects[object_index];
  IntRect r = intersect(to_int_rect(obj.bbox),
                        IntRect{0, 0, image.width, image.height});
  if (r.empty()) throw ExtractSkip("bbox rounds to an empty rectangle");
  if (r.w < 8 || r.h < 8)
    throw ExtractSkip("object smaller than 8x8 px");

  std::string why;
  auto mask = masks.mask_in_bbox(image, object_index, r, &why);
  if (!mask)
    throw ExtractSkip(why.empty() ? "no mask available" : why);
  if (mask_area(*mask) == 0)
    throw ExtractSkip("no mask pixels inside bbox");

  BankEntry entry;
  entry.id = image.id + "_" + std::to_string(object_index);
  entry.category = obj.category;
  entry.embedding = store.resolve(obj.category);
  entry.crop = Image(r.w, r.h);
  for (int c = 0; c < 3; ++c)
    entry.crop.ch[c] = image.pixels.ch[c].block(r.y, r.x, r.h, r.w);
  entry.mask = std::move(*mask);
  entry.source_image_id = image.id;
  entry.source_bbox = r;
  return entry;
}

void ObjectBank::add(BankEntry entry) {
  auto& bucket = by_category_[entry.category];
  if (bucket.empty()) {
    categories_.insert(std::upper_bound(categories_.begin(), categories_.end(),
                                        entry.category),
                       entry.category);
  }
  bucket.push_back(entries_.size());
  entries_.push_back(std::move(entry));
}

bool ObjectBank::has_category(const std::string& category) const {
  return by_category_.count(category) > 0;
}

const Vec& ObjectBank::category_embedding(const std::string& category) const {
  return entries_[bucket(category).front()].embedding;
}

const std::vector<std::size_t>& ObjectBank::bucket(
    const std::string& category) const {
  auto it = by_category_.find(category);
  if (it == by_category_.end())
    throw DataError("bank has no category \"" + category + "\"");
  return it->second;
}

const BankEntry& ObjectBank::sample(const std::string& category,
                                    RngStream& rng) const {
  const auto& ids = bucket(category);
  return entries_[ids[rng.uniform_index(ids.size())]];
}

std::vector<const BankEntry*> ObjectBank::sample_distinct(
    const std::string& category, std::size_t k, RngStream& rng) const {
  const auto& ids = bucket(category);
  std::vector<std::size_t> order(ids.begin(), ids.end());
  // partial Fisher-Yates
  for (std::size_t i = 0; i + 1 < order.size() && i < k; ++i) {
    std::size_t j = i + rng.uniform_index(order.size() - i);
    std::swap(order[i], order[j]);
  }
  std::vector<const BankEntry*> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i)
    out.push_back(&entries_[order[i % order.size()]]);
  return out;
}

void ObjectBank::save(const std::string& dir) const {
  fs::create_directories(fs::path(dir) / "crops");
  fs::create_directories(fs::path(dir) / "masks");

  Json manifest = Json::object();
  manifest["version"] = 1;
  Json list = Json::array();
  for (const auto& e : entries_) {
    Json j = Json::object();
    j["id"] = e.id;
    j["category"] = e.category;
    j["source_image_id"] = e.source_image_id;
    j["bbox"] = Json::object();
    j["bbox"]["x"] = e.source_bbox.x;
    j["bbox"]["y"] = e.source_bbox.y;
    j["bbox"]["w"] = e.source_bbox.w;
    j["bbox"]["h"] = e.source_bbox.h;
    list.push_back(std::move(j));

    write_png((fs::path(dir) / "crops" / (e.id + ".img")).string(), e.crop);
    write_mask_png((fs::path(dir) / "masks" / (e.id + ".mask")).string(),
                   e.mask);
  }
  manifest["entries"] = std::move(list);

  std::ofstream out(fs::path(dir) / "manifest");
  if (!out) throw IoError("cannot write bank manifest in " + dir);
  out << manifest.dump(1) << "\n";
  if (!out) throw IoError("bank manifest write failed in " + dir);
}

ObjectBank ObjectBank::load(const std::string& dir,
                            const EmbeddingStore& store) {
  std::ifstream in(fs::path(dir) / "manifest");
  if (!in) throw IoError("cannot open bank manifest in " + dir);
  Json manifest;
  try {
    manifest = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed bank manifest in " + dir + ": " + e.what());
  }

  ObjectBank bank;
  for (const auto& j : manifest["entries"]) {
    BankEntry e;
    e.id = j["id"].get<std::string>();
    e.category = j["category"].get<std::string>();
    e.source_image_id = j["source_image_id"].get<std::string>();
    e.source_bbox = IntRect{j["bbox"]["x"].get<int>(),
                            j["bbox"]["y"].get<int>(),
                            j["bbox"]["w"].get<int>(),
                            j["bbox"]["h"].get<int>()};
    e.embedding = store.resolve(e.category);
    e.crop = read_image((fs::path(dir) / "crops" / (e.id + ".img")).string());
    PlaneU8 m =
        read_plane((fs::path(dir) / "masks" / (e.id + ".mask")).string());
    e.mask = (m > 0).cast<std::uint8_t>();
    if (e.crop.width() != e.mask.cols() || e.crop.height() != e.mask.rows())
      throw DataError("bank entry " + e.id + ": crop/mask size mismatch");
    if (mask_area(e.mask) == 0)
      throw DataError("bank entry " + e.id + ": empty mask");
    bank.add(std::move(e));
  }
  if (bank.size() == 0) throw DataError("bank in " + dir + " is empty");
  return bank;
}

Json BankBuildReport::to_json() const {
  Json j = Json::object();
  j["images_seen"] = images_seen;
  j["per_category"] = Json::object();
  for (const auto& [cat, n] : per_category) j["per_category"][cat] = n;
  Json skips = Json::array();
  for (const auto& s : skipped) {
    Json e = Json::object();
    e["image_id"] = s.image_id;
    e["object_index"] = s.object_index;
    e["category"] = s.category;
    e["reason"] = s.reason;
    skips.push_back(std::move(e));
  }
  j["skipped"] = std::move(skips);
  return j;
}

ObjectBank build_bank(const DatasetManifest& manifest,
                      const EmbeddingStore& store, const MaskSource& masks,
                      const std::string& out_dir, BankBuildReport* report) {
  DatasetIndex index = read_dataset_index(manifest);
  MaskProvider provider(masks, manifest, index.category_ids);

  BankBuildReport local;
  BankBuildReport& rep = report ? *report : local;

  ObjectBank bank;
  for (auto& img : index.images) {
    ++rep.images_seen;
    try {
      load_pixels(manifest, img);
    } catch (const std::exception& e) {
      for (std::size_t k = 0; k < img.objects.size(); ++k)
        rep.skipped.push_back({img.id, static_cast<int>(k),
                               img.objects[k].category,
                               std::string("image unreadable: ") + e.what()});
      continue;
    }
    for (std::size_t k = 0; k < img.objects.size(); ++k) {
      try {
        bank.add(extract_entry(img, static_cast<int>(k), provider, store));
        ++rep.per_category[img.objects[k].category];
      } catch (const ExtractSkip& e) {
        rep.skipped.push_back(
            {img.id, static_cast<int>(k), img.objects[k].category, e.what()});
      } catch (const UnresolvedLabelError& e) {
        rep.skipped.push_back(
            {img.id, static_cast<int>(k), img.objects[k].category, e.what()});
      }
    }
    img.pixels = Image();  // release decoded pixels
  }

  if (bank.size() == 0)
    throw DataError("object bank creation produced zero usable entries");

  if (!out_dir.empty()) {
    bank.save(out_dir);
    std::ofstream out(fs::path(out_dir) / "build_report.json");
    if (!out) throw IoError("cannot write bank build report in " + out_dir);
    out << rep.to_json().dump(1) << "\n";
  }
  return bank;
}

}  // namespace sempaste
