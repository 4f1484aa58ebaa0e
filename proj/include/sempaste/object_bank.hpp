#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sempaste/annotations.hpp"
#include "sempaste/embedding.hpp"
#include "sempaste/rng.hpp"
#include "sempaste/types.hpp"

namespace sempaste {

struct BankEntry {
  std::string id;
  std::string category;
  Vec embedding;
  Image crop;
  Mask mask;  // same size as crop, at least one 1-pixel
  std::string source_image_id;
  IntRect source_bbox;
};

enum class MaskSourceKind { ground_truth, external_dir };

struct MaskSource {
  MaskSourceKind kind = MaskSourceKind::ground_truth;
  std::string dir;

  static MaskSource ground_truth() { return {}; }
  static MaskSource external(std::string d) {
    return {MaskSourceKind::external_dir, std::move(d)};
  }
  // CLI convention: "gt" or a directory of class-indexed label images.
  static MaskSource parse(const std::string& arg);
};

// Produces the binary instance mask restricted to an object's bbox.
// Ground truth uses annotation-embedded masks (or, for voc, the
// instance-indexed label images); an external directory holds one
// class-indexed label image per source image, where the instance is taken
// as the connected region of the class with the largest bbox overlap.
class MaskProvider {
 public:
  MaskProvider(MaskSource source, const DatasetManifest& manifest,
               const std::map<std::string, int>& category_ids);

  std::optional<Mask> mask_in_bbox(const AnnotatedImage& image,
                                   int object_index, const IntRect& bbox,
                                   std::string* why) const;

 private:
  MaskSource source_;
  DatasetManifest manifest_;
  std::map<std::string, int> category_ids_;
  mutable std::string cached_id_;
  mutable std::optional<PlaneU8> cached_plane_;

  const PlaneU8* label_plane(const AnnotatedImage& image,
                             const std::string& root, std::string* why) const;
};

// An object that cannot become a usable entry; build logs these and moves
// on.
struct ExtractSkip : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Crop image and mask to the object's bounding box and resolve its label.
// Throws ExtractSkip (too small / empty mask) or UnresolvedLabelError.
BankEntry extract_entry(const AnnotatedImage& image, int object_index,
                        const MaskProvider& masks,
                        const EmbeddingStore& store);

class ObjectBank {
 public:
  void add(BankEntry entry);

  std::size_t size() const { return entries_.size(); }
  const std::vector<BankEntry>& entries() const { return entries_; }
  const std::vector<std::string>& categories() const { return categories_; }
  bool has_category(const std::string& category) const;
  const Vec& category_embedding(const std::string& category) const;
  const std::vector<std::size_t>& bucket(const std::string& category) const;

  // Uniform draw within a category, driven solely by `rng`.
  const BankEntry& sample(const std::string& category, RngStream& rng) const;
  // Up to k entries without repetition (cycles if k exceeds the bucket).
  std::vector<const BankEntry*> sample_distinct(const std::string& category,
                                                std::size_t k,
                                                RngStream& rng) const;

  // Bank directory: manifest + crops/<id>.img + masks/<id>.mask.
  void save(const std::string& dir) const;
  static ObjectBank load(const std::string& dir, const EmbeddingStore& store);

 private:
  std::vector<BankEntry> entries_;
  std::map<std::string, std::vector<std::size_t>> by_category_;
  std::vector<std::string> categories_;  // sorted
};

struct SkippedObject {
  std::string image_id;
  int object_index = -1;
  std::string category;
  std::string reason;
};

struct BankBuildReport {
  std::size_t images_seen = 0;
  std::map<std::string, std::size_t> per_category;
  std::vector<SkippedObject> skipped;

  Json to_json() const;
};

// One entry per labeled object that passes extraction; persists the bank to
// out_dir and writes a build report beside it. Fatal only when no object at
// all survives.
ObjectBank build_bank(const DatasetManifest& manifest,
                      const EmbeddingStore& store, const MaskSource& masks,
                      const std::string& out_dir,
                      BankBuildReport* report = nullptr);

}  // namespace sempaste
