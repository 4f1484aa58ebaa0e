#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "sempaste/annotations.hpp"
#include "sempaste/rng.hpp"
#include "sempaste/types.hpp"

namespace sempaste::testing {

// Unique scratch directory, removed on destruction.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string str() const { return path.string(); }
  std::filesystem::path operator/(const std::string& name) const {
    return path / name;
  }
};

void write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

// "token v1 ... vd" lines.
std::string embedding_text(
    const std::vector<std::pair<std::string, std::vector<double>>>& rows);

Image solid_image(int w, int h, std::uint8_t r, std::uint8_t g,
                  std::uint8_t b);
Image random_image(int w, int h, RngStream& rng);
Mask random_mask(int w, int h, double density, RngStream& rng);

struct ToyObject {
  std::string category;
  int x = 0, y = 0, w = 0, h = 0;
};

struct ToyImage {
  std::string name;  // stem, no extension
  int w = 0, h = 0;
  std::vector<ToyObject> objects;
};

// Writes <root>/annotations.json + <root>/images/<name>.png with rectangle
// polygons as segmentation; returns the annotation json path.
std::string write_coco_dataset(const std::filesystem::path& root,
                               const std::vector<ToyImage>& images,
                               bool with_segmentation = true);

// Writes <root>/Annotations/<name>.xml + <root>/JPEGImages/<name>.png, and
// instance-indexed masks under SegmentationObject/ when requested.
void write_voc_dataset(const std::filesystem::path& root,
                       const std::vector<ToyImage>& images,
                       bool with_gt_masks = false);

// Deterministic content hash over every file below root (relative paths).
std::uint64_t tree_digest(const std::filesystem::path& root);

}  // namespace sempaste::testing
