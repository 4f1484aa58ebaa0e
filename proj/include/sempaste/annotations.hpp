#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sempaste/types.hpp"

namespace sempaste {

using Json = nlohmann::ordered_json;

struct ObjectAnnotation {
  std::string category;
  Box bbox;  // (x, y, w, h), 0-based top-left, pixel units
  std::optional<RegionMask> mask;
  bool synthetic = false;
  bool mask_modified = false;  // occlusion changed mask/bbox since read
  int instance_id = 0;         // stable per-image id, 1-based
  Json extra;  // source fields this tool does not touch, passed through
};

struct AnnotatedImage {
  std::string id;  // voc: xml stem; coco: decimal image id
  std::string file_name;
  int width = 0, height = 0;
  Image pixels;  // empty until load_pixels
  std::vector<ObjectAnnotation> objects;
  Json extra;  // coco image record passthrough
};

enum class DatasetFormat { coco_json, voc_xml };

DatasetFormat parse_format(const std::string& name);
std::string to_string(DatasetFormat f);

struct DatasetManifest {
  DatasetFormat format = DatasetFormat::coco_json;
  std::string image_root;
  std::string annotation_source;  // coco: json file; voc: Annotations dir
  std::string
      gt_mask_root;  // voc only: SegmentationObject dir (instance-indexed)
  std::vector<std::string> categories;
};

// Builds a manifest from the CLI's --dataset path convention: for coco the
// path is the annotation json (images beside it unless overridden), for voc
// it is the dataset root containing Annotations/ and JPEGImages/.
DatasetManifest make_manifest(DatasetFormat format,
                              const std::string& dataset_path,
                              const std::string& image_root_override = "");

struct RecordError {
  std::string where;  // file / image id / offset
  std::string message;
};

// Parsed annotations for a whole dataset; pixels are decoded on demand so
// workers can stream them.
struct DatasetIndex {
  std::vector<AnnotatedImage> images;
  std::vector<std::string> categories;       // unique, dataset order
  std::map<std::string, int> category_ids;   // name -> numeric id
  std::vector<RecordError> errors;
  Json coco_header;      // info/licenses/categories passthrough
  long long max_coco_annotation_id = 0;
};

DatasetIndex read_dataset_index(const DatasetManifest& manifest);

// Decodes pixels for one image record, validating the declared size.
void load_pixels(const DatasetManifest& manifest, AnnotatedImage& image);

// Full streaming read: index + pixel decode, one image at a time.
class DatasetReader {
 public:
  explicit DatasetReader(const DatasetManifest& manifest);

  std::optional<AnnotatedImage> next();
  const DatasetIndex& index() const { return index_; }
  const std::vector<RecordError>& errors() const { return index_.errors; }

 private:
  DatasetManifest manifest_;
  DatasetIndex index_;
  std::size_t pos_ = 0;
};

// Writes images losslessly (png) plus annotations in the source format.
// write_image may be called from several workers for distinct images;
// finalize is single-writer.
class DatasetWriter {
 public:
  DatasetWriter(const DatasetManifest& source, const DatasetIndex& index,
                std::string out_root);

  // `final` carries the composited pixels and the final object list.
  // Returns the written image path.
  std::string write_image(const AnnotatedImage& final_image);

  // Emits annotations.json / annotations/*.xml in dataset order. Category
  // names absent from the source dataset (cross-dataset banks) get fresh
  // ids.
  void finalize();

  const std::string& out_root() const { return out_root_; }

 private:
  struct FinalRecord {
    std::string file_name;
    std::vector<ObjectAnnotation> objects;
  };

  std::string image_dir_name() const;

  DatasetManifest source_;
  const DatasetIndex* index_;
  std::string out_root_;
  std::map<std::string, FinalRecord> written_;  // image id -> final state
  std::mutex mutex_;
};

// VOC-style XML helpers (minimal, element-only).
struct XmlNode {
  std::string tag;
  std::string text;
  std::vector<XmlNode> children;

  const XmlNode* child(const std::string& name) const;
  std::string child_text(const std::string& name,
                         const std::string& fallback = "") const;
};

XmlNode parse_xml(const std::string& content);

}  // namespace sempaste
