#include "sempaste/annotations.hpp"

#include <filesystem>
#include <fstream>

#include "dataset_io_detail.hpp"
#include "sempaste/errors.hpp"
#include "sempaste/image_codec.hpp"

namespace fs = std::filesystem;

namespace sempaste {

DatasetFormat parse_format(const std::string& name) {
  if (name == "coco") return DatasetFormat::coco_json;
  if (name == "voc") return DatasetFormat::voc_xml;
  throw UsageError("unknown dataset format: \"" + name +
                   "\" (expected coco or voc)");
}

std::string to_string(DatasetFormat f) {
  return f == DatasetFormat::coco_json ? "coco" : "voc";
}

namespace detail {

std::optional<std::string> bbox_violation(const Box& b, int width,
                                          int height) {
  constexpr double tol = 1e-6;
  if (b.w <= 0 || b.h <= 0) return "bbox has non-positive size";
  if (b.x < -tol || b.y < -tol) return "bbox origin outside image";
  if (b.x + b.w > width + tol)
    return "bbox exceeds image width (x+w > W)";
  if (b.y + b.h > height + tol)
    return "bbox exceeds image height (y+h > H)";
  return std::nullopt;
}

Mask full_frame_mask(const RegionMask& rm, int width, int height) {
  Mask out = Mask::Zero(height, width);
  IntRect r = intersect(rm.rect(), IntRect{0, 0, width, height});
  for (int y = 0; y < r.h; ++y)
    for (int x = 0; x < r.w; ++x)
      out(r.y + y, r.x + x) = rm.bits(r.y + y - rm.y, r.x + x - rm.x);
  return out;
}

std::string file_stem(const std::string& file_name) {
  return fs::path(file_name).stem().string();
}

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

DatasetManifest make_manifest(DatasetFormat format,
                              const std::string& dataset_path,
                              const std::string& image_root_override) {
  DatasetManifest m;
  m.format = format;
  if (format == DatasetFormat::coco_json) {
    m.annotation_source = dataset_path;
    if (!image_root_override.empty()) {
      m.image_root = image_root_override;
    } else {
      fs::path dir = fs::path(dataset_path).parent_path();
      if (dir.empty()) dir = ".";
      m.image_root =
          fs::exists(dir / "images") ? (dir / "images").string() : dir.string();
    }
  } else {
    fs::path root(dataset_path);
    m.annotation_source = (root / "Annotations").string();
    m.image_root = !image_root_override.empty()
                       ? image_root_override
                       : (root / "JPEGImages").string();
    if (fs::exists(root / "SegmentationObject"))
      m.gt_mask_root = (root / "SegmentationObject").string();
  }
  return m;
}

DatasetIndex read_dataset_index(const DatasetManifest& manifest) {
  DatasetIndex index = manifest.format == DatasetFormat::coco_json
                           ? detail::read_coco_index(manifest)
                           : detail::read_voc_index(manifest);
  for (auto& img : index.images) {
    int next_id = 1;
    for (auto& obj : img.objects) obj.instance_id = next_id++;
  }
  return index;
}

void load_pixels(const DatasetManifest& manifest, AnnotatedImage& image) {
  fs::path path = fs::path(manifest.image_root) / image.file_name;
  image.pixels = read_image(path.string());
  if (image.width == 0 && image.height == 0) {
    image.width = image.pixels.width();
    image.height = image.pixels.height();
  }
  if (image.pixels.width() != image.width ||
      image.pixels.height() != image.height)
    throw DataError("image " + image.id + ": decoded size " +
                    std::to_string(image.pixels.width()) + "x" +
                    std::to_string(image.pixels.height()) +
                    " does not match declared " + std::to_string(image.width) +
                    "x" + std::to_string(image.height));
}

DatasetReader::DatasetReader(const DatasetManifest& manifest)
    : manifest_(manifest), index_(read_dataset_index(manifest)) {}

std::optional<AnnotatedImage> DatasetReader::next() {
  while (pos_ < index_.images.size()) {
    AnnotatedImage img = index_.images[pos_++];
    try {
      load_pixels(manifest_, img);
      return img;
    } catch (const std::exception& e) {
      index_.errors.push_back({img.id, e.what()});
    }
  }
  return std::nullopt;
}

DatasetWriter::DatasetWriter(const DatasetManifest& source,
                             const DatasetIndex& index, std::string out_root)
    : source_(source), index_(&index), out_root_(std::move(out_root)) {
  fs::create_directories(out_root_);
  fs::create_directories(fs::path(out_root_) / image_dir_name());
  if (source_.format == DatasetFormat::voc_xml)
    fs::create_directories(fs::path(out_root_) / "Annotations");
}

std::string DatasetWriter::image_dir_name() const {
  return source_.format == DatasetFormat::voc_xml ? "JPEGImages" : "images";
}

std::string DatasetWriter::write_image(const AnnotatedImage& final_image) {
  std::string out_name = detail::file_stem(final_image.file_name) + ".png";
  fs::path path = fs::path(out_root_) / image_dir_name() / out_name;
  write_png(path.string(), final_image.pixels);
  std::lock_guard<std::mutex> lock(mutex_);
  written_[final_image.id] = FinalRecord{out_name, final_image.objects};
  return path.string();
}

void DatasetWriter::finalize() {
  std::map<std::string, detail::FinalImage> finals;
  for (auto& [id, rec] : written_)
    finals[id] = detail::FinalImage{rec.file_name, rec.objects};
  if (source_.format == DatasetFormat::coco_json)
    detail::write_coco_annotations(*index_, finals, out_root_);
  else
    detail::write_voc_annotations(*index_, finals, out_root_);
}

}  // namespace sempaste
