#include <filesystem>
#include <fstream>
#include <map>

#include "dataset_io_detail.hpp"
#include "sempaste/errors.hpp"
#include "sempaste/mask_ops.hpp"

namespace fs = std::filesystem;

namespace sempaste::detail {

namespace {

std::optional<RegionMask> decode_segmentation(const Json& seg, int width,
                                              int height) {
  Mask frame;
  if (seg.is_array()) {
    // polygon list: [[x1,y1,...], ...]
    std::vector<std::vector<double>> polys;
    for (const auto& p : seg) {
      if (!p.is_array()) return std::nullopt;
      polys.push_back(p.get<std::vector<double>>());
    }
    frame = rasterize_polygons(polys, width, height);
  } else if (seg.is_object() && seg.contains("counts") &&
             seg.contains("size")) {
    int h = seg["size"][0].get<int>();
    int w = seg["size"][1].get<int>();
    std::vector<std::uint32_t> counts;
    if (seg["counts"].is_string())
      counts = rle_from_string(seg["counts"].get<std::string>());
    else
      counts = seg["counts"].get<std::vector<std::uint32_t>>();
    frame = rle_decode(counts, w, h);
    if (w != width || h != height)
      throw DataError("rle size does not match image size");
  } else {
    return std::nullopt;
  }
  auto tight = tight_bbox(frame);
  if (!tight) return std::nullopt;
  RegionMask rm;
  rm.x = tight->x;
  rm.y = tight->y;
  rm.bits = frame.block(tight->y, tight->x, tight->h, tight->w);
  return rm;
}

Json rle_json(const RegionMask& rm, int width, int height) {
  Mask frame = full_frame_mask(rm, width, height);
  Json seg = Json::object();
  seg["size"] = Json::array({height, width});
  seg["counts"] = rle_encode(frame);
  return seg;
}

}  // namespace

DatasetIndex read_coco_index(const DatasetManifest& manifest) {
  std::ifstream in(manifest.annotation_source);
  if (!in)
    throw IoError("cannot open annotation file: " +
                  manifest.annotation_source);
  Json root;
  try {
    root = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed coco json " + manifest.annotation_source +
                    ": " + e.what());
  }

  DatasetIndex index;
  std::map<long long, std::string> cat_names;
  if (root.contains("categories")) {
    for (const auto& c : root["categories"]) {
      long long id = c["id"].get<long long>();
      std::string name = c["name"].get<std::string>();
      cat_names[id] = name;
      index.categories.push_back(name);
      index.category_ids[name] = static_cast<int>(id);
    }
  }
  for (const auto& key : {"info", "licenses", "categories"})
    if (root.contains(key)) index.coco_header[key] = root[key];

  std::map<long long, std::size_t> image_pos;
  if (root.contains("images")) {
    for (const auto& im : root["images"]) {
      AnnotatedImage img;
      long long id = im["id"].get<long long>();
      img.id = std::to_string(id);
      img.file_name = im["file_name"].get<std::string>();
      img.width = im.value("width", 0);
      img.height = im.value("height", 0);
      img.extra = im;
      image_pos[id] = index.images.size();
      index.images.push_back(std::move(img));
    }
  }

  if (root.contains("annotations")) {
    for (const auto& ann : root["annotations"]) {
      long long ann_id = ann.value("id", 0LL);
      index.max_coco_annotation_id =
          std::max(index.max_coco_annotation_id, ann_id);
      long long image_id = ann["image_id"].get<long long>();
      auto pos = image_pos.find(image_id);
      if (pos == image_pos.end()) {
        index.errors.push_back({"annotation " + std::to_string(ann_id),
                                "references unknown image " +
                                    std::to_string(image_id)});
        continue;
      }
      AnnotatedImage& img = index.images[pos->second];

      ObjectAnnotation obj;
      long long cat_id = ann["category_id"].get<long long>();
      auto cat = cat_names.find(cat_id);
      if (cat == cat_names.end()) {
        index.errors.push_back({"image " + img.id,
                                "annotation " + std::to_string(ann_id) +
                                    " has unknown category_id " +
                                    std::to_string(cat_id)});
        continue;
      }
      obj.category = cat->second;

      auto bb = ann["bbox"].get<std::vector<double>>();
      if (bb.size() != 4) {
        index.errors.push_back({"image " + img.id,
                                "annotation " + std::to_string(ann_id) +
                                    " has malformed bbox"});
        continue;
      }
      obj.bbox = Box{bb[0], bb[1], bb[2], bb[3]};
      if (auto why = bbox_violation(obj.bbox, img.width, img.height)) {
        index.errors.push_back({"image " + img.id,
                                "annotation " + std::to_string(ann_id) + ": " +
                                    *why});
        continue;
      }

      if (ann.contains("segmentation")) {
        try {
          obj.mask = decode_segmentation(ann["segmentation"], img.width,
                                         img.height);
        } catch (const std::exception& e) {
          index.errors.push_back({"image " + img.id,
                                  "annotation " + std::to_string(ann_id) +
                                      ": bad segmentation: " + e.what()});
          continue;
        }
      }
      obj.synthetic = ann.value("synthetic", false);
      obj.extra = ann;
      img.objects.push_back(std::move(obj));
    }
  }
  return index;
}

void write_coco_annotations(const DatasetIndex& index,
                            const std::map<std::string, FinalImage>& finals,
                            const std::string& out_root) {
  Json root = Json::object();
  if (index.coco_header.contains("info"))
    root["info"] = index.coco_header["info"];
  if (index.coco_header.contains("licenses"))
    root["licenses"] = index.coco_header["licenses"];

  long long next_ann_id = index.max_coco_annotation_id + 1;
  long long max_cat_id = 0;
  std::map<std::string, long long> cat_ids;
  for (const auto& [name, id] : index.category_ids) {
    cat_ids[name] = id;
    max_cat_id = std::max(max_cat_id, static_cast<long long>(id));
  }

  Json images = Json::array();
  Json annotations = Json::array();
  std::vector<std::string> new_categories;

  for (const auto& img : index.images) {
    auto fin = finals.find(img.id);
    if (fin == finals.end()) continue;

    Json im = img.extra.is_null() ? Json::object() : img.extra;
    im["file_name"] = fin->second.file_name;
    im["width"] = img.width;
    im["height"] = img.height;
    images.push_back(std::move(im));

    long long image_id = img.extra.contains("id")
                             ? img.extra["id"].get<long long>()
                             : static_cast<long long>(std::stoll(img.id));
    for (const auto& obj : fin->second.objects) {
      Json a;
      if (!obj.synthetic && !obj.extra.is_null()) {
        a = obj.extra;
        a["bbox"] = Json::array(
            {obj.bbox.x, obj.bbox.y, obj.bbox.w, obj.bbox.h});
        if (obj.mask_modified && obj.mask) {
          a["segmentation"] = rle_json(*obj.mask, img.width, img.height);
          a["area"] = mask_area(obj.mask->bits);
        }
      } else {
        if (!cat_ids.count(obj.category)) {
          cat_ids[obj.category] = ++max_cat_id;
          new_categories.push_back(obj.category);
        }
        a = Json::object();
        a["id"] = next_ann_id++;
        a["image_id"] = image_id;
        a["category_id"] = cat_ids[obj.category];
        a["bbox"] = Json::array(
            {obj.bbox.x, obj.bbox.y, obj.bbox.w, obj.bbox.h});
        if (obj.mask) {
          a["segmentation"] = rle_json(*obj.mask, img.width, img.height);
          a["area"] = mask_area(obj.mask->bits);
        } else {
          a["area"] = obj.bbox.w * obj.bbox.h;
        }
        a["iscrowd"] = 0;
        a["synthetic"] = true;
      }
      annotations.push_back(std::move(a));
    }
  }

  Json categories = index.coco_header.contains("categories")
                        ? index.coco_header["categories"]
                        : Json::array();
  for (const auto& name : new_categories) {
    Json c = Json::object();
    c["id"] = cat_ids[name];
    c["name"] = name;
    categories.push_back(std::move(c));
  }

  root["images"] = std::move(images);
  root["annotations"] = std::move(annotations);
  root["categories"] = std::move(categories);

  fs::path path = fs::path(out_root) / "annotations.json";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << root.dump(1) << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace sempaste::detail
