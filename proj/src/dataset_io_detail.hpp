#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sempaste/annotations.hpp"

namespace sempaste::detail {

struct FinalImage {
  std::string file_name;
  std::vector<ObjectAnnotation> objects;
};

DatasetIndex read_coco_index(const DatasetManifest& manifest);
DatasetIndex read_voc_index(const DatasetManifest& manifest);

void write_coco_annotations(const DatasetIndex& index,
                            const std::map<std::string, FinalImage>& finals,
                            const std::string& out_root);
void write_voc_annotations(const DatasetIndex& index,
                           const std::map<std::string, FinalImage>& finals,
                           const std::string& out_root);

// Shared validation: 0-based (x,y,w,h) against image bounds.
std::optional<std::string> bbox_violation(const Box& b, int width, int height);

// Expand a region mask into frame coordinates.
Mask full_frame_mask(const RegionMask& rm, int width, int height);

std::string file_stem(const std::string& file_name);
std::string xml_escape(const std::string& s);

}  // namespace sempaste::detail
