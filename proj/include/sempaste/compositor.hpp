#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sempaste/annotations.hpp"
#include "sempaste/matcher.hpp"
#include "sempaste/object_bank.hpp"
#include "sempaste/rng.hpp"
#include "sempaste/types.hpp"

namespace sempaste {

enum class Blending { none, gaussian_5x5, averaging_5x5 };

Blending parse_blending(const std::string& name);
std::string to_string(Blending b);

struct PlacementParams {
  double scale_lo = 0.05;   // fraction of host width
  double scale_hi = 0.40;
  std::int64_t area_min = 300;    // px^2
  std::int64_t area_max = 90000;
  double epsilon_frac = 0.05;  // |eps| bound as fraction of host width
  int max_retries = 20;
  Blending blending = Blending::none;
  double visibility_threshold = 0.05;

  void validate() const;
};

struct Placement {
  double center_x = 0, center_y = 0;
  int scaled_w = 0, scaled_h = 0;
  int host_anchor_index = -1;

  IntRect paste_rect() const {
    return IntRect{
        static_cast<int>(std::llround(center_x - scaled_w / 2.0)),
        static_cast<int>(std::llround(center_y - scaled_h / 2.0)), scaled_w,
        scaled_h};
  }
};

struct PasteRecord {
  std::string entry_id;
  std::string category;
  double score = 0.0;
  Placement placement;
};

struct CompositeResult {
  Image image;
  PlaneI32 instance_mask;  // 0 background, else annotation instance id
  std::vector<ObjectAnnotation> annotations;
  std::vector<PasteRecord> pastes;
  bool skipped = false;
  std::vector<std::string> skip_reasons;
};

// Random target size: width drawn as a fraction of host width with aspect
// preserved, redrawn until the area lands inside [area_min, area_max] or
// max_retries draws are spent (-> nullopt, the instance is unplaceable).
std::optional<std::pair<int, int>> draw_scale(const BankEntry& entry,
                                              int host_w,
                                              const PlacementParams& params,
                                              RngStream& rng);

// Image bilinear, mask nearest-neighbour (stays strictly {0,1}).
std::pair<Image, Mask> resize_instance(const Image& crop, const Mask& mask,
                                       int scaled_w, int scaled_h);

// Center for one corner choice: (cx +- w/2 +- eps_a, cy +- h/2 +- eps_b).
std::pair<double, double> placement_center(const Box& anchor, int sign_x,
                                           int sign_y, double eps_a,
                                           double eps_b);

// Draw order per attempt: corner sign x, corner sign y, eps_a, eps_b. A
// draw is accepted when at least half of the paste rectangle stays
// in-frame after clipping; otherwise redrawn up to max_retries.
std::optional<Placement> draw_placement(const Box& anchor_bbox,
                                        int anchor_index, int host_w,
                                        int host_h, int scaled_w, int scaled_h,
                                        const PlacementParams& params,
                                        RngStream& rng);

// Occlusion bookkeeping for one pasted region: annotations keep only their
// pixels not covered by the paste. Anything left with less than
// visibility_threshold of its area is dropped; survivors get a tight bbox
// (and mask) of the visible pixels. Annotations without masks are treated
// as solid rectangles.
std::vector<ObjectAnnotation> update_occlusions(
    std::vector<ObjectAnnotation> annotations, const RegionMask& pasted,
    const PlacementParams& params);

// 5x5 filter applied only within 2 px of the paste boundary.
void blend_boundary(Image& image, const RegionMask& pasted, Blending mode);

// One paste realized onto the host scene: pixels replaced where the
// zero-padded mask is 1, occlusions updated, the new annotation appended,
// boundary optionally blended, and the instance-labeled grid rebuilt.
// Throws DataError if no pasted pixel lands in-frame.
CompositeResult composite(const AnnotatedImage& host, const Image& crop,
                          const Mask& mask, const Placement& placement,
                          const PlacementParams& params,
                          const std::string& category,
                          const std::string& entry_id, double score = 0.0);

// Annotation masks painted by instance id, in list order.
PlaneI32 instance_grid(const std::vector<ObjectAnnotation>& annotations,
                       int width, int height);

struct AugmentOptions {
  SelectionStrategy strategy;
  SimilarityMetric metric = SimilarityMetric::cosine;
  PlacementParams params;
  int objects_per_image = 1;
  int instance_resamples = 3;  // new instances tried per unplaceable signal
};

// Decisions for all pastes of one image, in paste order. Separated from
// realize_pastes so a pipeline can serialize counter access while keeping
// the pixel work parallel.
std::vector<MatchDecision> decide_pastes(
    const std::vector<SimilarityPair>& pairs, const AnnotatedImage& host,
    const AugmentOptions& options, CategoryCounter& counter, RngStream& rng);

CompositeResult realize_pastes(const AnnotatedImage& host,
                               const std::vector<MatchDecision>& decisions,
                               const ObjectBank& bank,
                               const AugmentOptions& options, RngStream& rng);

// The whole per-image path: match, sample, scale, place, composite, blend;
// objects_per_image pastes. A host without annotations is returned
// unchanged with the skipped flag set.
CompositeResult augment_image(const AnnotatedImage& host,
                              const ObjectBank& bank,
                              const EmbeddingStore& store,
                              const AugmentOptions& options,
                              CategoryCounter& counter, RngStream& rng);

}  // namespace sempaste
