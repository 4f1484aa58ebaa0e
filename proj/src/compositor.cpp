#include "sempaste/compositor.hpp"

#include <algorithm>
#include <cmath>

#include "sempaste/errors.hpp"
#include "sempaste/mask_ops.hpp"

namespace sempaste {

Blending parse_blending(const std::string& name) {
  if (name == "none") return Blending::none;
  if (name == "gaussian_5x5" || name == "gaussian") return Blending::gaussian_5x5;
  if (name == "averaging_5x5" || name == "averaging")
    return Blending::averaging_5x5;
  throw ConfigError("unknown blending mode: \"" + name + "\"");
}

std::string to_string(Blending b) {
  switch (b) {
    case Blending::none: return "none";
    case Blending::gaussian_5x5: return "gaussian_5x5";
    case Blending::averaging_5x5: return "averaging_5x5";
  }
  return "?";
}

void PlacementParams::validate() const {
  if (!(scale_lo > 0.0 && scale_lo <= scale_hi && scale_hi <= 1.0))
    throw ConfigError("scale range must satisfy 0 < lo <= hi <= 1");
  if (!(area_min > 0 && area_min < area_max))
    throw ConfigError("area bounds must satisfy 0 < min < max");
  if (!(epsilon_frac >= 0.0 && epsilon_frac < 1.0))
    throw ConfigError("epsilon_frac must be in [0, 1)");
  if (max_retries < 1) throw ConfigError("max_retries must be at least 1");
  if (!(visibility_threshold >= 0.0 && visibility_threshold <= 1.0))
    throw ConfigError("visibility_threshold must be in [0, 1]");
}

std::optional<std::pair<int, int>> draw_scale(const BankEntry& entry,
                                              int host_w,
                                              const PlacementParams& params,
                                              RngStream& rng) {
  const int cw = entry.crop.width();
  const int ch = entry.crop.height();
  if (cw <= 0 || ch <= 0) throw DataError("degenerate bank entry crop");
  for (int attempt = 0; attempt < params.max_retries; ++attempt) {
    double u = rng.uniform(params.scale_lo, params.scale_hi);
    int w = std::max<int>(1, static_cast<int>(std::llround(u * host_w)));
    int h = std::max<int>(
        1, static_cast<int>(std::llround(static_cast<double>(w) * ch / cw)));
    std::int64_t area = static_cast<std::int64_t>(w) * h;
    if (area >= params.area_min && area <= params.area_max) return {{w, h}};
  }
  return std::nullopt;
}

std::pair<Image, Mask> resize_instance(const Image& crop, const Mask& mask,
                                       int scaled_w, int scaled_h) {
  if (scaled_w <= 0 || scaled_h <= 0)
    throw DataError("resize_instance: target dims must be positive");
  Image out_img;
  if (scaled_w == crop.width() && scaled_h == crop.height()) {
    out_img = crop;  // identity, bit exact
  } else {
    out_img = resize_bilinear(crop, scaled_w, scaled_h);
  }
  Mask out_mask = (scaled_w == mask.cols() && scaled_h == mask.rows())
                      ? mask
                      : resize_nearest(mask, scaled_w, scaled_h);
  return {std::move(out_img), std::move(out_mask)};
}

std::pair<double, double> placement_center(const Box& anchor, int sign_x,
                                           int sign_y, double eps_a,
                                           double eps_b) {
  return {anchor.cx() + sign_x * anchor.w / 2.0 + eps_a,
          anchor.cy() + sign_y * anchor.h / 2.0 + eps_b};
}

std::optional<Placement> draw_placement(const Box& anchor_bbox,
                                        int anchor_index, int host_w,
                                        int host_h, int scaled_w, int scaled_h,
                                        const PlacementParams& params,
                                        RngStream& rng) {
  const IntRect frame{0, 0, host_w, host_h};
  for (int attempt = 0; attempt < params.max_retries; ++attempt) {
    int sx = rng.pick_sign();
    int sy = rng.pick_sign();
    double eps_a =
        rng.uniform(-params.epsilon_frac, params.epsilon_frac) * host_w;
    double eps_b =
        rng.uniform(-params.epsilon_frac, params.epsilon_frac) * host_w;
    auto [cx, cy] = placement_center(anchor_bbox, sx, sy, eps_a, eps_b);
    Placement p{cx, cy, scaled_w, scaled_h, anchor_index};
    IntRect rect = p.paste_rect();
    if (intersect(rect, frame).area() * 2 >= rect.area()) return p;
  }
  return std::nullopt;
}

namespace {

// Visible part of an annotation after subtracting the pasted mask.
struct Visibility {
  std::int64_t original_area = 0;
  std::int64_t visible_area = 0;
  RegionMask visible;  // tight, meaningful only when visible_area > 0
};

Visibility visible_after(const ObjectAnnotation& obj, const RegionMask& pasted) {
  RegionMask region;
  if (obj.mask) {
    region = *obj.mask;
  } else {
    IntRect r = to_int_rect(obj.bbox);
    region.x = r.x;
    region.y = r.y;
    region.bits = Mask::Constant(std::max(r.h, 0), std::max(r.w, 0), 1);
  }

  Visibility v;
  v.original_area = mask_area(region.bits);
  Mask remaining = region.bits;
  IntRect overlap = intersect(region.rect(), pasted.rect());
  for (int y = 0; y < overlap.h; ++y)
    for (int x = 0; x < overlap.w; ++x)
      if (pasted.bits(overlap.y + y - pasted.y, overlap.x + x - pasted.x))
        remaining(overlap.y + y - region.y, overlap.x + x - region.x) = 0;

  v.visible_area = mask_area(remaining);
  if (v.visible_area > 0) {
    IntRect tight = *tight_bbox(remaining);
    v.visible.x = region.x + tight.x;
    v.visible.y = region.y + tight.y;
    v.visible.bits = remaining.block(tight.y, tight.x, tight.h, tight.w);
  }
  return v;
}

}  // namespace

std::vector<ObjectAnnotation> update_occlusions(
    std::vector<ObjectAnnotation> annotations, const RegionMask& pasted,
    const PlacementParams& params) {
  std::vector<ObjectAnnotation> out;
  out.reserve(annotations.size());
  for (auto& obj : annotations) {
    IntRect overlap = intersect(obj.mask ? obj.mask->rect()
                                         : to_int_rect(obj.bbox),
                                pasted.rect());
    if (overlap.empty()) {
      out.push_back(std::move(obj));
      continue;
    }
    Visibility v = visible_after(obj, pasted);
    if (v.visible_area == 0 ||
        static_cast<double>(v.visible_area) <
            params.visibility_threshold * static_cast<double>(v.original_area))
      continue;  // fully or almost fully covered: annotation removed
    if (v.visible_area == v.original_area) {
      out.push_back(std::move(obj));  // mask overlap was rectangular only
      continue;
    }
    obj.bbox = to_box(v.visible.rect());
    if (obj.mask) obj.mask = v.visible;
    obj.mask_modified = true;
    out.push_back(std::move(obj));
  }
  return out;
}

namespace {

const double kGaussian5[5] = {1 / 16.0, 4 / 16.0, 6 / 16.0, 4 / 16.0,
                              1 / 16.0};

double kernel_at(Blending mode, int dy, int dx) {
  if (mode == Blending::averaging_5x5) return 1.0 / 25.0;
  return kGaussian5[dy + 2] * kGaussian5[dx + 2];
}

}  // namespace

void blend_boundary(Image& image, const RegionMask& pasted, Blending mode) {
  if (mode == Blending::none) return;
  const int W = image.width();
  const int H = image.height();
  IntRect r = intersect(pasted.rect(), IntRect{0, 0, W, H});
  if (r.empty()) return;

  // boundary: in-frame 1-pixels with an in-frame 4-neighbour that is 0
  Mask boundary = Mask::Zero(H, W);
  auto mask_at = [&](int x, int y) -> int {
    if (x < pasted.x || y < pasted.y || x >= pasted.x + pasted.width() ||
        y >= pasted.y + pasted.height())
      return 0;
    return pasted.bits(y - pasted.y, x - pasted.x);
  };
  bool any = false;
  for (int y = r.y; y < r.y1(); ++y) {
    for (int x = r.x; x < r.x1(); ++x) {
      if (!mask_at(x, y)) continue;
      const int nx[4] = {x - 1, x + 1, x, x};
      const int ny[4] = {y, y, y - 1, y + 1};
      for (int k = 0; k < 4; ++k) {
        if (nx[k] < 0 || ny[k] < 0 || nx[k] >= W || ny[k] >= H) continue;
        if (!mask_at(nx[k], ny[k])) {
          boundary(y, x) = 1;
          any = true;
          break;
        }
      }
    }
  }
  if (!any) return;

  Mask band = dilate(boundary, 2);
  Image snapshot = image;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (!band(y, x)) continue;
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int dy = -2; dy <= 2; ++dy) {
          int sy = std::clamp(y + dy, 0, H - 1);
          for (int dx = -2; dx <= 2; ++dx) {
            int sx = std::clamp(x + dx, 0, W - 1);
            acc += kernel_at(mode, dy, dx) * snapshot.ch[c](sy, sx);
          }
        }
        image.ch[c](y, x) = static_cast<std::uint8_t>(
            std::clamp<long>(std::lround(acc), 0, 255));
      }
    }
  }
}

CompositeResult composite(const AnnotatedImage& host, const Image& crop,
                          const Mask& mask, const Placement& placement,
                          const PlacementParams& params,
                          const std::string& category,
                          const std::string& entry_id, double score) {
  const int W = host.width;
  const int H = host.height;
  IntRect rect = placement.paste_rect();
  IntRect in_frame = intersect(rect, IntRect{0, 0, W, H});
  if (in_frame.empty())
    throw DataError("composite: placement entirely outside the frame");

  // zero-padded paste mask, kept as the in-frame region
  RegionMask pasted;
  pasted.x = in_frame.x;
  pasted.y = in_frame.y;
  pasted.bits = Mask::Zero(in_frame.h, in_frame.w);
  for (int y = 0; y < in_frame.h; ++y)
    for (int x = 0; x < in_frame.w; ++x)
      pasted.bits(y, x) =
          mask(in_frame.y + y - rect.y, in_frame.x + x - rect.x);
  if (mask_area(pasted.bits) == 0)
    throw DataError("composite: no pasted mask pixel lands in-frame");

  auto tight = *tight_bbox(pasted.bits);
  RegionMask pasted_tight;
  pasted_tight.x = pasted.x + tight.x;
  pasted_tight.y = pasted.y + tight.y;
  pasted_tight.bits = pasted.bits.block(tight.y, tight.x, tight.h, tight.w);

  CompositeResult result;
  result.image = host.pixels;
  // out = host*(1-M*) + paste*M*, exact in 8-bit
  for (int y = 0; y < in_frame.h; ++y)
    for (int x = 0; x < in_frame.w; ++x)
      if (pasted.bits(y, x))
        for (int c = 0; c < 3; ++c)
          result.image.ch[c](in_frame.y + y, in_frame.x + x) =
              crop.ch[c](in_frame.y + y - rect.y, in_frame.x + x - rect.x);

  result.annotations =
      update_occlusions(host.objects, pasted_tight, params);

  int next_instance = 0;
  for (const auto& obj : host.objects)
    next_instance = std::max(next_instance, obj.instance_id);
  ++next_instance;

  ObjectAnnotation pasted_obj;
  pasted_obj.category = category;
  pasted_obj.bbox = to_box(pasted_tight.rect());
  pasted_obj.mask = pasted_tight;
  pasted_obj.synthetic = true;
  pasted_obj.instance_id = next_instance;
  result.annotations.push_back(std::move(pasted_obj));

  blend_boundary(result.image, pasted_tight, params.blending);

  // instance grid per the mask-update rule: prior ids where still visible,
  // the fresh id exactly on the pasted pixels
  result.instance_mask = instance_grid(result.annotations, W, H);

  result.pastes.push_back(PasteRecord{entry_id, category, score, placement});
  return result;
}

PlaneI32 instance_grid(const std::vector<ObjectAnnotation>& annotations,
                       int width, int height) {
  PlaneI32 grid = PlaneI32::Zero(height, width);
  for (const auto& obj : annotations) {
    if (!obj.mask) continue;
    IntRect r = intersect(obj.mask->rect(), IntRect{0, 0, width, height});
    for (int y = 0; y < r.h; ++y)
      for (int x = 0; x < r.w; ++x)
        if (obj.mask->bits(r.y + y - obj.mask->y, r.x + x - obj.mask->x))
          grid(r.y + y, r.x + x) = obj.instance_id;
  }
  return grid;
}

std::vector<MatchDecision> decide_pastes(
    const std::vector<SimilarityPair>& pairs, const AnnotatedImage& host,
    const AugmentOptions& options, CategoryCounter& counter, RngStream& rng) {
  std::vector<std::string> host_categories;
  host_categories.reserve(host.objects.size());
  for (const auto& obj : host.objects) host_categories.push_back(obj.category);

  std::vector<MatchDecision> decisions;
  decisions.reserve(options.objects_per_image);
  for (int k = 0; k < options.objects_per_image; ++k)
    decisions.push_back(
        select(pairs, options.strategy, counter, rng, host_categories));
  return decisions;
}

CompositeResult realize_pastes(const AnnotatedImage& host,
                               const std::vector<MatchDecision>& decisions,
                               const ObjectBank& bank,
                               const AugmentOptions& options,
                               RngStream& rng) {
  // anchors always refer to the original annotations
  std::vector<Box> anchor_boxes;
  anchor_boxes.reserve(host.objects.size());
  for (const auto& obj : host.objects) anchor_boxes.push_back(obj.bbox);

  AnnotatedImage scene = host;
  CompositeResult result;
  result.image = host.pixels;
  result.annotations = host.objects;
  result.instance_mask = instance_grid(host.objects, host.width, host.height);

  for (const auto& decision : decisions) {
    bool placed = false;
    for (int attempt = 0; attempt < options.instance_resamples && !placed;
         ++attempt) {
      const BankEntry& entry = bank.sample(decision.bank_category, rng);
      auto dims = draw_scale(entry, host.width, options.params, rng);
      if (!dims) continue;
      auto [crop, mask] = resize_instance(entry.crop, entry.mask, dims->first,
                                          dims->second);
      if (mask_area(mask) == 0) continue;  // resampling erased the object
      auto placement = draw_placement(
          anchor_boxes[decision.host_object_index], decision.host_object_index,
          host.width, host.height, dims->first, dims->second, options.params,
          rng);
      if (!placement) continue;
      try {
        CompositeResult step =
            composite(scene, crop, mask, *placement, options.params,
                      decision.bank_category, entry.id, decision.score);
        scene.pixels = step.image;
        scene.objects = step.annotations;
        result.image = std::move(step.image);
        result.annotations = scene.objects;
        result.instance_mask = std::move(step.instance_mask);
        result.pastes.push_back(step.pastes.front());
        placed = true;
      } catch (const DataError&) {
        // no in-frame pixel: treat like any unplaceable draw
      }
    }
    if (!placed)
      result.skip_reasons.push_back("unplaceable: " + decision.bank_category);
  }
  return result;
}

CompositeResult augment_image(const AnnotatedImage& host,
                              const ObjectBank& bank,
                              const EmbeddingStore& store,
                              const AugmentOptions& options,
                              CategoryCounter& counter, RngStream& rng) {
  options.params.validate();
  if (host.objects.empty()) {
    CompositeResult result;
    result.image = host.pixels;
    result.instance_mask = PlaneI32::Zero(host.height, host.width);
    result.skipped = true;
    result.skip_reasons.push_back("no annotations to anchor a paste");
    return result;
  }
  std::vector<SimilarityPair> pairs =
      score_all_pairs(host, bank, store, options.metric);
  std::vector<MatchDecision> decisions =
      decide_pastes(pairs, host, options, counter, rng);
  return realize_pastes(host, decisions, bank, options, rng);
}

}  // namespace sempaste
