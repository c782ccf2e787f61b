#include "vrag/perception.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include "vrag/errors.hpp"
#include "vrag/hash.hpp"

namespace vrag {

namespace {

constexpr std::int64_t kClampTolerance = 2;

std::int64_t isqrt(std::int64_t v) {
  auto r = std::int64_t(std::sqrt(double(v)));
  while (r > 0 && r * r > v) --r;
  while ((r + 1) * (r + 1) <= v) ++r;
  return r;
}

std::int64_t floor_multiple(std::int64_t v, std::int64_t m) { return (v / m) * m; }
std::int64_t ceil_multiple(std::int64_t v, std::int64_t m) { return ((v + m - 1) / m) * m; }

Size2 scale_into_budget(std::int64_t w, std::int64_t h, const EncoderProfile& p) {
  const std::int64_t m = p.patch_multiple;
  // floor(w * sqrt(B / (w h))) = floor(sqrt(w B / h)), kept in integers so
  // exact aspect ratios do not lose a pixel to rounding.
  std::int64_t W = std::max(m, floor_multiple(isqrt(w * p.max_pixels / h), m));
  std::int64_t H = std::max(m, floor_multiple(isqrt(h * p.max_pixels / w), m));
  // Extreme aspect ratios pinned at one patch on the short side.
  while (W * H > p.max_pixels) {
    if (W >= H) {
      W = std::max(m, floor_multiple(p.max_pixels / H, m));
    } else {
      H = std::max(m, floor_multiple(p.max_pixels / W, m));
    }
    if (W == m && H == m) break;
  }
  return {W, H};
}

void check_dims(std::int64_t w, std::int64_t h) {
  if (w <= 0 || h <= 0) {
    throw Error(ErrorCode::ZeroDimension, std::to_string(w) + "x" + std::to_string(h));
  }
}

}  // namespace

void EncoderProfile::validate() const {
  if (patch_multiple < 1) throw Error(ErrorCode::Config, "patch_multiple must be >= 1");
  if (max_pixels < patch_multiple * patch_multiple) {
    throw Error(ErrorCode::Config, "max_pixels must hold at least one patch");
  }
  if (normalization_scale && *normalization_scale <= 0) {
    throw Error(ErrorCode::Config, "normalization_scale must be positive");
  }
}

Size2 fit_to_budget(std::int64_t w_raw, std::int64_t h_raw, const EncoderProfile& profile) {
  check_dims(w_raw, h_raw);
  const std::int64_t m = profile.patch_multiple;
  if (w_raw * h_raw <= profile.max_pixels) {
    Size2 s{std::max(m, round_div(w_raw, m) * m), std::max(m, round_div(h_raw, m) * m)};
    if (s.width * s.height <= profile.max_pixels) return s;
  }
  return scale_into_budget(w_raw, h_raw, profile);
}

Size2 fit_to_budget_zoom(std::int64_t w_raw, std::int64_t h_raw, const EncoderProfile& profile) {
  check_dims(w_raw, h_raw);
  return scale_into_budget(w_raw, h_raw, profile);
}

RegionBox denormalize(const RegionBox& box, std::int64_t w, std::int64_t h, std::int64_t delta) {
  if (delta <= 0) throw Error(ErrorCode::Config, "normalization scale must be positive");
  for (auto v : {box.x_min, box.y_min, box.x_max, box.y_max}) {
    if (v < 0 || v > delta) {
      throw Error(ErrorCode::OutOfRange, "coordinate " + std::to_string(v) + " outside [0, " +
                                             std::to_string(delta) + "]");
    }
  }
  return {round_div(box.x_min * w, delta), round_div(box.y_min * h, delta),
          round_div(box.x_max * w, delta), round_div(box.y_max * h, delta), CoordSpace::Encoder};
}

RegionBox map_region_to_raw(const RegionBox& box, const EncodedView& view, const ImageDocument& doc) {
  const auto ew = view.enc_width, eh = view.enc_height;
  if (box.x_min < -kClampTolerance || box.y_min < -kClampTolerance ||
      box.x_max > ew + kClampTolerance || box.y_max > eh + kClampTolerance) {
    throw Error(ErrorCode::OutOfBounds, "box exceeds " + std::to_string(ew) + "x" +
                                            std::to_string(eh) + " view beyond clamp tolerance");
  }
  auto cx = [&](std::int64_t v) { return std::clamp<std::int64_t>(v, 0, ew); };
  auto cy = [&](std::int64_t v) { return std::clamp<std::int64_t>(v, 0, eh); };

  const auto& c = view.crop;
  auto to_raw_x = [&](std::int64_t x) {
    return std::clamp<std::int64_t>(c.x_min + round_div(cx(x) * c.width(), ew), 0, doc.raw_width);
  };
  auto to_raw_y = [&](std::int64_t y) {
    return std::clamp<std::int64_t>(c.y_min + round_div(cy(y) * c.height(), eh), 0, doc.raw_height);
  };
  RegionBox out{to_raw_x(box.x_min), to_raw_y(box.y_min), to_raw_x(box.x_max), to_raw_y(box.y_max),
                CoordSpace::Raw};
  if (out.width() < 1 || out.height() < 1) {
    throw Error(ErrorCode::DegenerateRegion, "region collapses to zero area in raw space");
  }
  return out;
}

EncodedView full_view(const ImageDocument& doc, const EncoderProfile& profile) {
  auto s = fit_to_budget(doc.raw_width, doc.raw_height, profile);
  return {doc.doc_id, s.width, s.height, {0, 0, doc.raw_width, doc.raw_height, CoordSpace::Raw}};
}

EncodedView crop_and_reencode(const ImageDocument& doc, const RegionBox& raw_box,
                              const EncoderProfile& profile,
                              const std::optional<EncodedView>& parent_view) {
  if (raw_box.width() < 1 || raw_box.height() < 1) {
    throw Error(ErrorCode::DegenerateRegion, "crop has zero area");
  }
  if (raw_box.x_min < 0 || raw_box.y_min < 0 || raw_box.x_max > doc.raw_width ||
      raw_box.y_max > doc.raw_height) {
    throw Error(ErrorCode::OutOfBounds, "crop outside the raw page");
  }
  const EncodedView parent = parent_view ? *parent_view : full_view(doc, profile);
  RegionBox box = raw_box;
  box.space = CoordSpace::Raw;
  if (box == parent.crop) return parent;

  const auto cw = box.width(), ch = box.height();
  Size2 s = profile.zoom_crops ? fit_to_budget_zoom(cw, ch, profile) : fit_to_budget(cw, ch, profile);

  // Smallest patch-aligned size keeping the parent's density on each axis.
  const std::int64_t m = profile.patch_multiple;
  const auto pw = parent.crop.width(), ph = parent.crop.height();
  const std::int64_t min_w = ceil_multiple((cw * parent.enc_width + pw - 1) / pw, m);
  const std::int64_t min_h = ceil_multiple((ch * parent.enc_height + ph - 1) / ph, m);
  Size2 floored{std::max(s.width, min_w), std::max(s.height, min_h)};
  if (floored.width * floored.height <= profile.max_pixels) {
    s = floored;
  } else if (min_w * min_h <= profile.max_pixels) {
    s = {min_w, min_h};
  }
  return {doc.doc_id, s.width, s.height, box};
}

RegionOutcome apply_region_action(const RegionAction& action,
                                  std::span<const ImageObservation> observations,
                                  const DocumentLookup& lookup, const EncoderProfile& profile) {
  if (observations.empty()) {
    throw Error(ErrorCode::NoImageInContext, "region action before any image observation");
  }
  std::size_t index = observations.size();
  if (action.target_index) {
    if (*action.target_index < 1 || std::size_t(*action.target_index) > observations.size()) {
      throw Error(ErrorCode::NoImageInContext,
                  "image " + std::to_string(*action.target_index) + " is not in context");
    }
    index = std::size_t(*action.target_index);
  }
  const auto& target = observations[index - 1].view;
  const ImageDocument doc = lookup(target.doc_id);

  RegionBox box{action.bbox[0], action.bbox[1], action.bbox[2], action.bbox[3], CoordSpace::Encoder};
  if (profile.normalization_scale) {
    box.space = CoordSpace::Normalized;
    box = denormalize(box, target.enc_width, target.enc_height, *profile.normalization_scale);
  }
  auto raw = map_region_to_raw(box, target, doc);
  auto view = crop_and_reencode(doc, raw, profile, target);
  return {std::move(view), doc.doc_id, raw, index};
}

PerceptionEngine::PerceptionEngine(EncoderProfile profile, std::filesystem::path crop_dir)
    : profile_(profile), crop_dir_(std::move(crop_dir)), cache_(std::make_shared<ImageCache>()) {
  profile_.validate();
  if (!crop_dir_.empty()) std::filesystem::create_directories(crop_dir_);
}

ImageObservation PerceptionEngine::render(const ImageDocument& doc, const EncodedView& view) {
  if (doc.image_path.empty()) {
    // Geometry-only document: the hash identifies the view itself.
    return {view, sha256_hex(view_to_json(view).dump())};
  }
  auto page = cache_->get(doc.image_path);
  // Manifest dimensions may disagree with the payload; scale the box.
  const double sx = double(page->width) / double(doc.raw_width);
  const double sy = double(page->height) / double(doc.raw_height);
  auto px = [](double v) { return int(std::lround(v)); };
  Image region = crop(*page, px(view.crop.x_min * sx), px(view.crop.y_min * sy),
                      px(view.crop.x_max * sx), px(view.crop.y_max * sy));
  Image encoded = resize_bilinear(region, int(view.enc_width), int(view.enc_height));
  auto png = encode_png(encoded);
  std::string hash = sha256_hex(std::span<const std::uint8_t>(png));
  if (!crop_dir_.empty()) {
    auto path = crop_dir_ / (hash + ".png");
    if (!std::filesystem::exists(path)) {
      // Parallel workers may render the same view; publish atomically.
      auto tmp = path;
      tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
      {
        std::ofstream out(tmp, std::ios::binary);
        out.write(reinterpret_cast<const char*>(png.data()), std::streamsize(png.size()));
      }
      std::filesystem::rename(tmp, path);
    }
  }
  return {view, std::move(hash)};
}

ImageObservation PerceptionEngine::observe_page(const ImageDocument& doc) {
  return render(doc, full_view(doc, profile_));
}

ImageObservation PerceptionEngine::observe_region(const RegionOutcome& outcome, const ImageDocument& doc) {
  return render(doc, outcome.view);
}

std::optional<std::filesystem::path> PerceptionEngine::image_file(const ImageObservation& obs) const {
  if (crop_dir_.empty()) return std::nullopt;
  auto path = crop_dir_ / (obs.content_hash + ".png");
  if (!std::filesystem::exists(path)) return std::nullopt;
  return path;
}

nlohmann::json PerceptionEngine::provenance(const RegionOutcome& outcome, const ImageObservation& obs) {
  return {{"content_hash", obs.content_hash},
          {"source_doc_id", outcome.source_doc_id},
          {"raw_box", {outcome.raw_box.x_min, outcome.raw_box.y_min, outcome.raw_box.x_max,
                       outcome.raw_box.y_max}},
          {"target_index", outcome.target_index},
          {"enc_size", {outcome.view.enc_width, outcome.view.enc_height}}};
}

nlohmann::json view_to_json(const EncodedView& v) {
  return {{"doc_id", v.doc_id},
          {"enc_size", {v.enc_width, v.enc_height}},
          {"crop", {v.crop.x_min, v.crop.y_min, v.crop.x_max, v.crop.y_max}}};
}

EncodedView view_from_json(const nlohmann::json& j) {
  EncodedView v;
  v.doc_id = j.at("doc_id").get<std::string>();
  auto enc = j.at("enc_size").get<std::array<std::int64_t, 2>>();
  auto c = j.at("crop").get<std::array<std::int64_t, 4>>();
  v.enc_width = enc[0];
  v.enc_height = enc[1];
  v.crop = {c[0], c[1], c[2], c[3], CoordSpace::Raw};
  return v;
}

}  // namespace vrag
