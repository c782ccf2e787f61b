#pragma once

// Coarse-to-fine perception geometry: encoder-space sizing under a pixel
// budget, coordinate denormalisation, encoder -> raw region mapping, and
// crop-and-re-encode of a region of a previously observed page.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "vrag/action_grammar.hpp"
#include "vrag/image.hpp"

namespace vrag {

struct EncoderProfile {
  std::int64_t max_pixels = 1003520;  // 1280 patches of 28x28
  std::int64_t patch_multiple = 28;
  /// Normalisation scale for models that emit coordinates in [0, delta].
  std::optional<std::int64_t> normalization_scale;
  /// Re-encoded crops are zoomed to fill the budget; full pages never are.
  bool zoom_crops = true;

  void validate() const;
};

enum class CoordSpace { Encoder, Normalized, Raw };

struct RegionBox {
  std::int64_t x_min = 0, y_min = 0, x_max = 0, y_max = 0;
  CoordSpace space = CoordSpace::Raw;

  std::int64_t width() const noexcept { return x_max - x_min; }
  std::int64_t height() const noexcept { return y_max - y_min; }
  bool operator==(const RegionBox&) const = default;
};

struct ImageDocument {
  std::string doc_id;
  std::int64_t raw_width = 0;
  std::int64_t raw_height = 0;
  /// Optional pixel payload; geometry-only documents leave this empty.
  std::filesystem::path image_path;
};

struct Size2 {
  std::int64_t width = 0;
  std::int64_t height = 0;
  bool operator==(const Size2&) const = default;
};

/// One image as placed into the model context.
struct EncodedView {
  std::string doc_id;
  std::int64_t enc_width = 0;
  std::int64_t enc_height = 0;
  /// Raw-pixel rectangle this view shows; the whole page for full views.
  RegionBox crop;

  /// Encoder pixels per raw pixel along each axis.
  double density_x() const noexcept { return double(enc_width) / double(crop.width()); }
  double density_y() const noexcept { return double(enc_height) / double(crop.height()); }
  bool operator==(const EncodedView&) const = default;
};

/// Image observation carried by a User turn.
struct ImageObservation {
  EncodedView view;
  std::string content_hash;
  bool operator==(const ImageObservation&) const = default;
};

/// Round-half-up of num/den for non-negative operands.
constexpr std::int64_t round_div(std::int64_t num, std::int64_t den) noexcept {
  return (2 * num + den) / (2 * den);
}

/// Encoder-space size for a full page: never upscales, area <= max_pixels.
Size2 fit_to_budget(std::int64_t w_raw, std::int64_t h_raw, const EncoderProfile& profile);

/// Same fit but scaling up small inputs to fill the budget.
Size2 fit_to_budget_zoom(std::int64_t w_raw, std::int64_t h_raw, const EncoderProfile& profile);

/// [0, delta] coordinates -> encoder pixels of a w x h view.
RegionBox denormalize(const RegionBox& box, std::int64_t w, std::int64_t h, std::int64_t delta);

/// Encoder-space box on `view` -> raw pixels of the page (clamping within 2 px).
RegionBox map_region_to_raw(const RegionBox& box, const EncodedView& view, const ImageDocument& doc);

/// Full-page view of a document.
EncodedView full_view(const ImageDocument& doc, const EncoderProfile& profile);

/// Re-encodes a raw-space crop of `doc`. `parent` is the view the region was
/// selected on (defaults to the full page); a strict sub-region never ends up
/// with a lower pixel density than its parent.
EncodedView crop_and_reencode(const ImageDocument& doc, const RegionBox& raw_box,
                              const EncoderProfile& profile,
                              const std::optional<EncodedView>& parent = std::nullopt);

struct RegionOutcome {
  EncodedView view;
  std::string source_doc_id;
  RegionBox raw_box;
  /// 1-based index of the observation the region was taken from.
  std::size_t target_index = 0;
};

using DocumentLookup = std::function<ImageDocument(const std::string& doc_id)>;

/// Resolves target image, denormalises when the profile says so, maps to raw,
/// crops and re-encodes.
RegionOutcome apply_region_action(const RegionAction& action,
                                  std::span<const ImageObservation> observations,
                                  const DocumentLookup& lookup, const EncoderProfile& profile);

/// Renders observations to pixels and derives their content hashes. Shared
/// across rollout workers.
class PerceptionEngine {
 public:
  explicit PerceptionEngine(EncoderProfile profile, std::filesystem::path crop_dir = {});

  const EncoderProfile& profile() const noexcept { return profile_; }

  ImageObservation observe_page(const ImageDocument& doc);
  ImageObservation observe_region(const RegionOutcome& outcome, const ImageDocument& doc);

  /// PNG written for an observation, when pixels were rendered to disk.
  std::optional<std::filesystem::path> image_file(const ImageObservation& obs) const;

  /// Provenance record for a region crop (written as a sidecar, never into the PNG).
  static nlohmann::json provenance(const RegionOutcome& outcome, const ImageObservation& obs);

 private:
  ImageObservation render(const ImageDocument& doc, const EncodedView& view);

  EncoderProfile profile_;
  std::filesystem::path crop_dir_;
  std::shared_ptr<ImageCache> cache_;
};

nlohmann::json view_to_json(const EncodedView& v);
EncodedView view_from_json(const nlohmann::json& j);

}  // namespace vrag
