#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "vrag/image.hpp"
#include "vrag/perception.hpp"

using namespace vrag;

namespace {

EncoderProfile budget(std::int64_t pixels, std::int64_t multiple) {
  EncoderProfile p;
  p.max_pixels = pixels;
  p.patch_multiple = multiple;
  return p;
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Config;
}

}  // namespace

TEST_CASE("fit_to_budget examples") {
  CHECK(fit_to_budget(4000, 3000, budget(1000000, 1)) == Size2{1154, 866});
  CHECK(fit_to_budget(100, 100, budget(1000000, 1)) == Size2{100, 100});
  CHECK(code_of([] { fit_to_budget(0, 100, budget(1000000, 1)); }) == ErrorCode::ZeroDimension);
}

TEST_CASE("fit_to_budget agrees with the integer search oracle") {
  std::mt19937_64 rng(3);
  const std::int64_t budgets[] = {1000000, 1003520, 200704};
  const std::int64_t multiples[] = {1, 14, 28};
  for (int i = 0; i < 20000; ++i) {
    const auto B = budgets[rng() % 3], m = multiples[rng() % 3];
    const std::int64_t w = 30 + std::int64_t(rng() % 8000);
    // aspect ratios up to 10:1 keep both sides above one patch
    const std::int64_t h =
        std::clamp<std::int64_t>(30 + std::int64_t(rng() % 8000), std::max<std::int64_t>(30, w / 10), w * 10);
    CAPTURE(w);
    CAPTURE(h);
    CAPTURE(B);
    CAPTURE(m);
    const auto got = fit_to_budget(w, h, budget(B, m));
    CHECK(got == oracle::fit(w, h, B, m));
    CHECK(got.width * got.height <= B);
  }
}

TEST_CASE("denormalize") {
  CHECK(denormalize({500, 500, 1000, 1000, CoordSpace::Normalized}, 800, 600, 1000) ==
        RegionBox{400, 300, 800, 600, CoordSpace::Encoder});
  CHECK(denormalize({0, 0, 1000, 1000, CoordSpace::Normalized}, 800, 600, 1000) ==
        RegionBox{0, 0, 800, 600, CoordSpace::Encoder});
  CHECK(code_of([] { denormalize({0, 0, 1001, 10, CoordSpace::Normalized}, 800, 600, 1000); }) ==
        ErrorCode::OutOfRange);
}

TEST_CASE("map_region_to_raw worked examples") {
  ImageDocument doc{"d7", 2000, 1500, {}};
  EncodedView view{"d7", 800, 600, {0, 0, 2000, 1500, CoordSpace::Raw}};
  CHECK(map_region_to_raw({80, 60, 160, 120, CoordSpace::Encoder}, view, doc) ==
        RegionBox{200, 150, 400, 300, CoordSpace::Raw});
  CHECK(map_region_to_raw({0, 0, 800, 600, CoordSpace::Encoder}, view, doc) ==
        RegionBox{0, 0, 2000, 1500, CoordSpace::Raw});
  CHECK(map_region_to_raw({799, 599, 800, 600, CoordSpace::Encoder}, view, doc) ==
        RegionBox{1998, 1498, 2000, 1500, CoordSpace::Raw});
  CHECK(map_region_to_raw({-2, -1, 802, 601, CoordSpace::Encoder}, view, doc) == view.crop);
  CHECK(code_of([&] { map_region_to_raw({0, 0, 803, 600, CoordSpace::Encoder}, view, doc); }) ==
        ErrorCode::OutOfBounds);
  CHECK(code_of([&] { map_region_to_raw({800, 10, 802, 20, CoordSpace::Encoder}, view, doc); }) ==
        ErrorCode::DegenerateRegion);
}

TEST_CASE("map_region_to_raw matches the rational oracle") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 20000; ++i) {
    ImageDocument doc{"d", 100 + std::int64_t(rng() % 5000), 100 + std::int64_t(rng() % 5000), {}};
    EncodedView view = full_view(doc, budget(1003520, 28));
    const auto ew = view.enc_width, eh = view.enc_height;
    std::int64_t x0 = std::int64_t(rng() % std::uint64_t(ew - 10)), y0 = std::int64_t(rng() % std::uint64_t(eh - 10));
    std::int64_t x1 = x0 + 5 + std::int64_t(rng() % std::uint64_t(ew - x0 - 4));
    std::int64_t y1 = y0 + 5 + std::int64_t(rng() % std::uint64_t(eh - y0 - 4));
    x1 = std::min(x1, ew);
    y1 = std::min(y1, eh);
    auto got = map_region_to_raw({x0, y0, x1, y1, CoordSpace::Encoder}, view, doc);
    CHECK(got.x_min == oracle::nearest(x0 * doc.raw_width, ew));
    CHECK(got.y_min == oracle::nearest(y0 * doc.raw_height, eh));
    CHECK(got.x_max == oracle::nearest(x1 * doc.raw_width, ew));
    CHECK(got.y_max == oracle::nearest(y1 * doc.raw_height, eh));
  }
}

TEST_CASE("crop_and_reencode") {
  ImageDocument doc{"p", 2000, 1500, {}};
  const auto p = budget(1000000, 1);
  const auto parent = full_view(doc, p);
  CHECK(parent.enc_width == 1154);
  CHECK(parent.enc_height == 866);

  auto child = crop_and_reencode(doc, {0, 0, 500, 375, CoordSpace::Raw}, p);
  CHECK(child.enc_width == 1154);
  CHECK(child.enc_height == 866);
  // pixels per raw pixel: 1154/500 on the crop versus 1154/2000 on the page
  CHECK(child.density_x() == doctest::Approx(2.308));
  CHECK(child.density_x() / parent.density_x() == doctest::Approx(4.0));

  auto same = crop_and_reencode(doc, {0, 0, 2000, 1500, CoordSpace::Raw}, p);
  CHECK(same == parent);
  CHECK(code_of([&] { crop_and_reencode(doc, {10, 10, 10, 50, CoordSpace::Raw}, p); }) ==
        ErrorCode::DegenerateRegion);
}

TEST_CASE("coordinate properties hold on random cases") {
  auto rep = oracle::coordinate_properties(3000, 17);
  INFO(rep.first_failure);
  CHECK(rep.failures == 0);
  CHECK(rep.max_deviation <= 1.0);
}

TEST_CASE("strict sub-region crops never lose pixel density") {
  auto rep = oracle::magnification_property(1000, 23);
  INFO(rep.first_violation);
  CHECK(rep.violations == 0);
}

TEST_CASE("apply_region_action resolves its target image") {
  ImageDocument d7{"d7", 2000, 1500, {}};
  ImageDocument d2{"d2", 1000, 1000, {}};
  DocumentLookup lookup = [&](const std::string& id) { return id == "d7" ? d7 : d2; };
  EncoderProfile p;
  std::vector<ImageObservation> obs{{{"d7", 800, 600, {0, 0, 2000, 1500, CoordSpace::Raw}}, "h1"}};

  auto out = apply_region_action(RegionAction{{80, 60, 160, 120}, std::nullopt}, obs, lookup, p);
  CHECK(out.source_doc_id == "d7");
  CHECK(out.raw_box == RegionBox{200, 150, 400, 300, CoordSpace::Raw});
  CHECK(out.target_index == 1);
  CHECK(out.view.crop == out.raw_box);

  obs.push_back({full_view(d2, p), "h2"});
  auto latest = apply_region_action(RegionAction{{0, 0, 28, 28}, std::nullopt}, obs, lookup, p);
  CHECK(latest.source_doc_id == "d2");
  auto first = apply_region_action(RegionAction{{80, 60, 160, 120}, 1}, obs, lookup, p);
  CHECK(first.source_doc_id == "d7");
  CHECK(first.target_index == 1);

  CHECK(code_of([&] { apply_region_action(RegionAction{{0, 0, 5, 5}, 3}, obs, lookup, p); }) ==
        ErrorCode::NoImageInContext);
  std::vector<ImageObservation> none;
  CHECK(code_of([&] { apply_region_action(RegionAction{{0, 0, 5, 5}, std::nullopt}, none, lookup, p); }) ==
        ErrorCode::NoImageInContext);

  EncoderProfile normalized;
  normalized.normalization_scale = 1000;
  auto n = apply_region_action(RegionAction{{100, 100, 200, 200}, 1}, obs, lookup, normalized);
  CHECK(n.raw_box == RegionBox{200, 150, 400, 300, CoordSpace::Raw});
}

TEST_CASE("image codecs and resampling") {
  auto png = load_image(std::string(VRAG_TEST_DATA) + "/tiny.png");
  CHECK(png.width == 37);
  CHECK(png.height == 23);
  auto jpg = load_image(std::string(VRAG_TEST_DATA) + "/tiny.jpg");
  CHECK(jpg.width == 37);
  CHECK(jpg.height == 23);

  auto again = decode_image(encode_png(png));
  CHECK(again.pixels == png.pixels);

  for (auto [w, h] : {std::pair{100, 61}, std::pair{12, 9}, std::pair{37, 23}, std::pair{5, 200}}) {
    CHECK(resize_bilinear(png, w, h).pixels == resize_bilinear_serial(png, w, h).pixels);
  }
  CHECK(resize_bilinear(png, 37, 23).pixels == png.pixels);

  std::vector<std::uint8_t> junk{1, 2, 3, 4, 5};
  CHECK(code_of([&] { decode_image(junk); }) == ErrorCode::ImageDecode);
}
