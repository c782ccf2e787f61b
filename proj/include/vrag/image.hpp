#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace vrag {

/// Interleaved 8-bit image, row-major, `channels` in {1, 3, 4}.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, int c) : width(w), height(h), channels(c), pixels(std::size_t(w) * h * c) {}

  std::uint8_t* row(int y) { return pixels.data() + std::size_t(y) * width * channels; }
  const std::uint8_t* row(int y) const { return pixels.data() + std::size_t(y) * width * channels; }
  bool operator==(const Image&) const = default;
};

/// Decodes PNG or JPEG (sniffed by magic bytes).
Image decode_image(std::span<const std::uint8_t> bytes);
Image load_image(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_png(const Image& image);
void save_png(const Image& image, const std::filesystem::path& path);

/// Sub-rectangle copy, [x0, x1) x [y0, y1) in pixel coordinates.
Image crop(const Image& image, int x0, int y0, int x1, int y1);

/// Bilinear resampling with pixel-centre alignment. The OpenMP kernel and the
/// serial reference produce identical bytes.
Image resize_bilinear(const Image& image, int out_width, int out_height);
Image resize_bilinear_serial(const Image& image, int out_width, int out_height);

/// Decoded-image cache keyed by path; read-mostly, safe for concurrent use.
class ImageCache {
 public:
  std::shared_ptr<const Image> get(const std::filesystem::path& path);
  std::size_t size() const;

 private:
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, std::shared_ptr<const Image>> entries_;
};

}  // namespace vrag
