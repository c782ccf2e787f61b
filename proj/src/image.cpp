#include "vrag/image.hpp"

#include <png.h>
#include <jpeglib.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>

#include "vrag/errors.hpp"

namespace vrag {

namespace {

bool is_png(std::span<const std::uint8_t> b) {
  return b.size() >= 8 && png_sig_cmp(b.data(), 0, 8) == 0;
}

bool is_jpeg(std::span<const std::uint8_t> b) {
  return b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF;
}

Image decode_png(std::span<const std::uint8_t> bytes) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::ImageDecode, img.message);
  }
  const bool alpha = (img.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  img.format = alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
  Image out(int(img.width), int(img.height), alpha ? 4 : 3);
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    png_image_free(&img);
    throw Error(ErrorCode::ImageDecode, img.message);
  }
  return out;
}

struct JpegErr {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
};

Image decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo;
  JpegErr err;
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = [](j_common_ptr c) { std::longjmp(reinterpret_cast<JpegErr*>(c->err)->jump, 1); };
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(ErrorCode::ImageDecode, "corrupt JPEG stream");
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  Image out(int(cinfo.output_width), int(cinfo.output_height), 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out.row(int(cinfo.output_scanline));
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return out;
}

// Source coordinate and weight for one output sample along an axis.
struct Tap {
  int i0, i1;
  float w1;
};

std::vector<Tap> make_taps(int in, int out) {
  std::vector<Tap> taps(out);
  const double scale = double(in) / out;
  for (int o = 0; o < out; ++o) {
    double src = (o + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, double(in - 1));
    int i0 = int(std::floor(src));
    int i1 = std::min(i0 + 1, in - 1);
    taps[o] = {i0, i1, float(src - i0)};
  }
  return taps;
}

inline void resize_row(const Image& src, Image& dst, int y, const std::vector<Tap>& tx,
                       const std::vector<Tap>& ty) {
  const int c = src.channels;
  const auto& t = ty[y];
  const std::uint8_t* r0 = src.row(t.i0);
  const std::uint8_t* r1 = src.row(t.i1);
  std::uint8_t* out = dst.row(y);
  for (int x = 0; x < dst.width; ++x) {
    const auto& s = tx[x];
    for (int k = 0; k < c; ++k) {
      float top = r0[s.i0 * c + k] + s.w1 * (r0[s.i1 * c + k] - r0[s.i0 * c + k]);
      float bot = r1[s.i0 * c + k] + s.w1 * (r1[s.i1 * c + k] - r1[s.i0 * c + k]);
      float v = top + t.w1 * (bot - top);
      out[x * c + k] = static_cast<std::uint8_t>(std::clamp(v + 0.5f, 0.0f, 255.0f));
    }
  }
}

void check_resize_args(const Image& image, int w, int h) {
  if (image.width <= 0 || image.height <= 0 || w <= 0 || h <= 0) {
    throw Error(ErrorCode::ZeroDimension, "resize with empty extent");
  }
}

}  // namespace

Image decode_image(std::span<const std::uint8_t> bytes) {
  if (is_png(bytes)) return decode_png(bytes);
  if (is_jpeg(bytes)) return decode_jpeg(bytes);
  throw Error(ErrorCode::ImageDecode, "unrecognised image payload (expected PNG or JPEG)");
}

Image load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open image " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_image(bytes);
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = png_uint_32(image.width);
  img.height = png_uint_32(image.height);
  img.format = image.channels == 4 ? PNG_FORMAT_RGBA : image.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, image.pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::ImageDecode, img.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, image.pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::ImageDecode, img.message);
  }
  out.resize(size);
  return out;
}

void save_png(const Image& image, const std::filesystem::path& path) {
  auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

Image crop(const Image& image, int x0, int y0, int x1, int y1) {
  x0 = std::clamp(x0, 0, image.width);
  x1 = std::clamp(x1, 0, image.width);
  y0 = std::clamp(y0, 0, image.height);
  y1 = std::clamp(y1, 0, image.height);
  if (x1 <= x0 || y1 <= y0) throw Error(ErrorCode::DegenerateRegion, "empty crop");
  Image out(x1 - x0, y1 - y0, image.channels);
  const std::size_t span = std::size_t(out.width) * image.channels;
  for (int y = 0; y < out.height; ++y) {
    std::memcpy(out.row(y), image.row(y0 + y) + std::size_t(x0) * image.channels, span);
  }
  return out;
}

Image resize_bilinear_serial(const Image& image, int out_width, int out_height) {
  check_resize_args(image, out_width, out_height);
  Image out(out_width, out_height, image.channels);
  auto tx = make_taps(image.width, out_width);
  auto ty = make_taps(image.height, out_height);
  for (int y = 0; y < out_height; ++y) resize_row(image, out, y, tx, ty);
  return out;
}

Image resize_bilinear(const Image& image, int out_width, int out_height) {
  check_resize_args(image, out_width, out_height);
  Image out(out_width, out_height, image.channels);
  auto tx = make_taps(image.width, out_width);
  auto ty = make_taps(image.height, out_height);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < out_height; ++y) resize_row(image, out, y, tx, ty);
  return out;
}

std::shared_ptr<const Image> ImageCache::get(const std::filesystem::path& path) {
  const auto key = path.string();
  {
    std::shared_lock lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  }
  auto decoded = std::make_shared<const Image>(load_image(path));
  std::unique_lock lock(mutex_);
  auto [it, inserted] = entries_.emplace(key, std::move(decoded));
  return it->second;
}

std::size_t ImageCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

}  // namespace vrag
