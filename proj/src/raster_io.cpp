#include "fringebos/raster_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

namespace fringebos {
namespace {

constexpr std::array<char, 4> kMagic = {'F', 'P', 'R', '1'};

void put_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f32(std::vector<std::uint8_t>& buf, double v) {
  put_u32(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

double get_f32(const std::uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }

std::vector<std::uint8_t> encode_header(std::size_t width, std::size_t height, RasterDtype dtype) {
  if (width > UINT32_MAX || height > UINT32_MAX) {
    throw Error(ErrorCode::IoFailure, "raster dimensions exceed 32 bits");
  }
  std::vector<std::uint8_t> buf(kMagic.begin(), kMagic.end());
  put_u32(buf, static_cast<std::uint32_t>(width));
  put_u32(buf, static_cast<std::uint32_t>(height));
  buf.push_back(static_cast<std::uint8_t>(dtype));
  return buf;
}

void write_bytes(const std::vector<std::uint8_t>& buf, const std::filesystem::path& path) {
  if (path.empty()) throw Error(ErrorCode::IoFailure, "empty output path");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "short write to " + path.string());
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

}  // namespace

AnyField read_raster(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  if (bytes.size() < kRasterHeaderSize) {
    if (bytes.size() >= 4 && !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
      throw Error(ErrorCode::BadMagic, path.string());
    }
    throw Error(ErrorCode::TruncatedPayload, "header shorter than 13 bytes: " + path.string());
  }
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw Error(ErrorCode::BadMagic, path.string());
  }
  const std::size_t width = get_u32(bytes.data() + 4);
  const std::size_t height = get_u32(bytes.data() + 8);
  const std::uint8_t dtype = bytes[12];
  if (dtype > 1) {
    throw Error(ErrorCode::UnsupportedDtype, "dtype " + std::to_string(dtype));
  }
  const std::size_t per_sample = dtype == 0 ? 4 : 8;
  const std::size_t need = kRasterHeaderSize + width * height * per_sample;
  if (bytes.size() < need) {
    throw Error(ErrorCode::TruncatedPayload,
                path.string() + ": have " + std::to_string(bytes.size()) + " bytes, need " +
                    std::to_string(need));
  }
  const std::uint8_t* p = bytes.data() + kRasterHeaderSize;
  if (dtype == 0) {
    RealField f(width, height);
    for (auto& v : f.data()) {
      v = get_f32(p);
      p += 4;
    }
    return f;
  }
  ComplexField f(width, height);
  for (auto& v : f.data()) {
    v = Complex(get_f32(p), get_f32(p + 4));
    p += 8;
  }
  return f;
}

RealField read_real_raster(const std::filesystem::path& path) {
  auto any = read_raster(path);
  if (auto* f = std::get_if<RealField>(&any)) return std::move(*f);
  throw Error(ErrorCode::UnsupportedDtype, path.string() + " holds complex samples");
}

ComplexField read_complex_raster(const std::filesystem::path& path) {
  auto any = read_raster(path);
  if (auto* f = std::get_if<ComplexField>(&any)) return std::move(*f);
  throw Error(ErrorCode::UnsupportedDtype, path.string() + " holds real samples");
}

void write_raster(const RealField& field, const std::filesystem::path& path) {
  auto buf = encode_header(field.width(), field.height(), RasterDtype::Real32);
  buf.reserve(buf.size() + 4 * field.size());
  for (double v : field.data()) put_f32(buf, v);
  write_bytes(buf, path);
}

void write_raster(const ComplexField& field, const std::filesystem::path& path) {
  auto buf = encode_header(field.width(), field.height(), RasterDtype::Complex32);
  buf.reserve(buf.size() + 8 * field.size());
  for (const auto& v : field.data()) {
    put_f32(buf, v.real());
    put_f32(buf, v.imag());
  }
  write_bytes(buf, path);
}

namespace {

void write_png(const std::filesystem::path& path, std::size_t width, std::size_t height,
               int bit_depth, int color_type, const std::vector<png_bytep>& rows) {
  if (path.empty()) throw Error(ErrorCode::IoFailure, "empty output path");
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoFailure, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoFailure, "libpng write failed for " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

void export_png(const RealField& field, const std::filesystem::path& path, double lo, double hi) {
  if (!(lo < hi)) throw Error(ErrorCode::DegenerateRange, "export_png needs lo < hi");
  // PNG stores 16-bit samples big-endian
  std::vector<std::uint8_t> pixels(field.size() * 2);
  for (std::size_t i = 0; i < field.size(); ++i) {
    const double t = std::clamp((field.data()[i] - lo) / (hi - lo), 0.0, 1.0);
    const auto q = static_cast<std::uint16_t>(std::lround(65535.0 * t));
    pixels[2 * i] = static_cast<std::uint8_t>(q >> 8);
    pixels[2 * i + 1] = static_cast<std::uint8_t>(q & 0xff);
  }
  std::vector<png_bytep> rows(field.height());
  for (std::size_t y = 0; y < field.height(); ++y) rows[y] = pixels.data() + y * field.width() * 2;
  write_png(path, field.width(), field.height(), 16, PNG_COLOR_TYPE_GRAY, rows);
}

void write_png_rgb8(std::span<const std::uint8_t> rgb, std::size_t width, std::size_t height,
                    const std::filesystem::path& path) {
  if (rgb.size() != width * height * 3) {
    throw Error(ErrorCode::DimensionMismatch, "rgb buffer size does not match image shape");
  }
  std::vector<png_bytep> rows(height);
  for (std::size_t y = 0; y < height; ++y) {
    rows[y] = const_cast<png_bytep>(rgb.data() + y * width * 3);
  }
  write_png(path, width, height, 8, PNG_COLOR_TYPE_RGB, rows);
}

}  // namespace fringebos
