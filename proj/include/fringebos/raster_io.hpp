#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>

#include "fringebos/field.hpp"

namespace fringebos {

/// "FPR1" raster container: 4-byte magic, u32 width, u32 height, u8 dtype,
/// then the float32 payload. Everything little-endian.
enum class RasterDtype : std::uint8_t { Real32 = 0, Complex32 = 1 };

struct RasterHeader {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  RasterDtype dtype = RasterDtype::Real32;
};

inline constexpr std::size_t kRasterHeaderSize = 13;

using AnyField = std::variant<RealField, ComplexField>;

AnyField read_raster(const std::filesystem::path& path);
/// Reads a raster that must be real-valued (UnsupportedDtype otherwise).
RealField read_real_raster(const std::filesystem::path& path);
ComplexField read_complex_raster(const std::filesystem::path& path);

/// Samples are narrowed to float32 on write.
void write_raster(const RealField& field, const std::filesystem::path& path);
void write_raster(const ComplexField& field, const std::filesystem::path& path);

/// 16-bit grayscale PNG; v maps to round(65535 * clamp((v - lo) / (hi - lo), 0, 1)).
void export_png(const RealField& field, const std::filesystem::path& path, double lo, double hi);

/// 8-bit RGB PNG from interleaved rgb bytes (width * height * 3).
void write_png_rgb8(std::span<const std::uint8_t> rgb, std::size_t width, std::size_t height,
                    const std::filesystem::path& path);

}  // namespace fringebos
