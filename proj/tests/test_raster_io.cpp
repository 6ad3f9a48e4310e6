#include <doctest.h>

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>

#include "fringebos/raster_io.hpp"
#include "helpers.hpp"

using namespace fringebos;

namespace {

void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<unsigned char> header(const char* magic, std::uint32_t w, std::uint32_t h, std::uint8_t dtype) {
  std::vector<unsigned char> b(magic, magic + 4);
  for (auto v : {w, h}) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  b.push_back(dtype);
  return b;
}

// Rounds through float32. The volatile keeps gcc 11's SLP vectorizer from
// dropping the narrowing when pairs of these land in a complex<double>.
double f32(double x) {
  volatile float f = static_cast<float>(x);
  return f;
}

// 16-bit grayscale samples, row-major.
std::vector<unsigned> read_png16(const std::filesystem::path& p) {
  FILE* fp = std::fopen(p.c_str(), "rb");
  REQUIRE(fp != nullptr);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, fp);
  png_read_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  const auto w = png_get_image_width(png, info), h = png_get_image_height(png, info);
  CHECK(png_get_bit_depth(png, info) == 16);
  CHECK(png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY);
  png_bytepp rows = png_get_rows(png, info);
  std::vector<unsigned> out;
  for (png_uint_32 y = 0; y < h; ++y) {
    for (png_uint_32 x = 0; x < w; ++x) out.push_back(rows[y][2 * x] << 8 | rows[y][2 * x + 1]);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return out;
}

}  // namespace

TEST_SUITE("raster") {

TEST_CASE("2x2 real payload reads back verbatim") {
  const auto dir = testutil::scratch("raster_small");
  auto bytes = header("FPR1", 2, 2, 0);
  for (float v : {0.f, 1.f, 2.f, 3.f}) {
    unsigned char b[4];
    std::memcpy(b, &v, 4);
    bytes.insert(bytes.end(), b, b + 4);
  }
  write_bytes(dir / "a.fpr", bytes);
  const RealField f = read_real_raster(dir / "a.fpr");
  REQUIRE(f.width() == 2);
  REQUIRE(f.height() == 2);
  CHECK(f.storage() == std::vector<double>{0, 1, 2, 3});
  // sample(x, y) = data[y * w + x]
  CHECK(f(1, 0) == 1.0);
  CHECK(f(0, 1) == 2.0);
}

TEST_CASE("bad magic, truncation and dtype errors") {
  const auto dir = testutil::scratch("raster_errors");
  auto bad = header("FPRX", 1, 1, 0);
  bad.resize(bad.size() + 4, 0);
  write_bytes(dir / "bad.fpr", bad);
  try {
    read_raster(dir / "bad.fpr");
    FAIL("expected BadMagic");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadMagic);
  }

  auto trunc = header("FPR1", 4, 4, 0);
  trunc.resize(trunc.size() + 10, 0);
  write_bytes(dir / "trunc.fpr", trunc);
  try {
    read_raster(dir / "trunc.fpr");
    FAIL("expected TruncatedPayload");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TruncatedPayload);
  }

  auto dtype = header("FPR1", 1, 1, 7);
  dtype.resize(dtype.size() + 8, 0);
  write_bytes(dir / "dtype.fpr", dtype);
  try {
    read_raster(dir / "dtype.fpr");
    FAIL("expected UnsupportedDtype");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedDtype);
  }

  write_raster(ComplexField(2, 2), dir / "c.fpr");
  CHECK_THROWS_AS(read_real_raster(dir / "c.fpr"), Error);
}

TEST_CASE("1x1 field 0.5 encodes as header plus 0000003F") {
  const auto dir = testutil::scratch("raster_encoding");
  write_raster(RealField(1, 1, 0.5), dir / "one.fpr");
  const auto bytes = testutil::slurp(dir / "one.fpr");
  REQUIRE(bytes.size() == kRasterHeaderSize + 4);
  CHECK(std::vector<unsigned char>(bytes.begin(), bytes.begin() + 13) == header("FPR1", 1, 1, 0));
  CHECK(bytes[13] == 0x00);
  CHECK(bytes[14] == 0x00);
  CHECK(bytes[15] == 0x00);
  CHECK(bytes[16] == 0x3F);
}

TEST_CASE("empty path is an IoFailure") {
  try {
    write_raster(RealField(1, 1), "");
    FAIL("expected IoFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoFailure);
  }
}

TEST_CASE("write/read round trip is bit exact for 100 random fields") {
  const auto dir = testutil::scratch("raster_roundtrip");
  Rng rng(11);
  std::uniform_int_distribution<std::size_t> dim(1, 40);
  std::normal_distribution<double> n(0.0, 100.0);
  for (int k = 0; k < 100; ++k) {
    const std::size_t w = dim(rng), h = dim(rng);
    if (k % 2 == 0) {
      RealField f(w, h);
      for (auto& v : f.data()) v = f32(n(rng));
      write_raster(f, dir / "r.fpr");
      const auto g = read_raster(dir / "r.fpr");
      REQUIRE(std::holds_alternative<RealField>(g));
      CHECK(std::get<RealField>(g) == f);
    } else {
      ComplexField f(w, h);
      for (auto& v : f.data()) {
        const double re = f32(n(rng));
        v = Complex(re, f32(n(rng)));
      }
      write_raster(f, dir / "c.fpr");
      const auto g = read_raster(dir / "c.fpr");
      REQUIRE(std::holds_alternative<ComplexField>(g));
      CHECK(std::get<ComplexField>(g) == f);
    }
  }
}

TEST_CASE("export_png maps lo, hi and the midpoint") {
  const auto dir = testutil::scratch("raster_png");
  export_png(RealField(3, 2, -1.0), dir / "lo.png", -1.0, 1.0);
  export_png(RealField(3, 2, 1.0), dir / "hi.png", -1.0, 1.0);
  export_png(RealField(3, 2, 0.0), dir / "mid.png", -1.0, 1.0);
  for (auto v : read_png16(dir / "lo.png")) CHECK(v == 0);
  for (auto v : read_png16(dir / "hi.png")) CHECK(v == 65535);
  for (auto v : read_png16(dir / "mid.png")) CHECK(v == 32768);

  RealField ramp(4, 1);
  ramp.storage() = {-5.0, 0.25, 0.5, 9.0};
  export_png(ramp, dir / "ramp.png", 0.0, 1.0);
  CHECK(read_png16(dir / "ramp.png") == std::vector<unsigned>{0, 16384, 32768, 65535});

  try {
    export_png(RealField(3, 2), dir / "x.png", 1.0, 1.0);
    FAIL("expected DegenerateRange");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateRange);
  }
}

}
