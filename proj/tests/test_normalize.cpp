#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "fringebos/normalize.hpp"
#include "fringebos/parallel.hpp"
#include "fringebos/simulate.hpp"
#include "helpers.hpp"

using namespace fringebos;
using namespace fringebos::normalize;
using std::numbers::pi;

namespace {

RealField carrier(std::size_t n, double bg, double amp, double fx = 0.05) {
  RealField f(n, n);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) f(x, y) = bg + amp * std::cos(2 * pi * fx * double(x));
  }
  return f;
}

void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ErrorCode load_error(const std::filesystem::path& p) {
  try {
    load_weights(p);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("load_weights accepted a bad container");
  return ErrorCode::BadArguments;
}

const Arch kSmall{3, 4, 64};

}  // namespace

TEST_SUITE("normalize") {

TEST_CASE("classical: background and modulation removed from a plain carrier") {
  const RealField out = classical_normalize(carrier(256, 0.5, 0.5));
  const RealField ref = carrier(256, 0.0, 1.0);
  CHECK(testutil::max_abs_diff(out, ref, 10) < 0.05);
}

TEST_CASE("classical: an already normalized carrier is left alone") {
  const RealField in = carrier(256, 0.0, 1.0);
  CHECK(testutil::max_abs_diff(classical_normalize(in), in, 10) < 0.05);
}

TEST_CASE("classical: output is clamped to [-1, 1]") {
  Rng rng(2);
  simulate::SimScene s;
  s.width = s.height = 128;
  s.phase = simulate::random_zernike_phase(rng, 128, 128, 10, 12.0);
  s.background = RealField(128, 128, 0.2);
  s.modulation = simulate::modulation_map(simulate::ModulationKind::M2, 128, 128, rng);
  s.snr_db = 5.0;
  s.seed = 2;
  const RealField out = classical_normalize(simulate::synth_fringe(s));
  CHECK(min_value(out) >= -1.0);
  CHECK(max_value(out) <= 1.0);
}

TEST_CASE("classical: constant input has no carrier") {
  try {
    classical_normalize(RealField(64, 64, 0.7));
    FAIL("expected NoCarrier");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoCarrier);
  }
}

TEST_CASE("layer enumeration for depth 5, base 16") {
  const Arch arch;
  const auto layers = expected_layers(arch);
  std::size_t convs = 0, deconvs = 0, norms = 0;
  for (const auto& l : layers) {
    convs += l.kind == LayerKind::Conv;
    deconvs += l.kind == LayerKind::TransposedConv;
    norms += l.kind == LayerKind::NormScale || l.kind == LayerKind::NormBias;
  }
  CHECK(convs == 5);
  CHECK(deconvs == 5);
  CHECK(norms == 16);  // enc2..enc5 and dec1..dec4, scale + bias each
  CHECK(layers.front().name == "enc1.conv");
  CHECK(layers.front().shape == std::vector<std::size_t>{16, 1, 4, 4});
  CHECK(layers.back().name == "out.deconv");
  CHECK(layers.back().shape == std::vector<std::size_t>{32, 1, 4, 4});
  // hand count: convolutions 1041152, norm vectors 1184
  CHECK(parameter_count(arch) == 1042336);
  CHECK(arch.channels(1) == 16);
  CHECK(arch.channels(5) == 128);
}

TEST_CASE("architecture validation") {
  CHECK_THROWS_AS((Arch{1, 16, 256}.validate()), Error);
  CHECK_THROWS_AS((Arch{5, 16, 100}.validate()), Error);
  CHECK_NOTHROW((Arch{8, 64, 256}.validate()));
}

TEST_CASE("FNW1 round trip is bit exact") {
  const auto dir = testutil::scratch("fnw1_roundtrip");
  const auto w = random_weights(Arch{}, 7);
  save_weights(w, dir / "w.fnw");
  const auto back = load_weights(dir / "w.fnw");
  CHECK(back.arch == w.arch);
  CHECK(back.blob_sha256 == blob_hash(w.layers));
  REQUIRE(back.layers.size() == w.layers.size());
  for (std::size_t i = 0; i < w.layers.size(); ++i) {
    CHECK(back.layers[i].spec == w.layers[i].spec);
    REQUIRE(back.layers[i].data.size() == w.layers[i].data.size());
    CHECK(std::memcmp(back.layers[i].data.data(), w.layers[i].data.data(), 4 * w.layers[i].data.size()) == 0);
  }
  save_weights(back, dir / "again.fnw");
  CHECK(testutil::slurp(dir / "w.fnw") == testutil::slurp(dir / "again.fnw"));
}

TEST_CASE("FNW1 container layout") {
  const auto dir = testutil::scratch("fnw1_layout");
  const auto w = random_weights(kSmall, 1);
  save_weights(w, dir / "w.fnw");
  const auto bytes = testutil::slurp(dir / "w.fnw");
  REQUIRE(bytes.size() > 8);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "FNW1");
  std::uint32_t len = 0;
  for (int b = 0; b < 4; ++b) len |= std::uint32_t(bytes[4 + b]) << (8 * b);
  CHECK(bytes.size() == 8 + len + 4 * parameter_count(kSmall));
  const std::string header(bytes.begin() + 8, bytes.begin() + 8 + len);
  CHECK(header.find("\"blob_sha256\"") != std::string::npos);
  CHECK(header.find("\"byte_offset\"") != std::string::npos);
  // first float of the blob is the first weight, little endian
  float first;
  std::memcpy(&first, bytes.data() + 8 + len, 4);
  CHECK(first == w.layers[0].data[0]);
}

TEST_CASE("FNW1 corruption is detected") {
  const auto dir = testutil::scratch("fnw1_corrupt");
  save_weights(random_weights(kSmall, 2), dir / "w.fnw");
  const auto good = testutil::slurp(dir / "w.fnw");

  auto flipped = good;
  flipped.back() ^= 0x01;
  write_bytes(dir / "hash.fnw", flipped);
  CHECK(load_error(dir / "hash.fnw") == ErrorCode::HashMismatch);

  auto magic = good;
  magic[3] = '2';
  write_bytes(dir / "magic.fnw", magic);
  CHECK(load_error(dir / "magic.fnw") == ErrorCode::BadMagic);

  write_bytes(dir / "short.fnw", std::vector<unsigned char>(good.begin(), good.begin() + 20));
  CHECK(load_error(dir / "short.fnw") == ErrorCode::TruncatedPayload);

  write_bytes(dir / "blob.fnw", std::vector<unsigned char>(good.begin(), good.end() - 4));
  CHECK(load_error(dir / "blob.fnw") == ErrorCode::TruncatedPayload);

  std::string text(good.begin(), good.end());
  const auto at = text.find("[4,1,4,4]");
  REQUIRE(at != std::string::npos);
  text.replace(at, 9, "[4,1,4,5]");
  write_bytes(dir / "shape.fnw", std::vector<unsigned char>(text.begin(), text.end()));
  CHECK(load_error(dir / "shape.fnw") == ErrorCode::ShapeMismatch);

  CHECK(load_error(dir / "missing.fnw") == ErrorCode::IoFailure);
}

TEST_CASE("U-Net output shape, range and input size check") {
  const auto w = random_weights(Arch{}, 3, 0.2);
  const RealField img = testutil::random_field(256, 256, 4, 0.0, 1.0);
  const RealField out = unet_forward(w, img);
  CHECK(out.width() == 256);
  CHECK(out.height() == 256);
  CHECK(min_value(out) >= -1.0);
  CHECK(max_value(out) <= 1.0);
  CHECK(max_value(out) - min_value(out) > 1e-3);
  try {
    unet_forward(w, RealField(128, 128));
    FAIL("expected SizeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SizeMismatch);
  }
}

TEST_CASE("every layer influences the output") {
  const auto w = random_weights(kSmall, 5, 0.3);
  const RealField img = testutil::random_field(64, 64, 6);
  const RealField base = unet_forward_scaled(w, img);
  for (std::size_t i = 0; i < w.layers.size(); ++i) {
    auto changed = w;
    for (auto& v : changed.layers[i].data) v = v * 1.5f + 0.1f;
    CHECK_MESSAGE(unet_forward_scaled(changed, img) != base, w.layers[i].spec.name);
  }
}

TEST_CASE("U-Net is bit identical across runs and thread counts") {
  const auto w = random_weights(Arch{}, 8);
  const RealField img = testutil::random_field(256, 256, 9);
  set_thread_count(1);
  const RealField a = unet_forward(w, img);
  set_thread_count(4);
  const RealField b = unet_forward(w, img);
  const RealField c = unet_forward(w, img);
  set_thread_count(0);
  CHECK(a == b);
  CHECK(b == c);
}

TEST_CASE("normalize_auto dispatch") {
  const RealField fringe = carrier(256, 0.5, 0.4);
  CHECK(normalize_auto(fringe, nullptr) == classical_normalize(fringe));
  const auto w = random_weights(Arch{}, 10);
  CHECK(normalize_auto(fringe, &w) == unet_forward(w, fringe));
}

TEST_CASE("tiled inference on 512x512 has no seams") {
  Rng rng(11);
  simulate::SimScene s;
  s.width = s.height = 512;
  s.phase = simulate::random_zernike_phase(rng, 512, 512, 10, 20.0);
  s.background = RealField(512, 512, 0.5);
  s.modulation = RealField(512, 512, 0.4);
  s.seed = 11;
  const RealField img = simulate::clean_fringe(s);
  const auto w = random_weights(Arch{}, 12);
  const RealField out = normalize_auto(img, &w);
  REQUIRE(out.width() == 512);
  REQUIRE(out.height() == 512);
  CHECK(min_value(out) >= -1.0);
  CHECK(max_value(out) <= 1.0);
  // tile edges at 224 and 256 (starts 0, 224, 256; tiles end at 256 and 480);
  // a seam would show as a step larger than the neighbouring steps
  double worst = 0.0;
  for (std::size_t e : {224u, 256u, 480u}) {
    for (std::size_t t = 0; t < 512; ++t) {
      const double col = std::abs(out(e, t) - out(e - 1, t)) -
                         std::max(std::abs(out(e - 1, t) - out(e - 2, t)), std::abs(out(e + 1, t) - out(e, t)));
      const double row = std::abs(out(t, e) - out(t, e - 1)) -
                         std::max(std::abs(out(t, e - 1) - out(t, e - 2)), std::abs(out(t, e + 1) - out(t, e)));
      worst = std::max({worst, col, row});
    }
  }
  CHECK(worst < 0.05);
}

TEST_CASE("small images are mirror padded to one tile") {
  const auto w = random_weights(kSmall, 13);
  const RealField img = testutil::random_field(40, 50, 14);
  const RealField out = normalize_auto(img, &w);
  CHECK(out.width() == 40);
  CHECK(out.height() == 50);
  CHECK(all_finite(out));
}

}
