#include "fringebos/normalize.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>

#include "fringebos/demodulate.hpp"
#include "fringebos/fft.hpp"
#include "fringebos/parallel.hpp"
#include "fringebos/rng.hpp"
#include "json.hpp"

namespace fringebos::normalize {

using std::numbers::pi;

namespace {

std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  i %= period;
  if (i < 0) i += period;
  return static_cast<std::size_t>(i < static_cast<std::ptrdiff_t>(n) ? i : period - i);
}

RealField gaussian_blur(const RealField& f, double sigma) {
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    taps[i + radius] = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
    sum += taps[i + radius];
  }
  for (auto& t : taps) t /= sum;
  RealField tmp(f.width(), f.height()), out(f.width(), f.height());
  for (std::size_t y = 0; y < f.height(); ++y) {
    for (std::size_t x = 0; x < f.width(); ++x) {
      double s = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        s += taps[k + radius] * f(reflect(static_cast<std::ptrdiff_t>(x) + k, f.width()), y);
      }
      tmp(x, y) = s;
    }
  }
  for (std::size_t y = 0; y < f.height(); ++y) {
    for (std::size_t x = 0; x < f.width(); ++x) {
      double s = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        s += taps[k + radius] * tmp(x, reflect(static_cast<std::ptrdiff_t>(y) + k, f.height()));
      }
      out(x, y) = s;
    }
  }
  return out;
}

}  // namespace

RealField classical_normalize(const RealField& img) {
  if (img.empty() || !all_finite(img)) {
    throw Error(ErrorCode::NoCarrier, "empty or non-finite input");
  }
  auto spectrum = fft::transform2d(to_complex(img), fft::Direction::Forward);
  for (std::size_t ky = 0; ky < img.height(); ++ky) {
    const double fy = fft::bin_frequency(ky, img.height());
    for (std::size_t kx = 0; kx < img.width(); ++kx) {
      const double fx = fft::bin_frequency(kx, img.width());
      if (std::hypot(fx, fy) <= 0.01) spectrum(kx, ky) = 0.0;
    }
  }
  const RealField ac = real_part(fft::inverse2d(spectrum));
  double peak = 0.0, scale = 0.0;
  for (double v : ac.data()) peak = std::max(peak, std::abs(v));
  for (double v : img.data()) scale = std::max(scale, std::abs(v));
  if (!(peak > 1e-9 * std::max(scale, 1.0))) {
    throw Error(ErrorCode::NoCarrier, "no AC content after background removal");
  }
  double fx_hat;
  try {
    fx_hat = demodulate::estimate_carrier(ac);
  } catch (const Error& e) {
    throw Error(ErrorCode::NoCarrier, e.what());
  }
  if (!(fx_hat > 0.01)) throw Error(ErrorCode::NoCarrier, "carrier too close to DC");

  const RealField envelope = gaussian_blur(abs(demodulate::analytic_signal_extended(ac)), 1.0 / (2.0 * fx_hat));
  const double floor = 1e-3 * max_value(envelope);
  RealField out(img.width(), img.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data()[i] = std::clamp(ac.data()[i] / std::max(envelope.data()[i], floor), -1.0, 1.0);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::size_t Arch::channels(std::size_t level) const {
  const std::size_t mult = level >= 4 ? 8 : (std::size_t{1} << (level - 1));
  return base_channels * mult;
}

void Arch::validate() const {
  if (depth < 2 || base_channels == 0 || input_size == 0) {
    throw Error(ErrorCode::ShapeMismatch, "architecture needs depth >= 2 and non-zero sizes");
  }
  if (depth >= 32 || input_size % (std::size_t{1} << depth) != 0) {
    throw Error(ErrorCode::ShapeMismatch, "input_size must be divisible by 2^depth");
  }
}

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv: return "conv";
    case LayerKind::TransposedConv: return "transposed-conv";
    case LayerKind::NormScale: return "norm-scale";
    case LayerKind::NormBias: return "norm-bias";
  }
  return "?";
}

LayerKind parse_layer_kind(const std::string& s) {
  if (s == "conv") return LayerKind::Conv;
  if (s == "transposed-conv") return LayerKind::TransposedConv;
  if (s == "norm-scale") return LayerKind::NormScale;
  if (s == "norm-bias") return LayerKind::NormBias;
  throw Error(ErrorCode::ShapeMismatch, "unknown layer kind '" + s + "'");
}

std::size_t LayerSpec::element_count() const {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::vector<LayerSpec> expected_layers(const Arch& arch) {
  arch.validate();
  std::vector<LayerSpec> layers;
  auto add_norm = [&](const std::string& prefix, std::size_t ch) {
    layers.push_back({prefix + ".norm.scale", LayerKind::NormScale, {ch}});
    layers.push_back({prefix + ".norm.bias", LayerKind::NormBias, {ch}});
  };
  for (std::size_t i = 1; i <= arch.depth; ++i) {
    const std::size_t in = i == 1 ? 1 : arch.channels(i - 1);
    const std::string prefix = "enc" + std::to_string(i);
    layers.push_back({prefix + ".conv", LayerKind::Conv, {arch.channels(i), in, 4, 4}});
    if (i > 1) add_norm(prefix, arch.channels(i));
  }
  for (std::size_t k = 1; k < arch.depth; ++k) {
    const std::size_t in = k == 1 ? arch.channels(arch.depth) : 2 * arch.channels(arch.depth - k + 1);
    const std::size_t out = arch.channels(arch.depth - k);
    const std::string prefix = "dec" + std::to_string(k);
    layers.push_back({prefix + ".deconv", LayerKind::TransposedConv, {in, out, 4, 4}});
    add_norm(prefix, out);
  }
  layers.push_back({"out.deconv", LayerKind::TransposedConv, {2 * arch.channels(1), 1, 4, 4}});
  return layers;
}

std::size_t parameter_count(const Arch& arch) {
  std::size_t n = 0;
  for (const auto& l : expected_layers(arch)) n += l.element_count();
  return n;
}

std::array<std::uint8_t, 32> blob_hash(const std::vector<Layer>& layers) {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw Error(ErrorCode::IoFailure, "EVP_MD_CTX_new failed");
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<std::uint8_t> chunk;
  for (const auto& l : layers) {
    chunk.resize(l.data.size() * 4);
    for (std::size_t i = 0; i < l.data.size(); ++i) {
      const auto bits = std::bit_cast<std::uint32_t>(l.data[i]);
      for (int b = 0; b < 4; ++b) chunk[4 * i + b] = static_cast<std::uint8_t>(bits >> (8 * b));
    }
    EVP_DigestUpdate(ctx, chunk.data(), chunk.size());
  }
  std::array<std::uint8_t, 32> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest.data(), &len);
  EVP_MD_CTX_free(ctx);
  return digest;
}

namespace {

std::string to_hex(const std::array<std::uint8_t, 32>& bytes) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  for (auto b : bytes) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 0xf]);
  }
  return s;
}

std::array<std::uint8_t, 32> from_hex(const std::string& s) {
  if (s.size() != 64) throw Error(ErrorCode::HashMismatch, "blob_sha256 must be 64 hex digits");
  std::array<std::uint8_t, 32> out{};
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw Error(ErrorCode::HashMismatch, "invalid hex digit in blob_sha256");
  };
  for (std::size_t i = 0; i < 32; ++i) {
    out[i] = static_cast<std::uint8_t>(nibble(s[2 * i]) << 4 | nibble(s[2 * i + 1]));
  }
  return out;
}

}  // namespace

ModelWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  if (bytes.size() < 8 || !std::equal(bytes.begin(), bytes.begin() + 4, "FNW1")) {
    throw Error(ErrorCode::BadMagic, path.string() + " is not an FNW1 container");
  }
  const std::size_t header_len = static_cast<std::size_t>(bytes[4]) | (std::size_t{bytes[5]} << 8) |
                                 (std::size_t{bytes[6]} << 16) | (std::size_t{bytes[7]} << 24);
  if (bytes.size() < 8 + header_len) {
    throw Error(ErrorCode::TruncatedPayload, "FNW1 header extends past end of file");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadMagic, std::string("malformed FNW1 header: ") + e.what());
  }

  ModelWeights w;
  std::vector<LayerSpec> expected;
  try {
    const auto& a = header.at("arch");
    w.arch = {a.at("depth").get<std::size_t>(), a.at("base_channels").get<std::size_t>(),
              a.at("input_size").get<std::size_t>()};
    expected = expected_layers(w.arch);
    const auto& layers = header.at("layers");
    if (layers.size() != expected.size()) {
      throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(expected.size()) +
                                                " layers, found " + std::to_string(layers.size()));
    }
    const std::uint8_t* blob = bytes.data() + 8 + header_len;
    const std::size_t blob_size = bytes.size() - 8 - header_len;
    std::size_t offset = 0;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      LayerSpec spec{layers[i].at("name").get<std::string>(),
                     parse_layer_kind(layers[i].at("kind").get<std::string>()),
                     layers[i].at("shape").get<std::vector<std::size_t>>()};
      if (!(spec == expected[i])) {
        throw Error(ErrorCode::ShapeMismatch, "layer " + std::to_string(i) + " ('" + spec.name +
                                                  "') does not match the architecture");
      }
      if (layers[i].at("byte_offset").get<std::size_t>() != offset) {
        throw Error(ErrorCode::ShapeMismatch, "layer '" + spec.name + "' has a bad byte_offset");
      }
      const std::size_t count = spec.element_count();
      if (offset + 4 * count > blob_size) {
        throw Error(ErrorCode::TruncatedPayload, "blob too short for layer '" + spec.name + "'");
      }
      Layer layer{spec, std::vector<float>(count)};
      for (std::size_t k = 0; k < count; ++k) {
        const std::uint8_t* p = blob + offset + 4 * k;
        const std::uint32_t bits = std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) |
                                   (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
        layer.data[k] = std::bit_cast<float>(bits);
      }
      offset += 4 * count;
      w.layers.push_back(std::move(layer));
    }
    if (offset != blob_size) {
      throw Error(ErrorCode::ShapeMismatch, "trailing bytes after the last tensor");
    }
    w.blob_sha256 = from_hex(header.at("blob_sha256").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ShapeMismatch, std::string("FNW1 header: ") + e.what());
  }
  if (blob_hash(w.layers) != w.blob_sha256) {
    throw Error(ErrorCode::HashMismatch, "blob hash does not match header");
  }
  return w;
}

void save_weights(const ModelWeights& w, const std::filesystem::path& path) {
  const auto expected = expected_layers(w.arch);
  if (expected.size() != w.layers.size()) {
    throw Error(ErrorCode::ShapeMismatch, "layer count does not match the architecture");
  }
  nlohmann::ordered_json header;
  header["arch"] = {{"depth", w.arch.depth},
                    {"base_channels", w.arch.base_channels},
                    {"input_size", w.arch.input_size}};
  header["layers"] = nlohmann::ordered_json::array();
  std::size_t offset = 0;
  for (std::size_t i = 0; i < w.layers.size(); ++i) {
    const auto& l = w.layers[i];
    if (!(l.spec == expected[i]) || l.data.size() != l.spec.element_count()) {
      throw Error(ErrorCode::ShapeMismatch, "layer '" + l.spec.name + "' has the wrong shape");
    }
    nlohmann::ordered_json entry;
    entry["name"] = l.spec.name;
    entry["kind"] = to_string(l.spec.kind);
    entry["shape"] = l.spec.shape;
    entry["byte_offset"] = offset;
    header["layers"].push_back(entry);
    offset += 4 * l.data.size();
  }
  header["blob_sha256"] = to_hex(blob_hash(w.layers));
  const std::string text = header.dump();

  std::vector<std::uint8_t> buf = {'F', 'N', 'W', '1'};
  const auto len = static_cast<std::uint32_t>(text.size());
  for (int b = 0; b < 4; ++b) buf.push_back(static_cast<std::uint8_t>(len >> (8 * b)));
  buf.insert(buf.end(), text.begin(), text.end());
  for (const auto& l : w.layers) {
    for (float v : l.data) {
      const auto bits = std::bit_cast<std::uint32_t>(v);
      for (int b = 0; b < 4; ++b) buf.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
    }
  }
  if (path.empty()) throw Error(ErrorCode::IoFailure, "empty output path");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "short write to " + path.string());
}

ModelWeights random_weights(const Arch& arch, std::uint64_t seed, double kernel_scale) {
  ModelWeights w;
  w.arch = arch;
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (auto& spec : expected_layers(arch)) {
    Layer layer{spec, std::vector<float>(spec.element_count())};
    for (auto& v : layer.data) {
      const double z = gauss(rng);
      switch (spec.kind) {
        case LayerKind::Conv:
        case LayerKind::TransposedConv: v = static_cast<float>(kernel_scale * z); break;
        case LayerKind::NormScale: v = static_cast<float>(1.0 + 0.1 * z); break;
        case LayerKind::NormBias: v = static_cast<float>(0.05 * z); break;
      }
    }
    w.layers.push_back(std::move(layer));
  }
  w.blob_sha256 = blob_hash(w.layers);
  return w;
}

// ---------------------------------------------------------------------------
// Forward pass

namespace {

struct Activation {
  std::size_t channels = 0, height = 0, width = 0;
  std::vector<float> v;

  Activation(std::size_t c, std::size_t h, std::size_t w) : channels(c), height(h), width(w), v(c * h * w, 0.0f) {}
  float* plane(std::size_t c) { return v.data() + c * height * width; }
  const float* plane(std::size_t c) const { return v.data() + c * height * width; }
};

// 4x4, stride 2, zero padding 1. Weights [out][in][4][4].
Activation conv_down(const Activation& in, const Layer& layer) {
  const std::size_t co = layer.spec.shape[0], ci = layer.spec.shape[1];
  Activation out(co, in.height / 2, in.width / 2);
  parallel_for(0, co, [&](std::size_t o) {
    float* dst = out.plane(o);
    for (std::size_t i = 0; i < ci; ++i) {
      const float* src = in.plane(i);
      const float* k = layer.data.data() + (o * ci + i) * 16;
      for (std::size_t ky = 0; ky < 4; ++ky) {
        for (std::size_t kx = 0; kx < 4; ++kx) {
          const float w = k[ky * 4 + kx];
          for (std::size_t y = 0; y < out.height; ++y) {
            const auto sy = static_cast<std::ptrdiff_t>(2 * y + ky) - 1;
            if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(in.height)) continue;
            const float* row = src + static_cast<std::size_t>(sy) * in.width;
            float* drow = dst + y * out.width;
            for (std::size_t x = 0; x < out.width; ++x) {
              const auto sx = static_cast<std::ptrdiff_t>(2 * x + kx) - 1;
              if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(in.width)) continue;
              drow[x] += w * row[sx];
            }
          }
        }
      }
    }
  });
  return out;
}

// Transposed 4x4, stride 2, padding 1 (output 2x): in(y, x) scatters to
// out(2y - 1 + ky, 2x - 1 + kx). Weights [in][out][4][4].
Activation conv_up(const Activation& in, const Layer& layer) {
  const std::size_t ci = layer.spec.shape[0], co = layer.spec.shape[1];
  Activation out(co, in.height * 2, in.width * 2);
  parallel_for(0, co, [&](std::size_t o) {
    float* dst = out.plane(o);
    for (std::size_t i = 0; i < ci; ++i) {
      const float* src = in.plane(i);
      const float* k = layer.data.data() + (i * co + o) * 16;
      for (std::size_t ky = 0; ky < 4; ++ky) {
        for (std::size_t kx = 0; kx < 4; ++kx) {
          const float w = k[ky * 4 + kx];
          for (std::size_t y = 0; y < in.height; ++y) {
            const auto ty = static_cast<std::ptrdiff_t>(2 * y + ky) - 1;
            if (ty < 0 || ty >= static_cast<std::ptrdiff_t>(out.height)) continue;
            const float* row = src + y * in.width;
            float* drow = dst + static_cast<std::size_t>(ty) * out.width;
            for (std::size_t x = 0; x < in.width; ++x) {
              const auto tx = static_cast<std::ptrdiff_t>(2 * x + kx) - 1;
              if (tx < 0 || tx >= static_cast<std::ptrdiff_t>(out.width)) continue;
              drow[tx] += w * row[x];
            }
          }
        }
      }
    }
  });
  return out;
}

void affine(Activation& a, const Layer& scale, const Layer& bias) {
  const std::size_t hw = a.height * a.width;
  for (std::size_t c = 0; c < a.channels; ++c) {
    float* p = a.plane(c);
    const float s = scale.data[c], b = bias.data[c];
    for (std::size_t i = 0; i < hw; ++i) p[i] = p[i] * s + b;
  }
}

void leaky_relu(Activation& a) {
  for (auto& v : a.v) v = v > 0.0f ? v : 0.2f * v;
}

void relu(Activation& a) {
  for (auto& v : a.v) v = std::max(v, 0.0f);
}

Activation concat(const Activation& a, const Activation& b) {
  Activation out(a.channels + b.channels, a.height, a.width);
  std::copy(a.v.begin(), a.v.end(), out.v.begin());
  std::copy(b.v.begin(), b.v.end(), out.v.begin() + static_cast<std::ptrdiff_t>(a.v.size()));
  return out;
}

}  // namespace

RealField unet_forward_scaled(const ModelWeights& w, const RealField& scaled) {
  const Arch& arch = w.arch;
  if (scaled.width() != arch.input_size || scaled.height() != arch.input_size) {
    throw Error(ErrorCode::SizeMismatch,
                "input must be " + std::to_string(arch.input_size) + "x" + std::to_string(arch.input_size));
  }
  if (w.layers.size() != expected_layers(arch).size()) {
    throw Error(ErrorCode::ShapeMismatch, "weights do not match the architecture");
  }
  std::size_t next = 0;
  auto take = [&]() -> const Layer& { return w.layers[next++]; };

  Activation x(1, arch.input_size, arch.input_size);
  std::transform(scaled.data().begin(), scaled.data().end(), x.v.begin(),
                 [](double v) { return static_cast<float>(v); });

  std::vector<Activation> skips;
  for (std::size_t i = 1; i <= arch.depth; ++i) {
    x = conv_down(x, take());
    if (i > 1) {
      const Layer& s = take();
      affine(x, s, take());
    }
    leaky_relu(x);
    skips.push_back(x);
  }
  for (std::size_t k = 1; k < arch.depth; ++k) {
    x = conv_up(x, take());
    const Layer& s = take();
    affine(x, s, take());
    relu(x);
    x = concat(x, skips[arch.depth - k - 1]);
  }
  x = conv_up(x, take());

  RealField out(arch.input_size, arch.input_size);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::tanh(static_cast<double>(x.v[i]));
  return out;
}

namespace {

RealField scale_to_unit(const RealField& img, double lo, double hi) {
  RealField out(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) {
    out.data()[i] = hi > lo ? 2.0 * (img.data()[i] - lo) / (hi - lo) - 1.0 : 0.0;
  }
  return out;
}

std::vector<std::size_t> tile_starts(std::size_t size, std::size_t tile, std::size_t overlap) {
  std::vector<std::size_t> starts{0};
  const std::size_t stride = tile - overlap;
  while (starts.back() + tile < size) starts.push_back(std::min(starts.back() + stride, size - tile));
  return starts;
}

// Raised-cosine ramp over `overlap` samples at interior tile edges.
std::vector<double> blend_profile(std::size_t tile, std::size_t overlap, bool ramp_lo, bool ramp_hi) {
  std::vector<double> w(tile, 1.0);
  for (std::size_t t = 0; t < overlap && t < tile; ++t) {
    const double r = 0.5 - 0.5 * std::cos(pi * (static_cast<double>(t) + 0.5) / static_cast<double>(overlap));
    if (ramp_lo) w[t] = std::min(w[t], r);
    if (ramp_hi) w[tile - 1 - t] = std::min(w[tile - 1 - t], r);
  }
  return w;
}

}  // namespace

RealField unet_forward(const ModelWeights& w, const RealField& img) {
  return unet_forward_scaled(w, scale_to_unit(img, min_value(img), max_value(img)));
}

RealField normalize_auto(const RealField& img, const ModelWeights* weights, const TileOptions& tiles) {
  if (!weights) return classical_normalize(img);
  const std::size_t tile = weights->arch.input_size;
  if (img.width() == tile && img.height() == tile) return unet_forward(*weights, img);
  if (tiles.overlap >= tile) throw Error(ErrorCode::BadArguments, "tile overlap must be < tile size");

  // mirror-pad small images up to one tile
  const std::size_t pw = std::max(img.width(), tile), ph = std::max(img.height(), tile);
  RealField padded(pw, ph);
  for (std::size_t y = 0; y < ph; ++y) {
    for (std::size_t x = 0; x < pw; ++x) {
      padded(x, y) = img(reflect(static_cast<std::ptrdiff_t>(x), img.width()),
                         reflect(static_cast<std::ptrdiff_t>(y), img.height()));
    }
  }
  const RealField scaled = scale_to_unit(padded, min_value(img), max_value(img));
  const auto xs = tile_starts(pw, tile, tiles.overlap);
  const auto ys = tile_starts(ph, tile, tiles.overlap);

  RealField acc(pw, ph), weight(pw, ph);
  for (std::size_t iy = 0; iy < ys.size(); ++iy) {
    const auto wy = blend_profile(tile, tiles.overlap, iy > 0, iy + 1 < ys.size());
    for (std::size_t ix = 0; ix < xs.size(); ++ix) {
      const auto wx = blend_profile(tile, tiles.overlap, ix > 0, ix + 1 < xs.size());
      const RealField out = unet_forward_scaled(*weights, crop(scaled, xs[ix], ys[iy], tile, tile));
      for (std::size_t y = 0; y < tile; ++y) {
        for (std::size_t x = 0; x < tile; ++x) {
          const double wt = wx[x] * wy[y];
          acc(xs[ix] + x, ys[iy] + y) += wt * out(x, y);
          weight(xs[ix] + x, ys[iy] + y) += wt;
        }
      }
    }
  }
  RealField result(img.width(), img.height());
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) result(x, y) = acc(x, y) / weight(x, y);
  }
  return result;
}

}  // namespace fringebos::normalize
