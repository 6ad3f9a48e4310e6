#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fringebos/field.hpp"

namespace fringebos::normalize {

/// Background removal + modulation equalization without a model:
///  1. zero a disk of radius 0.01 cycles/px around DC in the 2D spectrum;
///  2. estimate the carrier fx from the row spectra;
///  3. envelope = |analytic signal| (row ends extended) smoothed by a Gaussian of sigma 1/(2 fx);
///  4. out = clamp(bg_removed / max(envelope, 1e-3 max(envelope)), -1, 1).
/// Throws NoCarrier when no fringe carrier is resolvable.
RealField classical_normalize(const RealField& img);

// ---------------------------------------------------------------------------
// Learned normalizer (U-Net generator, inference only)

struct Arch {
  std::size_t depth = 5;
  std::size_t base_channels = 16;
  std::size_t input_size = 256;

  /// Encoder channels at level i (1-based): base * min(2^(i-1), 8).
  std::size_t channels(std::size_t level) const;
  void validate() const;
  bool operator==(const Arch&) const = default;
};

enum class LayerKind { Conv, TransposedConv, NormScale, NormBias };

std::string to_string(LayerKind kind);
LayerKind parse_layer_kind(const std::string& s);

struct LayerSpec {
  std::string name;
  LayerKind kind;
  std::vector<std::size_t> shape;

  std::size_t element_count() const;
  bool operator==(const LayerSpec&) const = default;
};

/// Exact tensor list for an architecture, in serialization order.
///   encN.conv           conv            [out, in, 4, 4]
///   encN.norm.scale     norm-scale      [out]            (N >= 2)
///   encN.norm.bias      norm-bias       [out]
///   decK.deconv         transposed-conv [in, out, 4, 4]
///   decK.norm.scale / decK.norm.bias
///   out.deconv          transposed-conv [2 * base, 1, 4, 4]
std::vector<LayerSpec> expected_layers(const Arch& arch);

std::size_t parameter_count(const Arch& arch);

struct Layer {
  LayerSpec spec;
  std::vector<float> data;
};

struct ModelWeights {
  Arch arch;
  std::vector<Layer> layers;
  std::array<std::uint8_t, 32> blob_sha256{};
};

/// SHA-256 of the concatenated little-endian float32 tensors.
std::array<std::uint8_t, 32> blob_hash(const std::vector<Layer>& layers);

/// "FNW1" | u32 header length | JSON header | float32 blob.
ModelWeights load_weights(const std::filesystem::path& path);
void save_weights(const ModelWeights& weights, const std::filesystem::path& path);

/// Deterministic random weights (N(0, scale^2) kernels, scale ~ 1 norms) for
/// tests and smoke runs.
ModelWeights random_weights(const Arch& arch, std::uint64_t seed, double kernel_scale = 0.05);

/// Forward pass. The input must be input_size x input_size; it is mapped
/// linearly from [min, max] onto [-1, 1] first. Output in [-1, 1] (tanh).
RealField unet_forward(const ModelWeights& weights, const RealField& img);

/// Forward pass on an input already scaled to [-1, 1].
RealField unet_forward_scaled(const ModelWeights& weights, const RealField& scaled);

struct TileOptions {
  std::size_t overlap = 32;
};

/// Weights given: U-Net, tiled with raised-cosine blending when the image
/// differs from input_size. Otherwise classical_normalize.
RealField normalize_auto(const RealField& img, const ModelWeights* weights,
                         const TileOptions& tiles = {});

}  // namespace fringebos::normalize
