#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fringebos/field.hpp"
#include "fringebos/rng.hpp"

namespace fringebos::simulate {

/// Zernike coefficients in OSA/ANSI single-index order j = 0, 1, 2, ...
/// Polynomials are ANSI-normalized (unit mean square over the unit disk).
/// The unit disk is inscribed in the image rectangle; outside it the
/// polynomials are evaluated at the unclipped normalized coordinates.
struct ZernikeSpec {
  std::vector<double> coefficients;
};

inline constexpr std::size_t kMaxZernikeTerms = 20;

/// OSA/ANSI index j -> (n, m).
std::pair<int, int> osa_to_nm(std::size_t j);

/// Radial polynomial R_n^|m|(rho).
double zernike_radial(int n, int m, double rho);

/// Z_j(rho, theta), ANSI normalization.
double zernike(std::size_t j, double rho, double theta);

RealField zernike_eval(const ZernikeSpec& spec, std::size_t width, std::size_t height);

/// Random coefficients U[-1, 1] for j < terms, summed map rescaled to the
/// given peak-to-valley (zero mid-range).
RealField random_zernike_phase(Rng& rng, std::size_t width, std::size_t height,
                               std::size_t terms, double peak_to_valley);

/// Scene description for the carrier fringe model
///   i(x, y) = i0 + i1 * cos(2 pi fx x + phi).
struct SimScene {
  std::size_t width = 0;
  std::size_t height = 0;
  RealField phase;       // radians, carrier excluded
  RealField background;  // i0
  RealField modulation;  // i1
  double fx = 0.05;      // cycles / pixel along x
  std::optional<double> snr_db;      // AWGN referenced to the AC fringe power
  std::optional<double> awgn_sigma;  // fixed-sigma AWGN (alternative to snr_db)
  std::optional<double> speckle_px;  // speckle grain size
  bool clip = false;                 // clip to [0, 1.5] at the very end
  std::uint64_t seed = 0;
};

/// Throws InvariantViolation if shapes, ranges or the carrier are invalid.
void validate(const SimScene& scene);

/// i0 + i1 cos(2 pi fx x + phi) without any degradation.
RealField clean_fringe(const SimScene& scene);

/// i1 cos(2 pi fx x + phi): the AC part of the clean fringe.
RealField modulated_term(const SimScene& scene);

RealField synth_fringe(const SimScene& scene);

/// Adds N(0, sigma^2) with sigma^2 = P_ac / 10^(snr_db / 10). P_ac defaults
/// to the variance of `field`; pass the AC power of the clean fringe when the
/// field carries a background.
RealField add_awgn(const RealField& field, double snr_db, Rng& rng,
                   std::optional<double> ac_power = std::nullopt);

RealField add_awgn_sigma(const RealField& field, double sigma, Rng& rng);

/// Fully developed speckle intensity with mean 1: circular complex Gaussian
/// field low-passed by a circular pupil of radius 1 / (2 speckle_px)
/// cycles/pixel, squared magnitude.
RealField gen_speckle(std::size_t width, std::size_t height, double speckle_px, Rng& rng);

/// Multiplies the modulated term by the speckle intensity:
/// out = i0 + (clean - i0) * s.
RealField apply_speckle(const RealField& clean, const RealField& speckle,
                        const RealField& background);

enum class ModulationKind { Uniform, M1, M2 };

ModulationKind parse_modulation(const std::string& name);
std::string to_string(ModulationKind kind);

/// Uniform: 0.45 everywhere. M1: smooth random field quantized to 4 levels in
/// [0.1, 0.8] (piecewise-constant patches). M2: product of sines with periods
/// of about a third of the image, rescaled into [0.1, 0.8].
RealField modulation_map(ModulationKind kind, std::size_t width, std::size_t height, Rng& rng);

/// Test-scene recipe used by the comparison study and the CLI presets.
struct EvalSceneParams {
  std::size_t size = 256;
  double fx = 0.05;
  ModulationKind modulation = ModulationKind::M1;
  std::optional<double> snr_db;
  std::optional<double> awgn_sigma;
  std::optional<double> speckle_px;
  std::size_t phase_terms = 20;
  double phase_pv = 12.0;
};

/// Scene with a random smooth Zernike phase, a smooth background bounded so
/// that i0 + i1 <= 1, and the requested modulation map and degradations.
SimScene make_eval_scene(const EvalSceneParams& params, std::uint64_t seed);

struct DatasetParams {
  std::size_t width = 256;
  std::size_t height = 256;
  std::size_t zernike_terms = kMaxZernikeTerms;
  double fx_min = 0.04, fx_max = 0.06;
  double speckle_min = 4.0, speckle_max = 8.0;
  double snr_min = 10.0, snr_max = 40.0;
  double pv_min = 10.0, pv_max = 30.0;
};

struct ManifestRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  double fx = 0.0;
  double snr_db = 0.0;
  double speckle_px = 0.0;
  std::string input_path;
  std::string target_path;
};

/// One training pair: degraded input and normalized target cos(2 pi fx x + phi).
struct TrainingPair {
  RealField input;
  RealField target;
  ManifestRecord record;
};

TrainingPair gen_pair(const DatasetParams& params, std::size_t index, std::uint64_t master_seed);

/// Writes n pairs as FPR1 rasters plus manifest.jsonl into out_dir.
std::vector<ManifestRecord> gen_dataset(std::size_t n, const std::filesystem::path& out_dir,
                                        const DatasetParams& params, std::uint64_t master_seed);

std::string to_json_line(const ManifestRecord& record);

struct DiffusionSequenceParams {
  double diffusivity = 1.47e-9;           // m^2 / s
  std::vector<double> times;              // s, ascending
  double pixel_size = 9.1e-6;             // m / pixel
  std::size_t width = 2048;  // wide enough for a signal-free far field at 1800 s
  std::size_t height = 1024;
  double noise_sd = 0.0;                  // rad
  double first_frame_pv = 6.0;            // rad
  std::uint64_t seed = 0;
};

/// Default acquisition times: five frames two minutes apart, then four five
/// minutes apart (120 s ... 1800 s).
std::vector<double> default_diffusion_times();

/// Amplitude A that gives the first (noiseless) frame the requested
/// peak-to-valley.
double diffusion_amplitude(const DiffusionSequenceParams& params);

/// Center column of the synthetic separation plane.
std::size_t diffusion_center_column(std::size_t width);

/// phi(x, t) = A exp(-(x - x0)^2 / (4 D t)) / (2 sqrt(D t)) + N(0, noise_sd^2).
std::vector<RealField> synth_diffusion_sequence(const DiffusionSequenceParams& params);

}  // namespace fringebos::simulate
