#include "fringebos/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "fringebos/fft.hpp"
#include "fringebos/parallel.hpp"
#include "fringebos/raster_io.hpp"
#include "json.hpp"

namespace fringebos::simulate {

using std::numbers::pi;

std::pair<int, int> osa_to_nm(std::size_t j) {
  const int n = static_cast<int>(std::ceil((-3.0 + std::sqrt(9.0 + 8.0 * static_cast<double>(j))) / 2.0));
  const int m = 2 * static_cast<int>(j) - n * (n + 2);
  return {n, m};
}

double zernike_radial(int n, int m, double rho) {
  m = std::abs(m);
  if (n < m || (n - m) % 2 != 0) return 0.0;
  // R_n^m + R_{n-2}^m = rho (R_{n-1}^{|m-1|} + R_{n-1}^{m+1}), seeded with R_0^0 = 1.
  // table[k][l] holds R_k^l for the current rho.
  std::vector<std::vector<double>> table(n + 1, std::vector<double>(n + 2, 0.0));
  table[0][0] = 1.0;
  for (int k = 1; k <= n; ++k) {
    for (int l = 0; l <= k; ++l) {
      if ((k - l) % 2 != 0) continue;
      const double lower = k >= 2 ? table[k - 2][l] : 0.0;
      table[k][l] = rho * (table[k - 1][std::abs(l - 1)] + table[k - 1][l + 1]) - lower;
    }
  }
  return table[n][m];
}

double zernike(std::size_t j, double rho, double theta) {
  const auto [n, m] = osa_to_nm(j);
  const double radial = zernike_radial(n, m, rho);
  if (m == 0) return std::sqrt(static_cast<double>(n + 1)) * radial;
  const double norm = std::sqrt(2.0 * (n + 1));
  return m > 0 ? norm * radial * std::cos(m * theta) : norm * radial * std::sin(-m * theta);
}

RealField zernike_eval(const ZernikeSpec& spec, std::size_t width, std::size_t height) {
  if (spec.coefficients.empty()) throw Error(ErrorCode::EmptySpec, "no Zernike coefficients");
  RealField out(width, height);
  const double cx = (static_cast<double>(width) - 1.0) / 2.0;
  const double cy = (static_cast<double>(height) - 1.0) / 2.0;
  const double radius = static_cast<double>(std::min(width, height)) / 2.0;
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double nx = (static_cast<double>(x) - cx) / radius;
      const double ny = (static_cast<double>(y) - cy) / radius;
      const double rho = std::hypot(nx, ny);
      const double theta = std::atan2(ny, nx);
      double v = 0.0;
      for (std::size_t j = 0; j < spec.coefficients.size(); ++j) {
        if (spec.coefficients[j] != 0.0) v += spec.coefficients[j] * zernike(j, rho, theta);
      }
      out(x, y) = v;
    }
  }
  return out;
}

namespace {

RealField rescale(const RealField& f, double lo, double hi) {
  const double fmin = min_value(f);
  const double fmax = max_value(f);
  RealField out(f.width(), f.height());
  const double span = fmax - fmin;
  for (std::size_t i = 0; i < f.size(); ++i) {
    out.data()[i] = span > 0.0 ? lo + (hi - lo) * (f.data()[i] - fmin) / span : (lo + hi) / 2.0;
  }
  return out;
}

RealField random_zernike_unit(Rng& rng, std::size_t width, std::size_t height, std::size_t terms) {
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  ZernikeSpec spec;
  spec.coefficients.resize(terms);
  // piston contributes nothing after rescaling
  spec.coefficients[0] = 0.0;
  for (std::size_t j = 1; j < terms; ++j) spec.coefficients[j] = coef(rng);
  return rescale(zernike_eval(spec, width, height), 0.0, 1.0);
}

double variance(const RealField& f) {
  const double m = mean(f);
  double s = 0.0;
  for (double v : f.data()) s += (v - m) * (v - m);
  return s / static_cast<double>(f.size());
}

}  // namespace

RealField random_zernike_phase(Rng& rng, std::size_t width, std::size_t height,
                               std::size_t terms, double peak_to_valley) {
  if (terms < 2) throw Error(ErrorCode::EmptySpec, "phase needs at least two Zernike terms");
  return rescale(random_zernike_unit(rng, width, height, terms), -peak_to_valley / 2.0,
                 peak_to_valley / 2.0);
}

void validate(const SimScene& s) {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::InvariantViolation, why); };
  if (s.width == 0 || s.height == 0) fail("empty scene");
  for (const RealField* f : {&s.phase, &s.background, &s.modulation}) {
    if (f->width() != s.width || f->height() != s.height) fail("scene field shape mismatch");
    if (!all_finite(*f)) fail("non-finite scene field");
  }
  if (!(s.fx > 0.0 && s.fx < 0.5)) fail("carrier fx must lie in (0, 0.5)");
  constexpr double tol = 1e-12;
  for (std::size_t i = 0; i < s.background.size(); ++i) {
    const double i0 = s.background.data()[i];
    const double i1 = s.modulation.data()[i];
    if (i0 < -tol || i0 > 1.0 + tol || i1 < -tol || i1 > 1.0 + tol || i0 + i1 > 1.0 + tol) {
      fail("background/modulation outside [0, 1] or i0 + i1 > 1");
    }
  }
  if (s.snr_db && s.awgn_sigma) fail("snr_db and awgn_sigma are exclusive");
}

RealField modulated_term(const SimScene& s) {
  RealField out(s.width, s.height);
  for (std::size_t y = 0; y < s.height; ++y) {
    for (std::size_t x = 0; x < s.width; ++x) {
      out(x, y) = s.modulation(x, y) *
                  std::cos(2.0 * pi * s.fx * static_cast<double>(x) + s.phase(x, y));
    }
  }
  return out;
}

RealField clean_fringe(const SimScene& s) {
  RealField out = modulated_term(s);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += s.background.data()[i];
  return out;
}

RealField synth_fringe(const SimScene& s) {
  validate(s);
  RealField ac = modulated_term(s);
  RealField out = clean_fringe(s);
  if (s.speckle_px) {
    Rng rng = make_rng(s.seed, 1);
    out = apply_speckle(out, gen_speckle(s.width, s.height, *s.speckle_px, rng), s.background);
  }
  if (s.snr_db && std::isfinite(*s.snr_db)) {
    Rng rng = make_rng(s.seed, 2);
    out = add_awgn(out, *s.snr_db, rng, variance(ac));
  } else if (s.awgn_sigma) {
    Rng rng = make_rng(s.seed, 2);
    out = add_awgn_sigma(out, *s.awgn_sigma, rng);
  }
  if (s.clip) {
    for (auto& v : out.data()) v = std::clamp(v, 0.0, 1.5);
  }
  return out;
}

RealField add_awgn(const RealField& field, double snr_db, Rng& rng,
                   std::optional<double> ac_power) {
  if (std::isinf(snr_db) && snr_db > 0) return field;
  const double power = ac_power ? *ac_power : variance(field);
  if (!(power > 0.0)) throw Error(ErrorCode::ConstantField, "AC power is zero");
  return add_awgn_sigma(field, std::sqrt(power / std::pow(10.0, snr_db / 10.0)), rng);
}

RealField add_awgn_sigma(const RealField& field, double sigma, Rng& rng) {
  if (sigma < 0.0 || !std::isfinite(sigma)) {
    throw Error(ErrorCode::BadArguments, "noise sigma must be finite and >= 0");
  }
  std::normal_distribution<double> noise(0.0, sigma);
  RealField out = field;
  for (auto& v : out.data()) v += noise(rng);
  return out;
}

RealField gen_speckle(std::size_t width, std::size_t height, double speckle_px, Rng& rng) {
  const double limit = static_cast<double>(std::min(width, height)) / 4.0;
  if (!(speckle_px >= 2.0 && speckle_px <= limit)) {
    throw Error(ErrorCode::BadSpeckleSize,
                "speckle size must lie in [2, " + std::to_string(limit) + "]");
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  ComplexField field(width, height);
  for (auto& v : field.data()) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    v = Complex(re, im);
  }
  auto spectrum = fft::transform2d(field, fft::Direction::Forward);
  const double cutoff = 1.0 / (2.0 * speckle_px);
  for (std::size_t ky = 0; ky < height; ++ky) {
    const double fy = fft::bin_frequency(ky, height);
    for (std::size_t kx = 0; kx < width; ++kx) {
      const double fx = fft::bin_frequency(kx, width);
      if (std::hypot(fx, fy) > cutoff) spectrum(kx, ky) = 0.0;
    }
  }
  const auto filtered = fft::inverse2d(spectrum);
  RealField out(width, height);
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data()[i] = std::norm(filtered.data()[i]);
    total += out.data()[i];
  }
  const double m = total / static_cast<double>(out.size());
  for (auto& v : out.data()) v /= m;
  return out;
}

RealField apply_speckle(const RealField& clean, const RealField& speckle,
                        const RealField& background) {
  require_same_shape(clean, speckle, "apply_speckle");
  require_same_shape(clean, background, "apply_speckle");
  RealField out(clean.width(), clean.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double dc = background.data()[i];
    out.data()[i] = dc + (clean.data()[i] - dc) * speckle.data()[i];
  }
  return out;
}

ModulationKind parse_modulation(const std::string& name) {
  if (name == "m1" || name == "M1") return ModulationKind::M1;
  if (name == "m2" || name == "M2") return ModulationKind::M2;
  if (name == "uniform") return ModulationKind::Uniform;
  throw Error(ErrorCode::BadArguments, "unknown modulation '" + name + "'");
}

std::string to_string(ModulationKind kind) {
  switch (kind) {
    case ModulationKind::M1: return "m1";
    case ModulationKind::M2: return "m2";
    case ModulationKind::Uniform: return "uniform";
  }
  return "?";
}

RealField modulation_map(ModulationKind kind, std::size_t width, std::size_t height, Rng& rng) {
  constexpr double lo = 0.1, hi = 0.8;
  switch (kind) {
    case ModulationKind::Uniform:
      return RealField(width, height, 0.45);
    case ModulationKind::M2: {
      RealField out(width, height);
      const double px = static_cast<double>(width) / 3.0;
      const double py = static_cast<double>(height) / 3.0;
      for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
          out(x, y) = 0.45 + 0.35 * std::sin(2.0 * pi * static_cast<double>(x) / px) *
                                 std::sin(2.0 * pi * static_cast<double>(y) / py);
        }
      }
      return rescale(out, lo, hi);
    }
    case ModulationKind::M1: {
      // white noise, Gaussian low-pass (sigma ~ size / 16 pixels), then quartile quantization
      std::normal_distribution<double> gauss(0.0, 1.0);
      ComplexField noise(width, height);
      for (auto& v : noise.data()) v = gauss(rng);
      auto spectrum = fft::transform2d(noise, fft::Direction::Forward);
      const double sigma_px = static_cast<double>(std::min(width, height)) / 16.0;
      for (std::size_t ky = 0; ky < height; ++ky) {
        const double fy = fft::bin_frequency(ky, height);
        for (std::size_t kx = 0; kx < width; ++kx) {
          const double fx = fft::bin_frequency(kx, width);
          const double r2 = fx * fx + fy * fy;
          spectrum(kx, ky) *= std::exp(-2.0 * pi * pi * sigma_px * sigma_px * r2);
        }
      }
      const RealField smooth = real_part(fft::inverse2d(spectrum));
      std::vector<double> sorted(smooth.data().begin(), smooth.data().end());
      std::sort(sorted.begin(), sorted.end());
      const std::size_t n = sorted.size();
      const double q1 = sorted[n / 4], q2 = sorted[n / 2], q3 = sorted[(3 * n) / 4];
      RealField out(width, height);
      for (std::size_t i = 0; i < n; ++i) {
        const double v = smooth.data()[i];
        const int level = v < q1 ? 0 : v < q2 ? 1 : v < q3 ? 2 : 3;
        out.data()[i] = lo + (hi - lo) * level / 3.0;
      }
      return out;
    }
  }
  return RealField(width, height, 0.45);
}

SimScene make_eval_scene(const EvalSceneParams& p, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0);
  SimScene s;
  s.width = s.height = p.size;
  s.fx = p.fx;
  s.seed = seed;
  s.snr_db = p.snr_db;
  s.awgn_sigma = p.awgn_sigma;
  s.speckle_px = p.speckle_px;
  s.phase = random_zernike_phase(rng, p.size, p.size, p.phase_terms, p.phase_pv);
  s.modulation = modulation_map(p.modulation, p.size, p.size, rng);
  // smooth background in [0.5, 1] x (1 - max i1)
  const double headroom = 1.0 - max_value(s.modulation);
  s.background = random_zernike_unit(rng, p.size, p.size, 6);
  for (auto& v : s.background.data()) v = (0.5 + 0.5 * v) * headroom;
  return s;
}

TrainingPair gen_pair(const DatasetParams& p, std::size_t index, std::uint64_t master_seed) {
  const std::uint64_t seed = derive_seed(master_seed, index);
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  SimScene s;
  s.width = p.width;
  s.height = p.height;
  s.seed = seed;
  s.fx = draw(p.fx_min, p.fx_max);
  s.speckle_px = draw(p.speckle_min, p.speckle_max);
  s.snr_db = draw(p.snr_min, p.snr_max);
  const double pv = draw(p.pv_min, p.pv_max);
  s.phase = random_zernike_phase(rng, p.width, p.height, p.zernike_terms, pv);
  const RealField z1 = random_zernike_unit(rng, p.width, p.height, p.zernike_terms);
  const RealField z0 = random_zernike_unit(rng, p.width, p.height, p.zernike_terms);
  s.modulation = RealField(p.width, p.height);
  s.background = RealField(p.width, p.height);
  for (std::size_t i = 0; i < s.modulation.size(); ++i) {
    const double i1 = 0.1 + 0.7 * z1.data()[i];
    s.modulation.data()[i] = i1;
    s.background.data()[i] = (1.0 - i1) * z0.data()[i];
  }

  TrainingPair pair;
  pair.input = synth_fringe(s);
  pair.target = RealField(p.width, p.height);
  for (std::size_t y = 0; y < p.height; ++y) {
    for (std::size_t x = 0; x < p.width; ++x) {
      pair.target(x, y) = std::cos(2.0 * pi * s.fx * static_cast<double>(x) + s.phase(x, y));
    }
  }
  char name[32];
  std::snprintf(name, sizeof name, "%06zu", index);
  pair.record = {index, seed, s.fx, *s.snr_db, *s.speckle_px,
                 std::string("input_") + name + ".fpr", std::string("target_") + name + ".fpr"};
  return pair;
}

std::string to_json_line(const ManifestRecord& r) {
  nlohmann::ordered_json j;
  j["index"] = r.index;
  j["seed"] = r.seed;
  j["fx"] = r.fx;
  j["snr_db"] = r.snr_db;
  j["speckle_px"] = r.speckle_px;
  j["input_path"] = r.input_path;
  j["target_path"] = r.target_path;
  return j.dump();
}

std::vector<ManifestRecord> gen_dataset(std::size_t n, const std::filesystem::path& out_dir,
                                        const DatasetParams& params, std::uint64_t master_seed) {
  if (n == 0) throw Error(ErrorCode::BadArguments, "dataset size must be >= 1");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + out_dir.string());
  std::vector<ManifestRecord> records(n);
  parallel_for(0, n, [&](std::size_t i) {
    const auto pair = gen_pair(params, i, master_seed);
    write_raster(pair.input, out_dir / pair.record.input_path);
    write_raster(pair.target, out_dir / pair.record.target_path);
    records[i] = pair.record;
  });
  std::ofstream manifest(out_dir / "manifest.jsonl", std::ios::trunc);
  if (!manifest) throw Error(ErrorCode::IoFailure, "cannot write manifest");
  for (const auto& r : records) manifest << to_json_line(r) << '\n';
  if (!manifest) throw Error(ErrorCode::IoFailure, "short write to manifest");
  return records;
}

std::vector<double> default_diffusion_times() {
  return {120, 240, 360, 480, 600, 900, 1200, 1500, 1800};
}

std::size_t diffusion_center_column(std::size_t width) { return width / 2; }

namespace {

double diffusion_profile(double dx, double d, double t) {
  return std::exp(-dx * dx / (4.0 * d * t)) / (2.0 * std::sqrt(d * t));
}

void check_diffusion_params(const DiffusionSequenceParams& p) {
  if (!(p.diffusivity > 0.0) || !(p.pixel_size > 0.0)) {
    throw Error(ErrorCode::BadArguments, "diffusivity and pixel size must be positive");
  }
  if (p.times.empty() || !(p.times.front() > 0.0) ||
      std::adjacent_find(p.times.begin(), p.times.end(), std::greater_equal<>()) != p.times.end()) {
    throw Error(ErrorCode::BadTimes, "times must be positive and strictly ascending");
  }
  if (p.width < 2 || p.height < 1) throw Error(ErrorCode::BadArguments, "frame too small");
}

}  // namespace

double diffusion_amplitude(const DiffusionSequenceParams& p) {
  check_diffusion_params(p);
  const double center = static_cast<double>(diffusion_center_column(p.width));
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t x = 0; x < p.width; ++x) {
    const double v = diffusion_profile((static_cast<double>(x) - center) * p.pixel_size,
                                       p.diffusivity, p.times.front());
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return p.first_frame_pv / (hi - lo);
}

std::vector<RealField> synth_diffusion_sequence(const DiffusionSequenceParams& p) {
  const double amplitude = diffusion_amplitude(p);
  const double center = static_cast<double>(diffusion_center_column(p.width));
  std::vector<RealField> frames;
  frames.reserve(p.times.size());
  for (std::size_t k = 0; k < p.times.size(); ++k) {
    std::vector<double> profile(p.width);
    for (std::size_t x = 0; x < p.width; ++x) {
      profile[x] = amplitude * diffusion_profile((static_cast<double>(x) - center) * p.pixel_size,
                                                 p.diffusivity, p.times[k]);
    }
    RealField frame(p.width, p.height);
    for (std::size_t y = 0; y < p.height; ++y) {
      std::copy(profile.begin(), profile.end(), frame.row(y).begin());
    }
    if (p.noise_sd > 0.0) {
      Rng rng = make_rng(p.seed, k);
      frame = add_awgn_sigma(frame, p.noise_sd, rng);
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

}  // namespace fringebos::simulate
