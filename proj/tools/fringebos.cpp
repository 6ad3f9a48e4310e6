// fringebos: simulate, demodulate, sweep and fit-diffusion from the shell.
#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fringebos/diffusion.hpp"
#include "fringebos/parallel.hpp"
#include "fringebos/pipeline.hpp"
#include "fringebos/plot.hpp"
#include "fringebos/raster_io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace fringebos;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// "0,5,10", "3..12", "3..12:3" and mixtures of those.
std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    pos = comma + 1;
    if (item.empty()) continue;
    try {
      const std::size_t dots = item.find("..");
      if (dots == std::string::npos) {
        out.push_back(std::stod(item));
      } else {
        const std::size_t colon = item.find(':', dots);
        const double lo = std::stod(item.substr(0, dots));
        const double hi = std::stod(item.substr(dots + 2, colon == std::string::npos ? std::string::npos : colon - dots - 2));
        const double step = colon == std::string::npos ? 1.0 : std::stod(item.substr(colon + 1));
        if (!(step > 0.0) || hi < lo) throw UsageError("bad range '" + item + "'");
        for (double v = lo; v <= hi + 1e-9 * step; v += step) out.push_back(v);
      }
    } catch (const std::logic_error&) {
      throw UsageError("cannot parse value list '" + text + "'");
    }
  }
  if (out.empty()) throw UsageError("empty value list");
  return out;
}

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    if (comma > pos) out.push_back(text.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return out;
}

diffusion::ColumnRange parse_range(const std::string& text) {
  const std::size_t dots = text.find("..");
  if (dots == std::string::npos) throw UsageError("expected a column range a..b, got '" + text + "'");
  try {
    return {std::stoul(text.substr(0, dots)), std::stoul(text.substr(dots + 2))};
  } catch (const std::logic_error&) {
    throw UsageError("cannot parse column range '" + text + "'");
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "short write to " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoFailure, path.string() + ": " + e.what());
  }
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

struct Common {
  std::size_t threads = 0;
};

void apply_threads(const Common& c) {
  std::size_t n = c.threads;
  if (const char* env = std::getenv("FRINGEBOS_THREADS"); env && *env) {
    try {
      n = std::stoul(env);
    } catch (const std::logic_error&) {
      throw UsageError(std::string("FRINGEBOS_THREADS is not a count: ") + env);
    }
  }
  set_thread_count(n);
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string preset = "m1-clean";
  std::string mod;
  std::optional<double> snr, sigma, speckle;
  std::uint64_t seed = 0;
  std::size_t size = 256;
  double fx = 0.05;
  std::size_t phase_terms = 20;
  double phase_pv = 12.0;
  std::string out = ".";
  bool png = false;
  std::size_t dataset = 0;
  bool diffusion = false;
  double d = 1.47e-9, px = 9.1e-6, noise_sd = 0.0, first_pv = 6.0;
  std::string times;
  std::size_t width = 2048, height = 1024;
};

// "<mod>-<snr>db" or "<mod>-clean"
void apply_preset(const std::string& preset, simulate::EvalSceneParams& p) {
  const std::size_t dash = preset.find('-');
  if (dash == std::string::npos) throw UsageError("preset must look like m1-0db or m2-clean");
  try {
    p.modulation = simulate::parse_modulation(preset.substr(0, dash));
  } catch (const Error&) {
    throw UsageError("unknown modulation in preset '" + preset + "'");
  }
  const std::string rest = preset.substr(dash + 1);
  if (rest == "clean") return;
  if (rest.size() > 2 && rest.substr(rest.size() - 2) == "db") {
    try {
      p.snr_db = std::stod(rest.substr(0, rest.size() - 2));
      return;
    } catch (const std::logic_error&) {
    }
  }
  throw UsageError("cannot parse preset '" + preset + "'");
}

json run_simulate(const SimulateArgs& a) {
  const fs::path out(a.out);
  prepare_dir(out);
  json cfg = {{"subcommand", "simulate"}, {"seed", a.seed}, {"out", a.out}};

  if (a.diffusion) {
    simulate::DiffusionSequenceParams p;
    p.diffusivity = a.d;
    p.pixel_size = a.px;
    p.noise_sd = a.noise_sd;
    p.first_frame_pv = a.first_pv;
    p.width = a.width;
    p.height = a.height;
    p.seed = a.seed;
    p.times = a.times.empty() ? simulate::default_diffusion_times() : parse_values(a.times);
    const auto frames = simulate::synth_diffusion_sequence(p);
    json names = json::array();
    for (std::size_t k = 0; k < frames.size(); ++k) {
      char name[32];
      std::snprintf(name, sizeof name, "frame_%02zu.fpr", k);
      write_raster(frames[k], out / name);
      names.push_back(name);
    }
    json seq = {{"diffusivity", p.diffusivity}, {"pixel_size", p.pixel_size},
                {"times", p.times},             {"noise_sd", p.noise_sd},
                {"first_frame_pv", p.first_frame_pv}, {"amplitude", simulate::diffusion_amplitude(p)},
                {"center_column", simulate::diffusion_center_column(p.width)},
                {"width", p.width},             {"height", p.height},
                {"seed", p.seed},               {"frames", names}};
    write_json(out / "sequence.json", seq);
    cfg["mode"] = "diffusion";
    cfg["sequence"] = seq;
    return cfg;
  }

  if (a.dataset > 0) {
    simulate::DatasetParams p;
    p.width = p.height = a.size;
    simulate::gen_dataset(a.dataset, out, p, a.seed);
    cfg["mode"] = "dataset";
    cfg["count"] = a.dataset;
    cfg["size"] = a.size;
    cfg["params"] = {{"zernike_terms", p.zernike_terms}, {"fx", {p.fx_min, p.fx_max}},
                     {"speckle_px", {p.speckle_min, p.speckle_max}}, {"snr_db", {p.snr_min, p.snr_max}},
                     {"phase_pv", {p.pv_min, p.pv_max}}};
    return cfg;
  }

  simulate::EvalSceneParams p;
  p.size = a.size;
  p.fx = a.fx;
  p.phase_terms = a.phase_terms;
  p.phase_pv = a.phase_pv;
  apply_preset(a.preset, p);
  if (!a.mod.empty()) p.modulation = simulate::parse_modulation(a.mod);
  if (a.snr) p.snr_db = a.snr;
  if (a.sigma) {
    p.awgn_sigma = a.sigma;
    if (!a.snr) p.snr_db.reset();
  }
  if (a.speckle) p.speckle_px = a.speckle;
  const auto scene = simulate::make_eval_scene(p, a.seed);
  const RealField image = simulate::synth_fringe(scene);
  write_raster(image, out / "degraded.fpr");
  write_raster(scene.phase, out / "truth_phase.fpr");
  if (a.png) {
    export_png(image, out / "degraded.png", 0.0, std::max(1.0, max_value(image)));
    export_png(scene.phase, out / "truth_phase.png", min_value(scene.phase), max_value(scene.phase));
  }
  json manifest = {{"preset", a.preset},
                   {"seed", a.seed},
                   {"size", p.size},
                   {"fx", p.fx},
                   {"modulation", simulate::to_string(p.modulation)},
                   {"snr_db", optional_json(p.snr_db)},
                   {"awgn_sigma", optional_json(p.awgn_sigma)},
                   {"speckle_px", optional_json(p.speckle_px)},
                   {"phase_terms", p.phase_terms},
                   {"phase_pv", p.phase_pv},
                   {"degraded", "degraded.fpr"},
                   {"truth_phase", "truth_phase.fpr"}};
  write_json(out / "manifest.json", manifest);
  cfg["mode"] = "scene";
  cfg["scene"] = manifest;
  return cfg;
}

// ---------------------------------------------------------------------------
// demodulate / sweep shared options

struct MethodArgs {
  std::string normalizer = "classical";
  std::string weights;
  std::size_t half_window = 5;
  std::string svd = "power";
  std::size_t power_iters = 30;
  std::optional<double> ft_center, ft_halfwidth;
  double wft_sigma = 10.0, wft_step = 0.025, wft_range = 2.0;
  bool raw = false;
};

void add_method_options(CLI::App* app, MethodArgs& m) {
  app->add_option("--normalizer", m.normalizer, "classical | learned | none")
      ->check(CLI::IsMember({"classical", "learned", "none"}));
  app->add_option("--weights", m.weights, "FNW1 weights for --normalizer learned");
  app->add_option("-W,--half-window", m.half_window, "subspace half-window W (window 2W+1)");
  app->add_option("--svd", m.svd, "power | full")->check(CLI::IsMember({"power", "full"}));
  app->add_option("--power-iters", m.power_iters);
  app->add_option("--ft-center", m.ft_center, "FT band center, cycles/pixel");
  app->add_option("--ft-halfwidth", m.ft_halfwidth, "FT band halfwidth, cycles/pixel");
  app->add_option("--wft-sigma", m.wft_sigma);
  app->add_option("--wft-step", m.wft_step, "rad/pixel");
  app->add_option("--wft-range", m.wft_range, "frequency grid spans [-r, r] rad/pixel");
  app->add_flag("--raw", m.raw, "run FT/WFT on the raw image instead of the normalized one");
}

pipeline::PipelineConfig make_pipeline(const MethodArgs& m, std::optional<normalize::ModelWeights>& weights) {
  pipeline::PipelineConfig cfg;
  cfg.normalizer = pipeline::parse_normalizer(m.normalizer);
  if (cfg.normalizer == pipeline::NormalizerKind::Learned) {
    if (m.weights.empty()) throw UsageError("--normalizer learned needs --weights");
    if (!fs::exists(m.weights)) throw UsageError("weights file not found: " + m.weights);
    weights = normalize::load_weights(m.weights);
    cfg.weights = &*weights;
  }
  cfg.subspace.half_window = m.half_window;
  cfg.subspace.svd_mode = m.svd == "full" ? demodulate::SvdMode::Full : demodulate::SvdMode::PowerIteration;
  cfg.subspace.power_iters = m.power_iters;
  cfg.ft.band_center = m.ft_center;
  cfg.ft.band_halfwidth = m.ft_halfwidth;
  cfg.wft.sigma = m.wft_sigma;
  cfg.wft.step = m.wft_step;
  cfg.wft.wx_min = cfg.wft.wy_min = -m.wft_range;
  cfg.wft.wx_max = cfg.wft.wy_max = m.wft_range;
  cfg.raw_baselines = m.raw;
  cfg.subspace.validate();
  cfg.wft.validate();
  return cfg;
}

json method_json(const MethodArgs& m) {
  return {{"normalizer", m.normalizer},
          {"weights", m.weights.empty() ? json(nullptr) : json(m.weights)},
          {"half_window", m.half_window},
          {"svd", m.svd},
          {"power_iters", m.power_iters},
          {"ft_center", optional_json(m.ft_center)},
          {"ft_halfwidth", optional_json(m.ft_halfwidth)},
          {"wft_sigma", m.wft_sigma},
          {"wft_step", m.wft_step},
          {"wft_range", m.wft_range},
          {"raw_baselines", m.raw}};
}

// ---------------------------------------------------------------------------
// demodulate

struct DemodulateArgs {
  std::string input;
  std::string out = ".";
  std::string method = "subspace";
  std::optional<double> carrier;
  std::string truth;
  std::size_t margin = 7;
  bool png = false;
  MethodArgs m;
};

json run_demodulate(const DemodulateArgs& a) {
  if (!fs::exists(a.input)) throw UsageError("input raster not found: " + a.input);
  if (!a.truth.empty() && !fs::exists(a.truth)) throw UsageError("truth raster not found: " + a.truth);
  std::optional<normalize::ModelWeights> weights;
  pipeline::PipelineConfig cfg = make_pipeline(a.m, weights);
  cfg.method = pipeline::parse_method(a.method);
  cfg.carrier_fx = a.carrier;

  const RealField image = read_real_raster(a.input);
  const fs::path out(a.out);
  prepare_dir(out);
  const auto res = pipeline::run(image, cfg);
  if (!res.normalized.empty()) write_raster(res.normalized, out / "normalized.fpr");
  write_raster(res.wrapped, out / "wrapped.fpr");
  write_raster(res.unwrapped, out / "phase.fpr");
  if (a.png) {
    const double lo = min_value(res.unwrapped), hi = max_value(res.unwrapped);
    export_png(res.unwrapped, out / "phase.png", lo, hi > lo ? hi : lo + 1.0);
    export_png(res.wrapped, out / "wrapped.png", -M_PI, M_PI);
  }
  json result = {{"carrier_fx", res.carrier_fx}, {"flagged_pixels", res.flagged}};
  if (!a.truth.empty()) {
    const RealField truth = read_real_raster(a.truth);
    metrics::MetricOptions mo;
    mo.margin = a.margin;
    const auto rep = metrics::evaluate(res.unwrapped, truth, mo);
    result["rmse"] = rep.rmse;
    result["ssim"] = rep.ssim;
    result["piston_removed"] = rep.piston_removed;
    result["valid_fraction"] = rep.valid_fraction;
  }
  write_json(out / "result.json", result);
  return {{"subcommand", "demodulate"},
          {"input", a.input},
          {"out", a.out},
          {"method", a.method},
          {"carrier", optional_json(a.carrier)},
          {"truth", a.truth.empty() ? json(nullptr) : json(a.truth)},
          {"margin", a.margin},
          {"options", method_json(a.m)}};
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
  std::string axis = "snr";
  std::string values;
  std::string mod = "m1";
  std::string methods = "subspace,ft,wft";
  std::size_t trials = 5;
  std::uint64_t seed = 0;
  std::size_t size = 256;
  double fx = 0.05;
  std::optional<double> snr, sigma, speckle;
  std::size_t margin = 7;
  bool estimate_carrier = false;
  std::string out = ".";
  bool png = false;
  MethodArgs m;
};

json run_sweep(const SweepArgs& a) {
  pipeline::SweepSpec spec;
  spec.axis = pipeline::parse_axis(a.axis);
  spec.values = parse_values(a.values);
  spec.methods.clear();
  for (const auto& name : split(a.methods)) spec.methods.push_back(pipeline::parse_method(name));
  if (spec.methods.empty()) throw UsageError("no methods given");
  if (a.trials == 0) throw UsageError("--trials must be at least 1");
  spec.trials = a.trials;
  spec.seed = a.seed;
  spec.scene.size = a.size;
  spec.scene.fx = a.fx;
  spec.scene.modulation = simulate::parse_modulation(a.mod);
  if (spec.axis == pipeline::SweepAxis::SnrDb) {
    if (a.sigma) throw UsageError("--sigma conflicts with an SNR sweep");
    spec.scene.speckle_px = a.speckle;
  } else {
    if (a.speckle) throw UsageError("--speckle conflicts with a speckle sweep");
    if (a.snr && a.sigma) throw UsageError("--snr and --sigma are exclusive");
    spec.scene.snr_db = a.snr;
    spec.scene.awgn_sigma = a.sigma;
  }
  spec.metrics.margin = a.margin;
  spec.known_carrier = !a.estimate_carrier;
  std::optional<normalize::ModelWeights> weights;
  spec.pipeline = make_pipeline(a.m, weights);

  const fs::path out(a.out);
  prepare_dir(out);
  const auto rows = pipeline::sweep_eval(spec);
  write_text(out / "sweep.csv", pipeline::to_csv(rows));
  if (a.png) {
    std::vector<plot::Series> rmse, ssim;
    for (auto method : spec.methods) {
      plot::Series r, s;
      for (const auto& row : rows) {
        if (row.method != method) continue;
        r.x.push_back(row.axis_value);
        r.y.push_back(row.rmse_mean);
        s.x.push_back(row.axis_value);
        s.y.push_back(row.ssim_mean);
      }
      rmse.push_back(std::move(r));
      ssim.push_back(std::move(s));
    }
    plot::write_line_chart(rmse, out / "sweep_rmse.png");
    plot::write_line_chart(ssim, out / "sweep_ssim.png");
  }
  return {{"subcommand", "sweep"},
          {"axis", pipeline::to_string(spec.axis)},
          {"values", spec.values},
          {"modulation", a.mod},
          {"methods", split(a.methods)},
          {"trials", a.trials},
          {"seed", a.seed},
          {"size", a.size},
          {"fx", a.fx},
          {"snr_db", optional_json(a.snr)},
          {"awgn_sigma", optional_json(a.sigma)},
          {"speckle_px", optional_json(a.speckle)},
          {"phase_terms", spec.scene.phase_terms},
          {"phase_pv", spec.scene.phase_pv},
          {"margin", a.margin},
          {"known_carrier", spec.known_carrier},
          {"out", a.out},
          {"options", method_json(a.m)}};
}

// ---------------------------------------------------------------------------
// fit-diffusion

struct FitArgs {
  std::string frames_dir;
  std::vector<std::string> frame_files;
  std::string times;
  std::optional<double> px;
  std::string pair = "0,5";
  std::string rows = "150,350,502,650,800";
  std::string window;
  std::size_t window_half = 400;
  std::string band;
  std::string out = ".";
};

json run_fit(const FitArgs& a) {
  std::vector<fs::path> paths;
  std::vector<double> times;
  std::optional<double> px = a.px;
  if (!a.frames_dir.empty()) {
    const fs::path dir(a.frames_dir);
    if (!fs::exists(dir / "sequence.json")) throw UsageError("no sequence.json in " + a.frames_dir);
    const json seq = read_json(dir / "sequence.json");
    for (const auto& name : seq.at("frames")) paths.push_back(dir / name.get<std::string>());
    times = seq.at("times").get<std::vector<double>>();
    if (!px) px = seq.at("pixel_size").get<double>();
  } else {
    for (const auto& f : a.frame_files) paths.emplace_back(f);
    if (!a.times.empty()) times = parse_values(a.times);
  }
  if (paths.size() < 2) throw UsageError("need at least two frames (--frames DIR or --frame ...)");
  if (times.size() != paths.size()) throw UsageError("one time per frame required");
  if (!px) throw UsageError("--px is required without a sequence.json");
  for (const auto& p : paths) {
    if (!fs::exists(p)) throw UsageError("missing frame " + p.string());
  }
  const auto pair = parse_values(a.pair);
  if (pair.size() != 2) throw UsageError("--pair takes two frame indices");

  diffusion::DiffusionOptions opts;
  opts.first = static_cast<std::size_t>(pair[0]);
  opts.second = static_cast<std::size_t>(pair[1]);
  opts.rows.clear();
  for (double r : parse_values(a.rows)) opts.rows.push_back(static_cast<std::size_t>(r));
  if (!a.window.empty()) opts.window = parse_range(a.window);
  opts.window_half = a.window_half;
  if (!a.band.empty()) opts.band = parse_range(a.band);

  std::vector<RealField> frames;
  for (const auto& p : paths) frames.push_back(read_real_raster(p));
  const auto agg = diffusion::fit_diffusion(frames, times, *px, opts);

  const fs::path out(a.out);
  prepare_dir(out);
  std::string csv = "row,D,A,x0,r2\n";
  char buf[256];
  for (const auto& f : agg.fits) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g,%.10g\n", f.row, f.d, f.amplitude, f.x0, f.r2);
    csv += buf;
  }
  write_text(out / "fits.csv", csv);
  json summary = {{"mean_D", agg.mean_d}, {"sd_D", agg.sd_d}, {"rows", agg.fits.size()},
                  {"t1", times[std::min(opts.first, opts.second)]},
                  {"t2", times[std::max(opts.first, opts.second)]}};
  write_json(out / "summary.json", summary);
  json frame_names = json::array();
  for (const auto& p : paths) frame_names.push_back(p.string());
  return {{"subcommand", "fit-diffusion"},
          {"frames", frame_names},
          {"times", times},
          {"px", *px},
          {"pair", {opts.first, opts.second}},
          {"rows", opts.rows},
          {"window", a.window.empty() ? json(nullptr) : json(a.window)},
          {"window_half", a.window_half},
          {"band", a.band.empty() ? json(nullptr) : json(a.band)},
          {"out", a.out}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fringe-pattern phase demodulation toolkit"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--threads", common.threads, "worker threads (0 = all cores); FRINGEBOS_THREADS overrides");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "synthesize scenes, training pairs or diffusion sequences");
  sim_cmd->add_option("--preset", sim.preset, "<uniform|m1|m2>-<snr>db or <mod>-clean");
  sim_cmd->add_option("--mod", sim.mod, "override the preset modulation");
  sim_cmd->add_option("--snr", sim.snr, "AWGN SNR in dB (AC-power referenced)");
  sim_cmd->add_option("--sigma", sim.sigma, "fixed AWGN standard deviation");
  sim_cmd->add_option("--speckle", sim.speckle, "speckle size, pixels");
  sim_cmd->add_option("--seed", sim.seed);
  sim_cmd->add_option("--size", sim.size);
  sim_cmd->add_option("--fx", sim.fx, "carrier, cycles/pixel");
  sim_cmd->add_option("--phase-terms", sim.phase_terms);
  sim_cmd->add_option("--phase-pv", sim.phase_pv, "phase peak-to-valley, rad");
  sim_cmd->add_option("--out", sim.out, "output directory");
  sim_cmd->add_flag("--png", sim.png);
  sim_cmd->add_option("--dataset", sim.dataset, "write N training pairs instead of one scene");
  sim_cmd->add_flag("--diffusion", sim.diffusion, "write a synthetic diffusion sequence");
  sim_cmd->add_option("--D", sim.d, "diffusivity, m^2/s");
  sim_cmd->add_option("--px", sim.px, "pixel size, m");
  sim_cmd->add_option("--times", sim.times, "frame times in s (list or a..b:step)");
  sim_cmd->add_option("--noise-sd", sim.noise_sd, "phase noise, rad");
  sim_cmd->add_option("--first-pv", sim.first_pv, "peak-to-valley of the first frame, rad");
  sim_cmd->add_option("--width", sim.width, "diffusion frame width");
  sim_cmd->add_option("--height", sim.height, "diffusion frame height");

  DemodulateArgs dem;
  auto* dem_cmd = app.add_subcommand("demodulate", "normalize, demodulate, remove the carrier and unwrap");
  dem_cmd->add_option("input", dem.input, "FPR1 fringe image")->required();
  dem_cmd->add_option("--out", dem.out, "output directory");
  dem_cmd->add_option("--method", dem.method)->check(CLI::IsMember({"subspace", "ft", "wft"}));
  dem_cmd->add_option("--carrier", dem.carrier, "known carrier, cycles/pixel (estimated otherwise)");
  dem_cmd->add_option("--truth", dem.truth, "ground-truth phase raster for RMSE/SSIM");
  dem_cmd->add_option("--margin", dem.margin, "metric border exclusion, pixels");
  dem_cmd->add_flag("--png", dem.png);
  add_method_options(dem_cmd, dem.m);

  SweepArgs sw;
  auto* sw_cmd = app.add_subcommand("sweep", "RMSE/SSIM versus SNR or speckle size");
  sw_cmd->add_option("--axis", sw.axis)->check(CLI::IsMember({"snr", "speckle"}));
  sw_cmd->add_option("--values", sw.values, "e.g. 0,5,10 or 3..12")->required();
  sw_cmd->add_option("--mod", sw.mod)->check(CLI::IsMember({"uniform", "m1", "m2"}));
  sw_cmd->add_option("--methods", sw.methods, "comma list of subspace, ft, wft");
  sw_cmd->add_option("--trials", sw.trials);
  sw_cmd->add_option("--seed", sw.seed);
  sw_cmd->add_option("--size", sw.size);
  sw_cmd->add_option("--fx", sw.fx);
  sw_cmd->add_option("--snr", sw.snr, "fixed SNR for speckle sweeps");
  sw_cmd->add_option("--sigma", sw.sigma, "fixed AWGN sigma for speckle sweeps");
  sw_cmd->add_option("--speckle", sw.speckle, "fixed speckle size for SNR sweeps");
  sw_cmd->add_option("--margin", sw.margin);
  sw_cmd->add_flag("--estimate-carrier", sw.estimate_carrier, "estimate the carrier instead of using the scene's");
  sw_cmd->add_option("--out", sw.out, "output directory");
  sw_cmd->add_flag("--png", sw.png, "also render line charts");
  add_method_options(sw_cmd, sw.m);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit-diffusion", "fit D from a pair of unwrapped phase frames");
  fit_cmd->add_option("--frames", fit.frames_dir, "directory with sequence.json");
  fit_cmd->add_option("--frame", fit.frame_files, "explicit frame rasters (repeatable)");
  fit_cmd->add_option("--times", fit.times, "frame times in s, with --frame");
  fit_cmd->add_option("--px", fit.px, "pixel size, m");
  fit_cmd->add_option("--pair", fit.pair, "two 0-based frame indices");
  fit_cmd->add_option("--rows", fit.rows);
  fit_cmd->add_option("--window", fit.window, "fit columns a..b");
  fit_cmd->add_option("--window-half", fit.window_half, "half-width around the extremum without --window");
  fit_cmd->add_option("--band", fit.band, "piston band columns a..b (default leftmost 10%)");
  fit_cmd->add_option("--out", fit.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    apply_threads(common);
    json cfg;
    fs::path out;
    if (*sim_cmd) {
      cfg = run_simulate(sim);
      out = sim.out;
    } else if (*dem_cmd) {
      cfg = run_demodulate(dem);
      out = dem.out;
    } else if (*sw_cmd) {
      cfg = run_sweep(sw);
      out = sw.out;
    } else {
      cfg = run_fit(fit);
      out = fit.out;
    }
    cfg["threads"] = thread_count();
    write_json(out / "run_config.json", cfg);
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << to_string(e.code()) << ": " << e.what() << "\n";
    if (e.code() == ErrorCode::BadArguments) return kExitUsage;
    return classify(e.code()) == ErrorClass::Numerical ? kExitNumerical : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
