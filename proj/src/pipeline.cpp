#include "fringebos/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fringebos/parallel.hpp"
#include "fringebos/rng.hpp"
#include "fringebos/unwrap.hpp"

namespace fringebos::pipeline {

Method parse_method(const std::string& s) {
  if (s == "subspace") return Method::Subspace;
  if (s == "ft") return Method::Ft;
  if (s == "wft") return Method::Wft;
  throw Error(ErrorCode::BadArguments, "unknown method '" + s + "'");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::Subspace: return "subspace";
    case Method::Ft: return "ft";
    case Method::Wft: return "wft";
  }
  return "?";
}

NormalizerKind parse_normalizer(const std::string& s) {
  if (s == "classical") return NormalizerKind::Classical;
  if (s == "learned") return NormalizerKind::Learned;
  if (s == "none") return NormalizerKind::None;
  throw Error(ErrorCode::BadArguments, "unknown normalizer '" + s + "'");
}

std::string to_string(NormalizerKind k) {
  switch (k) {
    case NormalizerKind::Classical: return "classical";
    case NormalizerKind::Learned: return "learned";
    case NormalizerKind::None: return "none";
  }
  return "?";
}

SweepAxis parse_axis(const std::string& s) {
  if (s == "snr" || s == "snr_db") return SweepAxis::SnrDb;
  if (s == "speckle" || s == "speckle_px") return SweepAxis::SpeckleSize;
  throw Error(ErrorCode::BadArguments, "unknown sweep axis '" + s + "'");
}

std::string to_string(SweepAxis a) { return a == SweepAxis::SnrDb ? "snr_db" : "speckle_px"; }

namespace {

RealField run_normalizer(const RealField& image, const PipelineConfig& cfg) {
  switch (cfg.normalizer) {
    case NormalizerKind::Classical: return normalize::classical_normalize(image);
    case NormalizerKind::Learned:
      if (!cfg.weights) throw Error(ErrorCode::BadArguments, "learned normalizer needs weights");
      return normalize::normalize_auto(image, cfg.weights);
    case NormalizerKind::None: {
      RealField out = image;
      const double m = mean(image);
      for (auto& v : out.data()) v -= m;
      return out;
    }
  }
  return image;
}

}  // namespace

PipelineResult run(const RealField& image, const PipelineConfig& cfg) {
  PipelineResult res;
  const bool raw = cfg.raw_baselines && cfg.method != Method::Subspace;
  if (!raw) res.normalized = run_normalizer(image, cfg);
  const RealField& input = raw ? image : res.normalized;

  res.carrier_fx = cfg.carrier_fx ? *cfg.carrier_fx
                   : cfg.subspace.carrier_fx ? *cfg.subspace.carrier_fx
                                             : demodulate::estimate_carrier(input);
  switch (cfg.method) {
    case Method::Subspace: {
      const auto sub = demodulate::demodulate_subspace(demodulate::analytic_signal_extended(input), cfg.subspace);
      res.flagged = sub.flagged;
      res.wrapped = demodulate::remove_carrier(sub.wrapped, res.carrier_fx);
      break;
    }
    case Method::Ft: {
      baselines::FtConfig ft = cfg.ft;
      if (!ft.band_center) ft.band_center = res.carrier_fx;
      res.wrapped = baselines::ft_demodulate(input, ft);
      break;
    }
    case Method::Wft: {
      baselines::WftConfig wft = cfg.wft;
      ComplexField field;
      if (raw) {
        // real input: both sidebands respond equally, keep the positive one
        RealField centered = image;
        const double m = mean(image);
        for (auto& v : centered.data()) v -= m;
        field = to_complex(centered);
        wft.wx_min = std::max(wft.wx_min, wft.step);
      } else {
        field = demodulate::analytic_signal_extended(input);
      }
      res.wrapped = demodulate::remove_carrier(baselines::wft_demodulate(field, wft), res.carrier_fx);
      break;
    }
  }
  res.unwrapped = unwrap::unwrap2d(res.wrapped);
  return res;
}

std::vector<SweepRow> sweep_eval(const SweepSpec& spec) {
  if (spec.values.empty()) throw Error(ErrorCode::BadArguments, "sweep needs at least one value");
  if (spec.methods.empty()) throw Error(ErrorCode::BadArguments, "sweep needs at least one method");
  if (spec.trials == 0) throw Error(ErrorCode::BadArguments, "sweep needs at least one trial");

  const std::size_t nv = spec.values.size(), nm = spec.methods.size(), nt = spec.trials;
  std::vector<metrics::EvalReport> reports(nv * nm * nt);
  // one task per (value, trial): the scene is shared by all methods
  parallel_for(0, nv * nt, [&](std::size_t task) {
    const std::size_t vi = task / nt, trial = task % nt;
    simulate::EvalSceneParams params = spec.scene;
    if (spec.axis == SweepAxis::SnrDb) {
      params.snr_db = spec.values[vi];
    } else {
      params.speckle_px = spec.values[vi];
    }
    const auto scene = simulate::make_eval_scene(params, derive_seed(spec.seed, trial));
    const RealField image = simulate::synth_fringe(scene);
    for (std::size_t mi = 0; mi < nm; ++mi) {
      PipelineConfig cfg = spec.pipeline;
      cfg.method = spec.methods[mi];
      if (spec.known_carrier) cfg.carrier_fx = scene.fx;
      const auto res = run(image, cfg);
      reports[(vi * nm + mi) * nt + trial] = metrics::evaluate(res.unwrapped, scene.phase, spec.metrics);
    }
  });

  std::vector<SweepRow> rows;
  for (std::size_t vi = 0; vi < nv; ++vi) {
    for (std::size_t mi = 0; mi < nm; ++mi) {
      SweepRow row{spec.values[vi], spec.methods[mi], 0, 0, 0, 0, nt, spec.seed};
      const auto* r = reports.data() + (vi * nm + mi) * nt;
      for (std::size_t t = 0; t < nt; ++t) {
        row.rmse_mean += r[t].rmse;
        row.ssim_mean += r[t].ssim;
      }
      row.rmse_mean /= static_cast<double>(nt);
      row.ssim_mean /= static_cast<double>(nt);
      if (nt > 1) {
        for (std::size_t t = 0; t < nt; ++t) {
          row.rmse_sd += (r[t].rmse - row.rmse_mean) * (r[t].rmse - row.rmse_mean);
          row.ssim_sd += (r[t].ssim - row.ssim_mean) * (r[t].ssim - row.ssim_mean);
        }
        row.rmse_sd = std::sqrt(row.rmse_sd / static_cast<double>(nt - 1));
        row.ssim_sd = std::sqrt(row.ssim_sd / static_cast<double>(nt - 1));
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::string to_csv(const std::vector<SweepRow>& rows) {
  std::string out = "axis_value,method,rmse_mean,rmse_sd,ssim_mean,ssim_sd,trials,seed\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.10g,%s,%.10g,%.10g,%.10g,%.10g,%zu,%llu\n", r.axis_value,
                  to_string(r.method).c_str(), r.rmse_mean, r.rmse_sd, r.ssim_mean, r.ssim_sd,
                  r.trials, static_cast<unsigned long long>(r.seed));
    out += buf;
  }
  return out;
}

}  // namespace fringebos::pipeline
