#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fringebos/baselines.hpp"
#include "fringebos/demodulate.hpp"
#include "fringebos/diffusion.hpp"
#include "fringebos/metrics.hpp"
#include "fringebos/normalize.hpp"
#include "fringebos/parallel.hpp"
#include "fringebos/pipeline.hpp"
#include "fringebos/raster_io.hpp"
#include "fringebos/simulate.hpp"
#include "fringebos/unwrap.hpp"

namespace py = pybind11;
using namespace fringebos;

namespace {

using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ComplexArray = py::array_t<Complex, py::array::c_style | py::array::forcecast>;

template <typename T, typename A>
Field<T> to_field(const A& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2D array");
  const auto h = static_cast<std::size_t>(a.shape(0)), w = static_cast<std::size_t>(a.shape(1));
  return Field<T>(w, h, std::vector<T>(a.data(), a.data() + w * h));
}

RealField real_in(const RealArray& a) { return to_field<double>(a); }
ComplexField complex_in(const ComplexArray& a) { return to_field<Complex>(a); }

template <typename T>
py::array_t<T> out(const Field<T>& f) {
  py::array_t<T> a({f.height(), f.width()});
  std::copy(f.data().begin(), f.data().end(), a.mutable_data());
  return a;
}

metrics::MetricOptions metric_options(std::size_t margin, const std::string& range) {
  metrics::MetricOptions o;
  o.margin = margin;
  if (range == "pair") {
    o.range = metrics::SsimRange::Pair;
  } else if (range != "truth") {
    throw Error(ErrorCode::BadArguments, "ssim range must be 'truth' or 'pair'");
  }
  return o;
}

demodulate::SvdMode svd_mode(const std::string& s) {
  if (s == "power") return demodulate::SvdMode::PowerIteration;
  if (s == "full") return demodulate::SvdMode::Full;
  throw Error(ErrorCode::BadArguments, "svd must be 'power' or 'full'");
}

py::dict scene_dict(const simulate::SimScene& s) {
  py::dict d;
  d["image"] = out(simulate::synth_fringe(s));
  d["phase"] = out(s.phase);
  d["background"] = out(s.background);
  d["modulation"] = out(s.modulation);
  d["fx"] = s.fx;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Carrier fringe-pattern simulation, normalization and phase demodulation";

  static py::exception<Error> error(m, "FringeError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error.ptr())(e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error.ptr(), exc.ptr());
    }
  });

  m.def("set_threads", &set_thread_count, py::arg("n"), "Worker count; 0 means all cores.");
  m.def("threads", &thread_count);

  // rasters
  m.def("read_raster", [](const std::filesystem::path& p) -> py::object {
    auto f = read_raster(p);
    if (auto* r = std::get_if<RealField>(&f)) return out(*r);
    return out(std::get<ComplexField>(f));
  });
  m.def("write_raster", [](py::array a, const std::filesystem::path& p) {
    if (py::isinstance<py::array_t<Complex>>(a)) {
      write_raster(complex_in(a.cast<ComplexArray>()), p);
    } else {
      write_raster(real_in(a.cast<RealArray>()), p);
    }
  });
  m.def("export_png", [](const RealArray& a, const std::filesystem::path& p, double lo, double hi) {
    export_png(real_in(a), p, lo, hi);
  });

  // simulation
  m.def(
      "make_scene",
      [](std::size_t size, const std::string& modulation, std::optional<double> snr_db,
         std::optional<double> awgn_sigma, std::optional<double> speckle_px, double fx, std::size_t phase_terms,
         double phase_pv, std::uint64_t seed) {
        simulate::EvalSceneParams p;
        p.size = size;
        p.modulation = simulate::parse_modulation(modulation);
        p.snr_db = snr_db;
        p.awgn_sigma = awgn_sigma;
        p.speckle_px = speckle_px;
        p.fx = fx;
        p.phase_terms = phase_terms;
        p.phase_pv = phase_pv;
        return scene_dict(simulate::make_eval_scene(p, seed));
      },
      py::arg("size") = 256, py::arg("modulation") = "m1", py::arg("snr_db") = py::none(),
      py::arg("awgn_sigma") = py::none(), py::arg("speckle_px") = py::none(), py::arg("fx") = 0.05,
      py::arg("phase_terms") = 20, py::arg("phase_pv") = 12.0, py::arg("seed") = 0,
      "Evaluation scene: dict with image, phase, background, modulation, fx.");
  m.def(
      "zernike_phase",
      [](std::size_t width, std::size_t height, std::size_t terms, double pv, std::uint64_t seed) {
        Rng rng(seed);
        return out(simulate::random_zernike_phase(rng, width, height, terms, pv));
      },
      py::arg("width"), py::arg("height"), py::arg("terms") = 10, py::arg("pv") = 12.0, py::arg("seed") = 0);
  m.def(
      "diffusion_sequence",
      [](std::vector<double> times, double diffusivity, double pixel_size, std::size_t width,
         std::size_t height, double noise_sd, std::uint64_t seed) {
        simulate::DiffusionSequenceParams p;
        p.times = times.empty() ? simulate::default_diffusion_times() : times;
        p.diffusivity = diffusivity;
        p.pixel_size = pixel_size;
        p.width = width;
        p.height = height;
        p.noise_sd = noise_sd;
        p.seed = seed;
        py::list frames;
        for (const auto& f : simulate::synth_diffusion_sequence(p)) frames.append(out(f));
        return py::make_tuple(frames, p.times);
      },
      py::arg("times") = std::vector<double>{}, py::arg("diffusivity") = 1.47e-9,
      py::arg("pixel_size") = 9.1e-6, py::arg("width") = 2048, py::arg("height") = 1024,
      py::arg("noise_sd") = 0.0, py::arg("seed") = 0, "Returns (frames, times).");

  // normalization and demodulation
  m.def("classical_normalize", [](const RealArray& a) { return out(normalize::classical_normalize(real_in(a))); });
  m.def("unet_forward", [](const std::filesystem::path& weights, const RealArray& a) {
    const auto w = normalize::load_weights(weights);
    return out(normalize::normalize_auto(real_in(a), &w));
  });
  m.def("analytic_signal", [](const RealArray& a, bool extended) {
    return out(extended ? demodulate::analytic_signal_extended(real_in(a)) : demodulate::analytic_signal(real_in(a)));
  }, py::arg("fringe"), py::arg("extended") = true);
  m.def(
      "estimate_window",
      [](const ComplexArray& a, const std::string& svd) {
        const auto e = demodulate::estimate_window(complex_in(a), svd_mode(svd));
        return py::make_tuple(e.a0, e.a1, e.a2);
      },
      py::arg("window"), py::arg("svd") = "power", "(a0, a1, a2) of the local linear phase.");
  m.def(
      "demodulate_subspace",
      [](const ComplexArray& a, std::size_t half_window, const std::string& svd, std::size_t power_iters) {
        demodulate::SubspaceConfig cfg;
        cfg.half_window = half_window;
        cfg.svd_mode = svd_mode(svd);
        cfg.power_iters = power_iters;
        const auto r = demodulate::demodulate_subspace(complex_in(a), cfg);
        py::dict d;
        d["wrapped"] = out(r.wrapped);
        d["freq_x"] = out(r.freq_x);
        d["freq_y"] = out(r.freq_y);
        d["flagged"] = r.flagged;
        d["unconverged"] = r.unconverged;
        return d;
      },
      py::arg("field"), py::arg("half_window") = 5, py::arg("svd") = "power", py::arg("power_iters") = 30);
  m.def("estimate_carrier", [](const RealArray& a) { return demodulate::estimate_carrier(real_in(a)); });
  m.def("remove_carrier", [](const RealArray& a, double fx) { return out(demodulate::remove_carrier(real_in(a), fx)); });
  m.def(
      "ft_demodulate",
      [](const RealArray& a, std::optional<double> center, std::optional<double> halfwidth) {
        return out(baselines::ft_demodulate(real_in(a), {center, halfwidth}));
      },
      py::arg("image"), py::arg("band_center") = py::none(), py::arg("band_halfwidth") = py::none());
  m.def(
      "wft_demodulate",
      [](const ComplexArray& a, double sigma, double step, double range) {
        baselines::WftConfig cfg;
        cfg.sigma = sigma;
        cfg.step = step;
        cfg.wx_min = cfg.wy_min = -range;
        cfg.wx_max = cfg.wy_max = range;
        return out(baselines::wft_demodulate(complex_in(a), cfg));
      },
      py::arg("field"), py::arg("sigma") = 10.0, py::arg("step") = 0.025, py::arg("range") = 2.0);
  m.def("unwrap", [](const RealArray& a) { return out(unwrap::unwrap2d(real_in(a))); });
  m.def("wrap", [](const RealArray& a) { return out(wrap_phase(real_in(a))); });

  // metrics
  m.def("rmse", [](const RealArray& e, const RealArray& t, std::size_t margin) {
    return metrics::rmse_phase(real_in(e), real_in(t), metric_options(margin, "truth"));
  }, py::arg("est"), py::arg("truth"), py::arg("margin") = 7);
  m.def("ssim", [](const RealArray& e, const RealArray& t, std::size_t margin, const std::string& range) {
    return metrics::ssim_phase(real_in(e), real_in(t), metric_options(margin, range));
  }, py::arg("est"), py::arg("truth"), py::arg("margin") = 7, py::arg("range") = "truth");

  // pipeline
  m.def(
      "demodulate",
      [](const RealArray& image, const std::string& method, const std::string& normalizer,
         std::optional<double> carrier_fx, std::optional<std::filesystem::path> weights, std::size_t half_window,
         bool raw) {
        pipeline::PipelineConfig cfg;
        cfg.method = pipeline::parse_method(method);
        cfg.normalizer = pipeline::parse_normalizer(normalizer);
        cfg.carrier_fx = carrier_fx;
        cfg.subspace.half_window = half_window;
        cfg.raw_baselines = raw;
        std::optional<normalize::ModelWeights> w;
        if (weights) {
          w = normalize::load_weights(*weights);
          cfg.weights = &*w;
        }
        const auto r = pipeline::run(real_in(image), cfg);
        py::dict d;
        d["phase"] = out(r.unwrapped);
        d["wrapped"] = out(r.wrapped);
        if (!r.normalized.empty()) d["normalized"] = out(r.normalized);
        d["carrier_fx"] = r.carrier_fx;
        d["flagged"] = r.flagged;
        return d;
      },
      py::arg("image"), py::arg("method") = "subspace", py::arg("normalizer") = "classical",
      py::arg("carrier_fx") = py::none(), py::arg("weights") = py::none(), py::arg("half_window") = 5,
      py::arg("raw") = false, "normalize -> demodulate -> carrier removal -> unwrap.");
  m.def(
      "sweep",
      [](const std::string& axis, std::vector<double> values, const std::string& modulation,
         std::vector<std::string> methods, std::size_t trials, std::uint64_t seed, std::size_t size,
         std::optional<double> snr_db, std::optional<double> awgn_sigma) {
        pipeline::SweepSpec spec;
        spec.axis = pipeline::parse_axis(axis);
        spec.values = std::move(values);
        spec.scene.modulation = simulate::parse_modulation(modulation);
        spec.scene.size = size;
        spec.scene.snr_db = snr_db;
        spec.scene.awgn_sigma = awgn_sigma;
        spec.methods.clear();
        for (const auto& s : methods) spec.methods.push_back(pipeline::parse_method(s));
        spec.trials = trials;
        spec.seed = seed;
        return pipeline::to_csv(pipeline::sweep_eval(spec));
      },
      py::arg("axis"), py::arg("values"), py::arg("modulation") = "m1",
      py::arg("methods") = std::vector<std::string>{"subspace"}, py::arg("trials") = 5, py::arg("seed") = 0,
      py::arg("size") = 256, py::arg("snr_db") = py::none(), py::arg("awgn_sigma") = py::none(),
      "Runs the sweep and returns the CSV text.");

  // diffusion
  m.def(
      "fit_diffusion",
      [](const std::vector<RealArray>& frames, const std::vector<double>& times, double px,
         std::vector<std::size_t> rows, std::size_t first, std::size_t second) {
        std::vector<RealField> fields;
        for (const auto& f : frames) fields.push_back(real_in(f));
        diffusion::DiffusionOptions opts;
        opts.rows = std::move(rows);
        opts.first = first;
        opts.second = second;
        const auto agg = diffusion::fit_diffusion(fields, times, px, opts);
        py::list fits;
        for (const auto& f : agg.fits) {
          py::dict d;
          d["row"] = f.row;
          d["D"] = f.d;
          d["A"] = f.amplitude;
          d["x0"] = f.x0;
          d["r2"] = f.r2;
          fits.append(d);
        }
        py::dict d;
        d["mean_D"] = agg.mean_d;
        d["sd_D"] = agg.sd_d;
        d["fits"] = fits;
        return d;
      },
      py::arg("frames"), py::arg("times"), py::arg("px") = 9.1e-6,
      py::arg("rows") = std::vector<std::size_t>{150, 350, 502, 650, 800}, py::arg("first") = 0,
      py::arg("second") = 5);
  m.def("model_dphi", &diffusion::model_dphi, py::arg("x"), py::arg("D"), py::arg("A"), py::arg("x0"),
        py::arg("t1"), py::arg("t2"));
}
