#include <doctest.h>

#include "fringebos/parallel.hpp"
#include "fringebos/pipeline.hpp"
#include "helpers.hpp"

using namespace fringebos;
using namespace fringebos::pipeline;

namespace {

SweepSpec small_sweep() {
  SweepSpec spec;
  spec.scene.size = 128;
  spec.scene.modulation = simulate::ModulationKind::M2;
  spec.values = {0.0, 40.0};
  spec.methods = {Method::Subspace, Method::Ft};
  spec.trials = 2;
  spec.seed = 42;
  return spec;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("name parsing") {
  CHECK(parse_method("wft") == Method::Wft);
  CHECK(to_string(Method::Subspace) == "subspace");
  CHECK(parse_normalizer("none") == NormalizerKind::None);
  CHECK(parse_axis("speckle") == SweepAxis::SpeckleSize);
  CHECK(to_string(SweepAxis::SnrDb) == "snr_db");
  CHECK_THROWS_AS(parse_method("svd"), Error);
  CHECK_THROWS_AS(parse_normalizer("deep"), Error);
  CHECK_THROWS_AS(parse_axis("pv"), Error);
}

TEST_CASE("subspace pipeline on a noiseless scene") {
  simulate::EvalSceneParams params;
  params.modulation = simulate::ModulationKind::Uniform;
  const auto scene = simulate::make_eval_scene(params, 3);
  PipelineConfig cfg;
  cfg.carrier_fx = scene.fx;
  const auto res = run(simulate::synth_fringe(scene), cfg);
  CHECK(metrics::rmse_phase(res.unwrapped, scene.phase) < 0.05);
  // an estimated carrier also absorbs the tilt of the phase map
  const auto est = run(simulate::synth_fringe(scene), PipelineConfig{});
  CHECK(est.carrier_fx == doctest::Approx(scene.fx).epsilon(1e-2));
  CHECK(res.normalized.width() == 256);
  CHECK(min_value(res.wrapped) > -M_PI - 1e-12);
  CHECK(max_value(res.wrapped) <= M_PI + 1e-12);
}

TEST_CASE("every method runs and tracks the phase at 30 dB") {
  simulate::EvalSceneParams params;
  params.size = 128;
  params.modulation = simulate::ModulationKind::Uniform;
  params.snr_db = 30.0;
  const auto scene = simulate::make_eval_scene(params, 8);
  const RealField img = simulate::synth_fringe(scene);
  for (auto m : {Method::Subspace, Method::Ft, Method::Wft}) {
    for (bool raw : {false, true}) {
      PipelineConfig cfg;
      cfg.method = m;
      cfg.raw_baselines = raw;
      cfg.carrier_fx = scene.fx;
      const auto res = run(img, cfg);
      CHECK_MESSAGE(metrics::rmse_phase(res.unwrapped, scene.phase) < 0.3, to_string(m) << " raw=" << raw);
      CHECK(res.normalized.empty() == (raw && m != Method::Subspace));
    }
  }
}

TEST_CASE("learned normalizer needs weights") {
  PipelineConfig cfg;
  cfg.normalizer = NormalizerKind::Learned;
  CHECK_THROWS_AS(run(RealField(256, 256, 0.5), cfg), Error);
}

TEST_CASE("sweep CSV layout") {
  const auto rows = sweep_eval(small_sweep());
  REQUIRE(rows.size() == 4);
  const std::string csv = to_csv(rows);
  CHECK(csv.rfind("axis_value,method,rmse_mean,rmse_sd,ssim_mean,ssim_sd,trials,seed\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(rows[0].axis_value == 0.0);
  CHECK(rows[1].method == Method::Ft);
  CHECK(rows[2].axis_value == 40.0);
  for (const auto& r : rows) {
    CHECK(r.trials == 2);
    CHECK(r.seed == 42);
    CHECK(r.rmse_sd >= 0.0);
    CHECK(r.ssim_mean <= 1.0);
  }
}

TEST_CASE("sweep output is identical across runs and thread counts") {
  SweepSpec spec = small_sweep();
  spec.trials = 1;
  set_thread_count(1);
  const std::string a = to_csv(sweep_eval(spec));
  set_thread_count(4);
  const std::string b = to_csv(sweep_eval(spec));
  const std::string c = to_csv(sweep_eval(spec));
  set_thread_count(0);
  CHECK(a == b);
  CHECK(b == c);
}

TEST_CASE("subspace RMSE at 40 dB does not exceed RMSE at 0 dB") {
  SweepSpec spec = small_sweep();
  spec.methods = {Method::Subspace};
  spec.trials = 5;
  const auto rows = sweep_eval(spec);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].rmse_mean <= rows[0].rmse_mean);
}

TEST_CASE("sweep argument checks") {
  SweepSpec spec = small_sweep();
  spec.values.clear();
  CHECK_THROWS_AS(sweep_eval(spec), Error);
  spec = small_sweep();
  spec.methods.clear();
  CHECK_THROWS_AS(sweep_eval(spec), Error);
  spec = small_sweep();
  spec.trials = 0;
  CHECK_THROWS_AS(sweep_eval(spec), Error);
}

}
