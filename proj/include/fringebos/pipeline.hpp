#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fringebos/baselines.hpp"
#include "fringebos/demodulate.hpp"
#include "fringebos/metrics.hpp"
#include "fringebos/normalize.hpp"
#include "fringebos/simulate.hpp"

namespace fringebos::pipeline {

enum class Method { Subspace, Ft, Wft };
enum class NormalizerKind { Classical, Learned, None };

Method parse_method(const std::string& s);
std::string to_string(Method m);
NormalizerKind parse_normalizer(const std::string& s);
std::string to_string(NormalizerKind k);

struct PipelineConfig {
  Method method = Method::Subspace;
  NormalizerKind normalizer = NormalizerKind::Classical;
  const normalize::ModelWeights* weights = nullptr;  // required for Learned
  demodulate::SubspaceConfig subspace;
  baselines::FtConfig ft;
  baselines::WftConfig wft;
  /// Baselines on the raw intensity image instead of the normalized one.
  bool raw_baselines = false;
  /// Known carrier (cycles / pixel); estimated from the image when absent.
  std::optional<double> carrier_fx;
};

struct PipelineResult {
  RealField normalized;  // empty when the method ran on raw input
  RealField wrapped;     // carrier removed, (-pi, pi]
  RealField unwrapped;
  double carrier_fx = 0.0;
  std::size_t flagged = 0;
};

/// normalize -> demodulate -> carrier removal -> unwrap.
PipelineResult run(const RealField& image, const PipelineConfig& cfg);

enum class SweepAxis { SnrDb, SpeckleSize };

SweepAxis parse_axis(const std::string& s);
std::string to_string(SweepAxis a);

struct SweepSpec {
  simulate::EvalSceneParams scene;
  SweepAxis axis = SweepAxis::SnrDb;
  std::vector<double> values;
  std::vector<Method> methods{Method::Subspace};
  std::size_t trials = 5;
  std::uint64_t seed = 0;
  PipelineConfig pipeline;  // method field is overridden per row
  metrics::MetricOptions metrics;
  /// Hand the scene's true carrier to every method (otherwise estimated).
  bool known_carrier = true;
};

struct SweepRow {
  double axis_value = 0.0;
  Method method = Method::Subspace;
  double rmse_mean = 0.0, rmse_sd = 0.0;
  double ssim_mean = 0.0, ssim_sd = 0.0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
};

/// Trial t of every axis value uses the scene seed derive_seed(seed, t), so
/// methods and axis values are compared on the same phase maps.
std::vector<SweepRow> sweep_eval(const SweepSpec& spec);

/// axis_value,method,rmse_mean,rmse_sd,ssim_mean,ssim_sd,trials,seed
std::string to_csv(const std::vector<SweepRow>& rows);

}  // namespace fringebos::pipeline
