#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aae/augment.hpp"
#include "aae/toy/network.hpp"
#include "aae/toy/squares.hpp"

namespace aae::toy {

struct TrainConfig {
  double learning_rate = 2e-4;
  int batch_size = 64;
  int iterations = 10000;
  int bootstrap_k = 4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 1;
  Architecture architecture;

  void validate() const;
};

struct LossSample {
  int iteration = 0;
  double loss = 0;
};

struct TrainResult {
  ToyModel model;
  /// Batch loss at iteration 0, every 100th iteration, and the last one.
  std::vector<LossSample> curve;
};

/// One training batch as image columns. When the distributions differ the
/// target is drawn from `target` with the input's rotation; otherwise the
/// target is the un-augmented input.
struct Batch {
  MatrixX<float> input;
  MatrixX<float> target;
};

Batch make_batch(int batch_size, Distribution input, Distribution target,
                 const std::optional<AugmentConfig>& augment_cfg, Rng& rng,
                 int size = kCanvasSize);

/// Adam on the bootstrapped loss. Deterministic given cfg (including seed).
/// Throws IterationError(kTrainingFailure) on a non-finite loss.
TrainResult train(const TrainConfig& cfg, Distribution input, Distribution target,
                  const std::optional<AugmentConfig>& augment_cfg = std::nullopt);

/// The untrained model train() starts from.
ToyModel initial_model(const TrainConfig& cfg);

/// Little-endian "AAET", u32 version, u32 layer count, then per layer u32
/// rows, u32 cols, u32 activation, rows*cols f32 weights (row-major), rows f32
/// biases.
std::vector<char> encode_model(const ToyModel& model);
ToyModel decode_model(const std::vector<char>& bytes);
void save_model(const ToyModel& model, const std::filesystem::path& path);
ToyModel load_model(const std::filesystem::path& path);

void write_loss_csv(const std::vector<LossSample>& curve, const std::filesystem::path& path);

struct SineFit {
  bool degenerate = false;  // constant trace, no fit
  double omega = 0;
  double amplitude = 0;
  double phase = 0;  // z ~ amplitude * sin(omega r + phase) + offset
  double offset = 0;
  double r_squared = 0;
};

/// Least-squares fit of a sinusoid with free frequency in [omega_min, omega_max].
SineFit fit_sinusoid(const std::vector<double>& r, const std::vector<double>& z,
                     double omega_min = 0.5, double omega_max = 9.5);

struct LatentTrace {
  Distribution distribution = Distribution::kA;
  std::vector<double> r;
  /// Normalized codes, one row per latent dimension.
  std::vector<std::vector<double>> z;
  std::vector<SineFit> fits;
  /// Phase of dim 1 minus dim 0, wrapped to (-pi, pi]; set when both fit.
  std::optional<double> phase_difference;
};

struct LatentReport {
  std::vector<LatentTrace> traces;
};

/// Encodes squares at `n_angles` uniform rotations for each distribution and
/// fits every latent dimension. Each dimension is min-max normalized to
/// [-1, 1] over all traces jointly, so traces stay comparable.
LatentReport analyze_latent(const ToyModel& model, const std::vector<Distribution>& dists,
                            int n_angles, Rng& rng);

/// Mean |z_a - z_b| over angles and dimensions.
double trace_gap(const LatentTrace& a, const LatentTrace& b);

/// Median cosine similarity between mean-centred codes of square pairs that
/// share a rotation but differ in scale and translation (distribution d).
/// The centre is the mean code of distribution a over uniform rotations.
double pair_similarity(const ToyModel& model, int n_pairs, Rng& rng);

/// Columns r_deg, z1, z2, ..., distribution.
void write_trace_csv(const LatentReport& report, const std::filesystem::path& path);

}  // namespace aae::toy
