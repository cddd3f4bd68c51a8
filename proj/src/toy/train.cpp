#include "aae/toy/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "aae/binary_io.hpp"

#if defined(__SSE__)
#include <xmmintrin.h>
#endif

namespace aae::toy {

void TrainConfig::validate() const {
  if (!(learning_rate > 0) || batch_size <= 0 || iterations < 0 || bootstrap_k < 1) {
    throw Error(ErrorCode::kConfig,
                "learning_rate and batch_size must be positive, iterations >= 0, bootstrap_k >= 1");
  }
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1) || !(epsilon > 0)) {
    throw Error(ErrorCode::kConfig, "adam betas must be in [0, 1) and epsilon positive");
  }
  if (architecture.input_dim != kCanvasSize * kCanvasSize) {
    throw Error(ErrorCode::kConfig, "toy input width must be 64*64");
  }
}

namespace {

constexpr char kMagic[4] = {'A', 'A', 'E', 'T'};
constexpr std::uint32_t kVersion = 1;

/// Flushes denormals to zero while alive.
class FlushDenormals {
 public:
#if defined(__SSE__)
  FlushDenormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040); }
  ~FlushDenormals() { _mm_setcsr(saved_); }

 private:
  unsigned saved_;
#endif
};

Eigen::Map<const VectorX<float>> flat(const ImageF& img) {
  return {img.data(), img.size()};
}

struct Adam {
  std::vector<MatrixX<float>> mw, vw;
  std::vector<VectorX<float>> mb, vb;

  explicit Adam(const ToyModel& model) {
    for (const auto& l : model.layers()) {
      mw.push_back(MatrixX<float>::Zero(l.weight.rows(), l.weight.cols()));
      vw.push_back(mw.back());
      mb.push_back(VectorX<float>::Zero(l.bias.size()));
      vb.push_back(mb.back());
    }
  }

  void step(ToyModel& model, const ToyModel::Gradients& g, const TrainConfig& cfg, int t) {
    const auto b1 = static_cast<float>(cfg.beta1), b2 = static_cast<float>(cfg.beta2);
    const auto lr = static_cast<float>(cfg.learning_rate);
    const auto eps = static_cast<float>(cfg.epsilon);
    const auto c1 = static_cast<float>(1.0 - std::pow(cfg.beta1, t));
    const auto c2 = static_cast<float>(1.0 - std::pow(cfg.beta2, t));
    auto update = [&](float* param, float* m, float* v, const float* grad, Eigen::Index n) {
      for (Eigen::Index i = 0; i < n; ++i) {
        m[i] = b1 * m[i] + (1.0f - b1) * grad[i];
        v[i] = b2 * v[i] + (1.0f - b2) * grad[i] * grad[i];
        param[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
      }
    };
    auto& layers = model.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
      update(layers[i].weight.data(), mw[i].data(), vw[i].data(), g.weight[i].data(),
             layers[i].weight.size());
      update(layers[i].bias.data(), mb[i].data(), vb[i].data(), g.bias[i].data(),
             layers[i].bias.size());
    }
  }
};

}  // namespace

Batch make_batch(int batch_size, Distribution input, Distribution target,
                 const std::optional<AugmentConfig>& augment_cfg, Rng& rng, int size) {
  const Eigen::Index d = Eigen::Index{size} * size;
  Batch b{MatrixX<float>(d, batch_size), MatrixX<float>(d, batch_size)};
  for (int j = 0; j < batch_size; ++j) {
    const SquareSpec in_spec = sample_distribution(input, rng);
    const ImageF in_img = draw_square(in_spec, size);
    if (input == target) {
      b.target.col(j) = flat(in_img);
    } else {
      b.target.col(j) = flat(draw_square(sample_distribution(target, in_spec.r, rng), size));
    }
    if (augment_cfg) {
      const auto aug = augment(Planes{in_img}, *augment_cfg, rng);
      b.input.col(j) = flat(aug.image[0]);
    } else {
      b.input.col(j) = flat(in_img);
    }
  }
  return b;
}

ToyModel initial_model(const TrainConfig& cfg) {
  cfg.validate();
  Rng master(cfg.seed);
  Rng init = master.split(0);
  return ToyModel::Xavier(cfg.architecture, init);
}

TrainResult train(const TrainConfig& cfg, Distribution input, Distribution target,
                  const std::optional<AugmentConfig>& augment_cfg) {
  cfg.validate();
  if (augment_cfg) augment_cfg->validate();
  Rng master(cfg.seed);
  Rng init = master.split(0);
  Rng data = master.split(1);
  const FlushDenormals ftz;
  TrainResult out{ToyModel::Xavier(cfg.architecture, init), {}};
  Adam adam(out.model);
  MatrixX<float> mask;
  for (int it = 0; it < cfg.iterations; ++it) {
    const Batch batch = make_batch(cfg.batch_size, input, target, augment_cfg, data);
    const auto fwd = out.model.forward(batch.input);
    const float loss = batch_loss<float>(batch.target, fwd.output(), cfg.bootstrap_k, mask);
    if (!std::isfinite(loss)) {
      throw IterationError(ErrorCode::kTrainingFailure, "training loss is not finite", it);
    }
    if (it % 100 == 0 || it + 1 == cfg.iterations) out.curve.push_back({it, loss});
    adam.step(out.model, out.model.backward(fwd, batch.target, mask), cfg, it + 1);
  }
  return out;
}

std::vector<char> encode_model(const ToyModel& model) {
  io::Writer w;
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(model.layers().size()));
  for (const auto& l : model.layers()) {
    w.u32(static_cast<std::uint32_t>(l.weight.rows()));
    w.u32(static_cast<std::uint32_t>(l.weight.cols()));
    w.u32(static_cast<std::uint32_t>(l.activation));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.f32(l.weight(r, c));
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) w.f32(l.bias(r));
  }
  return w.buffer();
}

ToyModel decode_model(const std::vector<char>& bytes) {
  io::Reader r(bytes);
  if (bytes.size() < 4 || r.bytes(4) != std::string(kMagic, 4)) {
    throw FormatError(ErrorCode::kFormat, "bad model magic", 0);
  }
  const std::size_t version_at = r.offset();
  const auto version = r.u32();
  if (version != kVersion) {
    throw FormatError(ErrorCode::kUnsupportedVersion,
                      "unsupported model version " + std::to_string(version), version_at);
  }
  const auto n = r.u32();
  std::vector<DenseLayer<float>> layers;
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::size_t at = r.offset();
    const auto rows = r.u32(), cols = r.u32(), act = r.u32();
    if (rows == 0 || cols == 0 || act > static_cast<std::uint32_t>(Activation::kLinear) ||
        r.remaining() < (std::size_t{rows} * cols + rows) * sizeof(float)) {
      throw FormatError(ErrorCode::kFormat, "bad layer header", at);
    }
    DenseLayer<float> l{MatrixX<float>(rows, cols), VectorX<float>(rows),
                        static_cast<Activation>(act)};
    for (std::uint32_t a = 0; a < rows; ++a) {
      for (std::uint32_t b = 0; b < cols; ++b) l.weight(a, b) = r.f32();
    }
    for (std::uint32_t a = 0; a < rows; ++a) l.bias(a) = r.f32();
    layers.push_back(std::move(l));
  }
  if (r.remaining() != 0) throw FormatError(ErrorCode::kFormat, "trailing bytes", r.offset());
  try {
    return ToyModel::FromLayers(std::move(layers));
  } catch (const Error& e) {
    throw FormatError(ErrorCode::kFormat, e.what(), 0);
  }
}

void save_model(const ToyModel& model, const std::filesystem::path& path) {
  io::write_file(path.string(), encode_model(model));
}

ToyModel load_model(const std::filesystem::path& path) {
  return decode_model(io::read_file(path.string()));
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

struct LinearFit {
  double a = 0, b = 0, c = 0, sse = 0;
};

LinearFit fit_at(double omega, const std::vector<double>& r, const std::vector<double>& z) {
  const auto n = static_cast<Eigen::Index>(r.size());
  Eigen::MatrixX3d basis(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    basis(i, 0) = std::sin(omega * r[i]);
    basis(i, 1) = std::cos(omega * r[i]);
    basis(i, 2) = 1.0;
    y(i) = z[i];
  }
  const Eigen::Vector3d coef = basis.colPivHouseholderQr().solve(y);
  return {coef(0), coef(1), coef(2), (basis * coef - y).squaredNorm()};
}

}  // namespace

void write_loss_csv(const std::vector<LossSample>& curve, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "iteration,loss\n";
  for (const auto& s : curve) out << s.iteration << ',' << fmt(s.loss) << '\n';
}

SineFit fit_sinusoid(const std::vector<double>& r, const std::vector<double>& z,
                     double omega_min, double omega_max) {
  if (r.size() != z.size() || r.size() < 4) {
    throw Error(ErrorCode::kInsufficientData, "sinusoid fit needs at least 4 samples");
  }
  if (!(omega_min > 0 && omega_min < omega_max)) {
    throw Error(ErrorCode::kConfig, "bad frequency search range");
  }
  double mean = 0;
  for (double v : z) mean += v;
  mean /= static_cast<double>(z.size());
  double sst = 0;
  for (double v : z) sst += (v - mean) * (v - mean);
  SineFit out;
  if (sst < 1e-12 * static_cast<double>(z.size())) {
    out.degenerate = true;
    return out;
  }

  constexpr double kStep = 0.005;
  double best_omega = omega_min;
  double best_sse = fit_at(omega_min, r, z).sse;
  for (double w = omega_min + kStep; w <= omega_max; w += kStep) {
    const double sse = fit_at(w, r, z).sse;
    if (sse < best_sse) {
      best_sse = sse;
      best_omega = w;
    }
  }
  // Golden-section refinement inside the winning grid cell.
  double lo = std::max(omega_min, best_omega - kStep), hi = std::min(omega_max, best_omega + kStep);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int i = 0; i < 60; ++i) {
    const double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
    if (fit_at(m1, r, z).sse < fit_at(m2, r, z).sse) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  double omega = 0.5 * (lo + hi);
  LinearFit f = fit_at(omega, r, z);
  if (f.sse > best_sse) {
    omega = best_omega;
    f = fit_at(omega, r, z);
  }
  out.omega = omega;
  out.amplitude = std::hypot(f.a, f.b);
  out.phase = std::atan2(f.b, f.a);
  out.offset = f.c;
  out.r_squared = 1.0 - f.sse / sst;
  return out;
}

LatentReport analyze_latent(const ToyModel& model, const std::vector<Distribution>& dists,
                            int n_angles, Rng& rng) {
  if (n_angles < 4) throw Error(ErrorCode::kConfig, "need at least 4 angles");
  if (dists.empty()) throw Error(ErrorCode::kConfig, "no distributions to analyze");
  const Eigen::Index d = Eigen::Index{kCanvasSize} * kCanvasSize;
  if (model.input_dim() != d) throw Error(ErrorCode::kDimension, "model is not a 64x64 toy model");
  const auto dims = model.latent_dim();

  LatentReport report;
  for (const auto dist : dists) {
    LatentTrace trace;
    trace.distribution = dist;
    MatrixX<float> batch(d, n_angles);
    for (int i = 0; i < n_angles; ++i) {
      const double r = 2.0 * std::numbers::pi * i / n_angles;
      trace.r.push_back(r);
      batch.col(i) = flat(draw_square(sample_distribution(dist, r, rng)));
    }
    const MatrixX<float> codes = model.encode(batch);
    trace.z.assign(dims, std::vector<double>(n_angles));
    for (Eigen::Index k = 0; k < dims; ++k) {
      for (int i = 0; i < n_angles; ++i) trace.z[k][i] = codes(k, i);
    }
    report.traces.push_back(std::move(trace));
  }

  for (Eigen::Index k = 0; k < dims; ++k) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& t : report.traces) {
      for (double v : t.z[k]) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    for (auto& t : report.traces) {
      for (double& v : t.z[k]) v = hi - lo > 1e-12 ? 2.0 * (v - lo) / (hi - lo) - 1.0 : 0.0;
    }
  }

  for (auto& t : report.traces) {
    for (Eigen::Index k = 0; k < dims; ++k) t.fits.push_back(fit_sinusoid(t.r, t.z[k]));
    if (dims >= 2 && !t.fits[0].degenerate && !t.fits[1].degenerate) {
      t.phase_difference =
          std::remainder(t.fits[1].phase - t.fits[0].phase, 2.0 * std::numbers::pi);
    }
  }
  return report;
}

double trace_gap(const LatentTrace& a, const LatentTrace& b) {
  if (a.z.size() != b.z.size() || a.r.size() != b.r.size() || a.z.empty() || a.r.empty()) {
    throw Error(ErrorCode::kDimension, "traces differ in shape");
  }
  double sum = 0;
  for (std::size_t k = 0; k < a.z.size(); ++k) {
    for (std::size_t i = 0; i < a.r.size(); ++i) sum += std::abs(a.z[k][i] - b.z[k][i]);
  }
  return sum / static_cast<double>(a.z.size() * a.r.size());
}

double pair_similarity(const ToyModel& model, int n_pairs, Rng& rng) {
  if (n_pairs <= 0) throw Error(ErrorCode::kConfig, "need at least one pair");
  const Eigen::Index d = Eigen::Index{kCanvasSize} * kCanvasSize;
  constexpr int kCentreAngles = 360;
  MatrixX<float> ref(d, kCentreAngles);
  for (int i = 0; i < kCentreAngles; ++i) {
    const double r = 2.0 * std::numbers::pi * i / kCentreAngles;
    ref.col(i) = flat(draw_square(sample_distribution(Distribution::kA, r, rng)));
  }
  const VectorX<double> centre = model.encode(ref).cast<double>().rowwise().mean();

  MatrixX<float> first(d, n_pairs), second(d, n_pairs);
  for (int j = 0; j < n_pairs; ++j) {
    const double r = rng.uniform(0.0, 2.0 * std::numbers::pi);
    first.col(j) = flat(draw_square(sample_distribution(Distribution::kD, r, rng)));
    second.col(j) = flat(draw_square(sample_distribution(Distribution::kD, r, rng)));
  }
  const MatrixX<double> za = model.encode(first).cast<double>().colwise() - centre;
  const MatrixX<double> zb = model.encode(second).cast<double>().colwise() - centre;
  std::vector<double> sims(n_pairs);
  for (int j = 0; j < n_pairs; ++j) {
    const double denom = za.col(j).norm() * zb.col(j).norm();
    sims[j] = denom > 0 ? za.col(j).dot(zb.col(j)) / denom : 0.0;
  }
  std::sort(sims.begin(), sims.end());
  return n_pairs % 2 ? sims[n_pairs / 2] : 0.5 * (sims[n_pairs / 2 - 1] + sims[n_pairs / 2]);
}

void write_trace_csv(const LatentReport& report, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "r_deg";
  const std::size_t dims = report.traces.empty() ? 0 : report.traces.front().z.size();
  for (std::size_t k = 0; k < dims; ++k) out << ",z" << k + 1;
  out << ",distribution\n";
  for (const auto& t : report.traces) {
    for (std::size_t i = 0; i < t.r.size(); ++i) {
      out << fmt(t.r[i] * 180.0 / std::numbers::pi);
      for (std::size_t k = 0; k < dims; ++k) out << ',' << fmt(t.z[k][i]);
      out << ',' << distribution_name(t.distribution) << '\n';
    }
  }
}

}  // namespace aae::toy
