#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "aae/error.hpp"
#include "aae/rng.hpp"

namespace aae::toy {

enum class Activation { kRelu, kTanh, kSigmoid, kLinear };

/// Encoder input -> hidden... -> latent, decoder mirrors it back.
struct Architecture {
  int input_dim = 4096;
  std::vector<int> hidden{256, 64};
  int latent_dim = 2;
  Activation latent_activation = Activation::kLinear;

  /// Layer widths from input to reconstruction.
  std::vector<int> widths() const {
    std::vector<int> w{input_dim};
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(latent_dim);
    w.insert(w.end(), hidden.rbegin(), hidden.rend());
    w.push_back(input_dim);
    return w;
  }
};

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct DenseLayer {
  MatrixX<Scalar> weight;  // out x in
  VectorX<Scalar> bias;
  Activation activation = Activation::kRelu;
};

/// Bootstrapped squared error of one sample: the ceil(D/k) largest per-pixel
/// squared errors are summed. `mask` marks them; ties go to the lower index.
template <typename Scalar>
Scalar bootstrapped_l2(const Eigen::Ref<const VectorX<Scalar>>& x,
                       const Eigen::Ref<const VectorX<Scalar>>& x_hat, int k,
                       Eigen::Ref<VectorX<Scalar>> mask) {
  if (x.size() != x_hat.size() || mask.size() != x.size()) {
    throw Error(ErrorCode::kDimension, "bootstrapped loss: shape mismatch");
  }
  if (k < 1) throw Error(ErrorCode::kConfig, "bootstrap factor must be >= 1");
  const Eigen::Index d = x.size();
  const VectorX<Scalar> err = (x - x_hat).array().square().matrix();
  const Eigen::Index keep = (d + k - 1) / k;
  mask.setZero();
  if (keep == d) {
    mask.setOnes();
    return err.sum();
  }
  // The keep-th largest error is the cutoff; pixels above it are all kept and
  // ties at the cutoff are filled in index order.
  std::vector<Scalar> sorted(err.data(), err.data() + d);
  std::nth_element(sorted.begin(), sorted.begin() + (keep - 1), sorted.end(), std::greater<>());
  const Scalar cutoff = sorted[keep - 1];
  Eigen::Index above = 0;
  for (Eigen::Index i = 0; i < d; ++i) above += err[i] > cutoff;
  Eigen::Index ties = keep - above;
  Scalar loss = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (err[i] > cutoff || (err[i] == cutoff && ties-- > 0)) {
      mask[i] = 1;
      loss += err[i];
    }
  }
  return loss;
}

template <typename Scalar>
Scalar bootstrapped_l2(const VectorX<Scalar>& x, const VectorX<Scalar>& x_hat, int k) {
  VectorX<Scalar> mask(x.size());
  return bootstrapped_l2<Scalar>(x, x_hat, k, mask);
}

/// Mean over columns of bootstrapped_l2; `mask` receives the per-pixel masks.
template <typename Scalar>
Scalar batch_loss(const MatrixX<Scalar>& target, const MatrixX<Scalar>& output, int k,
                  MatrixX<Scalar>& mask) {
  if (target.rows() != output.rows() || target.cols() != output.cols() || target.cols() == 0) {
    throw Error(ErrorCode::kDimension, "batch loss: shape mismatch");
  }
  mask.resize(target.rows(), target.cols());
  Scalar total = 0;
  for (Eigen::Index j = 0; j < target.cols(); ++j) {
    total += bootstrapped_l2<Scalar>(target.col(j), output.col(j), k, mask.col(j));
  }
  return total / static_cast<Scalar>(target.cols());
}

/// Fully-connected autoencoder: ReLU hidden layers, tanh or linear latent, sigmoid
/// output. Samples are columns.
template <typename Scalar>
class Network {
 public:
  using Matrix = MatrixX<Scalar>;
  using Vector = VectorX<Scalar>;

  struct Forward {
    std::vector<Matrix> activations;  // input first, reconstruction last
    std::size_t latent_index = 0;
    const Matrix& codes() const { return activations[latent_index]; }
    const Matrix& output() const { return activations.back(); }
  };

  struct Gradients {
    std::vector<Matrix> weight;
    std::vector<Vector> bias;
  };

  Network() = default;

  /// All weights and biases zero.
  static Network Zeros(const Architecture& arch) {
    const auto w = arch.widths();
    if (arch.input_dim <= 0 || arch.latent_dim <= 0 ||
        std::any_of(w.begin(), w.end(), [](int v) { return v <= 0; })) {
      throw Error(ErrorCode::kConfig, "layer widths must be positive");
    }
    Network net;
    const std::size_t n = w.size() - 1;
    for (std::size_t i = 0; i < n; ++i) {
      DenseLayer<Scalar> layer{Matrix::Zero(w[i + 1], w[i]), Vector::Zero(w[i + 1]),
                               Activation::kRelu};
      if (i + 1 == n / 2) layer.activation = arch.latent_activation;
      if (i + 1 == n) layer.activation = Activation::kSigmoid;
      net.layers_.push_back(std::move(layer));
    }
    return net;
  }

  /// Xavier-uniform weights, zero biases.
  static Network Xavier(const Architecture& arch, Rng& rng) {
    Network net = Zeros(arch);
    for (auto& layer : net.layers_) {
      const double limit = std::sqrt(6.0 / static_cast<double>(layer.weight.rows() + layer.weight.cols()));
      for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
        layer.weight(i) = static_cast<Scalar>(rng.uniform(-limit, limit));
      }
    }
    return net;
  }

  /// Takes ownership of explicit layers; shapes and activations are checked.
  static Network FromLayers(std::vector<DenseLayer<Scalar>> layers) {
    if (layers.empty() || layers.size() % 2 != 0) {
      throw Error(ErrorCode::kDimension, "an autoencoder needs an even, non-zero layer count");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (l.bias.size() != l.weight.rows() ||
          (i > 0 && l.weight.cols() != layers[i - 1].weight.rows())) {
        throw Error(ErrorCode::kDimension, "layer shapes do not chain");
      }
      if (!l.weight.allFinite() || !l.bias.allFinite()) {
        throw Error(ErrorCode::kDegenerate, "non-finite weights");
      }
    }
    if (layers.back().weight.rows() != layers.front().weight.cols()) {
      throw Error(ErrorCode::kDimension, "output width differs from input width");
    }
    Network net;
    net.layers_ = std::move(layers);
    const std::size_t n = net.layers_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Activation a = net.layers_[i].activation;
      const bool ok = i + 1 == n / 2 ? (a == Activation::kTanh || a == Activation::kLinear)
                      : i + 1 == n   ? a == Activation::kSigmoid
                                     : a == Activation::kRelu;
      if (!ok) throw Error(ErrorCode::kConfig, "unexpected activation in layer " + std::to_string(i));
    }
    return net;
  }

  const std::vector<DenseLayer<Scalar>>& layers() const { return layers_; }
  std::vector<DenseLayer<Scalar>>& layers() { return layers_; }
  Eigen::Index input_dim() const { return layers_.front().weight.cols(); }
  Eigen::Index latent_dim() const { return layers_[layers_.size() / 2 - 1].weight.rows(); }

  Forward forward(const Matrix& x) const {
    if (x.rows() != input_dim()) throw Error(ErrorCode::kDimension, "batch width differs from input layer");
    Forward f;
    f.latent_index = layers_.size() / 2;
    f.activations.reserve(layers_.size() + 1);
    f.activations.push_back(x);
    for (const auto& layer : layers_) {
      Matrix z = layer.weight * f.activations.back();
      z.colwise() += layer.bias;
      activate(layer.activation, z);
      f.activations.push_back(std::move(z));
    }
    return f;
  }

  /// Latent codes only.
  Matrix encode(const Matrix& x) const {
    if (x.rows() != input_dim()) throw Error(ErrorCode::kDimension, "batch width differs from input layer");
    Matrix a = x;
    for (std::size_t i = 0; i < layers_.size() / 2; ++i) {
      Matrix z = layers_[i].weight * a;
      z.colwise() += layers_[i].bias;
      activate(layers_[i].activation, z);
      a = std::move(z);
    }
    return a;
  }

  /// Gradients of mean-over-batch masked squared error, the mask held fixed.
  Gradients backward(const Forward& f, const Matrix& target, const Matrix& mask) const {
    const Matrix& y = f.output();
    if (target.rows() != y.rows() || target.cols() != y.cols() || mask.rows() != y.rows() ||
        mask.cols() != y.cols()) {
      throw Error(ErrorCode::kDimension, "target or mask shape differs from output");
    }
    const Scalar scale = Scalar(2) / static_cast<Scalar>(y.cols());
    Matrix delta = (scale * (y - target).array() * mask.array()).matrix();
    Gradients g;
    g.weight.resize(layers_.size());
    g.bias.resize(layers_.size());
    for (std::size_t i = layers_.size(); i-- > 0;) {
      const Matrix& out = f.activations[i + 1];
      switch (layers_[i].activation) {
        case Activation::kRelu: delta = (out.array() > Scalar(0)).select(delta, Scalar(0)); break;
        case Activation::kTanh: delta.array() *= Scalar(1) - out.array().square(); break;
        case Activation::kSigmoid: delta.array() *= out.array() * (Scalar(1) - out.array()); break;
        case Activation::kLinear: break;
      }
      g.weight[i].noalias() = delta * f.activations[i].transpose();
      g.bias[i] = delta.rowwise().sum();
      if (i > 0) delta = layers_[i].weight.transpose() * delta;
    }
    return g;
  }

  template <typename Other>
  Network<Other> cast() const {
    std::vector<DenseLayer<Other>> out;
    for (const auto& l : layers_) {
      out.push_back({l.weight.template cast<Other>(), l.bias.template cast<Other>(), l.activation});
    }
    return Network<Other>::FromLayers(std::move(out));
  }

  bool operator==(const Network& other) const {
    if (layers_.size() != other.layers_.size()) return false;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (layers_[i].weight != other.layers_[i].weight || layers_[i].bias != other.layers_[i].bias ||
          layers_[i].activation != other.layers_[i].activation) {
        return false;
      }
    }
    return true;
  }

 private:
  static void activate(Activation a, Matrix& z) {
    switch (a) {
      case Activation::kRelu: z = z.cwiseMax(Scalar(0)); break;
      case Activation::kTanh: z = z.array().tanh().matrix(); break;
      case Activation::kSigmoid:
        z = (Scalar(1) / (Scalar(1) + (-z.array()).exp())).matrix();
        break;
      case Activation::kLinear: break;
    }
  }

  std::vector<DenseLayer<Scalar>> layers_;
};

using ToyModel = Network<float>;

}  // namespace aae::toy
