#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <functional>
#include <utility>
#include <vector>

#include "aae/geometry.hpp"
#include "aae/image.hpp"

namespace aae {

using LatentCode = Eigen::VectorXf;

constexpr int kDefaultCodeDim = 128;

/// One codebook row. Fields are stored at file precision (f32) so that a
/// save/load round trip is lossless.
struct CodebookEntry {
  LatentCode code;
  /// Object-to-camera rotation of the rendered view.
  Eigen::Matrix3f rotation = Eigen::Matrix3f::Identity();
  float bbox_diag = 1;
  Eigen::Vector2f bbox_center = Eigen::Vector2f::Zero();

  /// `rotation` projected back onto SO(3) in double precision.
  Rotation3d orientation() const;

  friend bool operator==(const CodebookEntry& a, const CodebookEntry& b);
};

/// Immutable table of latent codes with their view geometry.
class Codebook {
 public:
  Codebook() = default;
  /// Throws kDimension on mixed code sizes, kDegenerate on zero codes or
  /// non-positive diagonals.
  Codebook(int dim, std::vector<CodebookEntry> entries);

  int dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const CodebookEntry& entry(std::size_t i) const { return entries_.at(i); }
  const std::vector<CodebookEntry>& entries() const { return entries_; }

  /// dim x size matrix of codes, column i = entry i.
  const Eigen::MatrixXf& codes() const { return codes_; }
  /// L2 norm of every code, computed in double.
  const Eigen::VectorXd& norms() const { return norms_; }

  friend bool operator==(const Codebook& a, const Codebook& b) {
    return a.dim_ == b.dim_ && a.entries_ == b.entries_;
  }

 private:
  int dim_ = 0;
  std::vector<CodebookEntry> entries_;
  Eigen::MatrixXf codes_;
  Eigen::VectorXd norms_;
};

/// Accumulates entries one view at a time; for codebooks too large to hold
/// every rendered view in memory.
class CodebookBuilder {
 public:
  explicit CodebookBuilder(int dim) : dim_(dim) {}
  void add(const LatentCode& code, const Rotation3d& rotation, const BBox& bbox);
  std::size_t size() const { return entries_.size(); }
  Codebook finish() &&;

 private:
  int dim_;
  std::vector<CodebookEntry> entries_;
};

struct CodebookView {
  ImageF image;
  Rotation3d rotation;
  BBox bbox;
};

using ViewEncoder = std::function<LatentCode(const CodebookView&)>;

/// One entry per view, in input order. The first encoding fixes the code
/// dimension; later mismatches throw kDimension.
Codebook build_codebook(const ViewEncoder& encode,
                        const std::vector<CodebookView>& views);

/// (a . b) / (|a| |b|), accumulated in double.
double cosine_similarity(const LatentCode& a, const LatentCode& b);

struct Neighbor {
  std::size_t index = 0;
  double similarity = 0;
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Worker threads used by knn_query when `threads` is 0: AAE_NUM_THREADS if
/// set, otherwise the hardware concurrency.
int default_thread_count();

/// Exact top-k by cosine similarity, descending; equal similarities are
/// ordered by index. Deterministic for any thread count.
std::vector<Neighbor> knn_query(const Codebook& cb, const LatentCode& query,
                                int k, int threads = 0);

/// Binary codebook file ("AAEC", version 1).
void save_codebook(const Codebook& cb, const std::filesystem::path& path);
Codebook load_codebook(const std::filesystem::path& path);

std::vector<char> encode_codebook(const Codebook& cb);
Codebook decode_codebook(const std::vector<char>& bytes);

}  // namespace aae
