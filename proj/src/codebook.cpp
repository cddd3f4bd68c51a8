#include "aae/codebook.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <optional>
#include <queue>
#include <thread>

#include "aae/binary_io.hpp"

namespace aae {

namespace {

constexpr char kMagic[4] = {'A', 'A', 'E', 'C'};
constexpr std::uint32_t kVersion = 1;
constexpr Eigen::Index kBlock = 1024;

bool bitwise_equal(const float* a, const float* b, std::size_t n) {
  return std::memcmp(a, b, n * sizeof(float)) == 0;
}

// Strict weak order: a ranks before b.
bool ranks_before(const Neighbor& a, const Neighbor& b) {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  return a.index < b.index;
}

// Bounded selection of the k best neighbors; the heap top is the worst kept.
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) {}
  void push(const Neighbor& n) {
    if (heap_.size() < k_) {
      heap_.push(n);
    } else if (ranks_before(n, heap_.top())) {
      heap_.pop();
      heap_.push(n);
    }
  }
  std::vector<Neighbor> take() && {
    std::vector<Neighbor> out;
    out.reserve(heap_.size());
    while (!heap_.empty()) {
      out.push_back(heap_.top());
      heap_.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  struct Worse {
    bool operator()(const Neighbor& a, const Neighbor& b) const {
      return ranks_before(a, b);
    }
  };
  std::size_t k_;
  std::priority_queue<Neighbor, std::vector<Neighbor>, Worse> heap_;
};

}  // namespace

Rotation3d CodebookEntry::orientation() const {
  return Rotation3d::Orthonormalized(rotation.cast<double>());
}

bool operator==(const CodebookEntry& a, const CodebookEntry& b) {
  return a.code.size() == b.code.size() &&
         bitwise_equal(a.code.data(), b.code.data(), a.code.size()) &&
         bitwise_equal(a.rotation.data(), b.rotation.data(), 9) &&
         bitwise_equal(&a.bbox_diag, &b.bbox_diag, 1) &&
         bitwise_equal(a.bbox_center.data(), b.bbox_center.data(), 2);
}

Codebook::Codebook(int dim, std::vector<CodebookEntry> entries)
    : dim_(dim), entries_(std::move(entries)) {
  if (dim <= 0) throw Error(ErrorCode::kDimension, "code dimension must be positive");
  const auto n = static_cast<Eigen::Index>(entries_.size());
  codes_.resize(dim, n);
  norms_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& e = entries_[i];
    if (e.code.size() != dim) {
      throw Error(ErrorCode::kDimension,
                  "entry " + std::to_string(i) + " has code dimension " +
                      std::to_string(e.code.size()) + ", expected " +
                      std::to_string(dim));
    }
    if (!e.code.allFinite() || !e.rotation.allFinite()) {
      throw Error(ErrorCode::kDegenerate, "entry " + std::to_string(i) + " is not finite");
    }
    if (!(e.bbox_diag > 0)) {
      throw Error(ErrorCode::kDegenerate,
                  "entry " + std::to_string(i) + " has non-positive bbox diagonal");
    }
    codes_.col(i) = e.code;
    norms_(i) = e.code.cast<double>().norm();
    if (norms_(i) == 0) {
      throw Error(ErrorCode::kDegenerate, "entry " + std::to_string(i) + " has a zero code");
    }
  }
}

void CodebookBuilder::add(const LatentCode& code, const Rotation3d& rotation,
                          const BBox& bbox) {
  if (code.size() != dim_) {
    throw Error(ErrorCode::kDimension, "encoder produced dimension " +
                                           std::to_string(code.size()) +
                                           ", expected " + std::to_string(dim_));
  }
  CodebookEntry e;
  e.code = code;
  e.rotation = rotation.matrix().cast<float>();
  e.bbox_diag = static_cast<float>(bbox.diagonal());
  e.bbox_center = Eigen::Vector2f(static_cast<float>(bbox.center_x()),
                                  static_cast<float>(bbox.center_y()));
  entries_.push_back(std::move(e));
}

Codebook CodebookBuilder::finish() && { return Codebook(dim_, std::move(entries_)); }

Codebook build_codebook(const ViewEncoder& encode,
                        const std::vector<CodebookView>& views) {
  if (views.empty()) throw Error(ErrorCode::kEmptyInput, "no views to encode");
  const auto rows = views.front().image.rows(), cols = views.front().image.cols();
  std::optional<CodebookBuilder> builder;
  for (const auto& v : views) {
    if (v.image.rows() != rows || v.image.cols() != cols) {
      throw Error(ErrorCode::kDimension, "codebook views differ in image shape");
    }
    const LatentCode code = encode(v);
    if (!builder) builder.emplace(static_cast<int>(code.size()));
    builder->add(code, v.rotation, v.bbox);
  }
  return std::move(*builder).finish();
}

double cosine_similarity(const LatentCode& a, const LatentCode& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimension, "codes differ in dimension");
  }
  const Eigen::VectorXd ad = a.cast<double>(), bd = b.cast<double>();
  const double na = ad.norm(), nb = bd.norm();
  if (na == 0 || nb == 0) throw Error(ErrorCode::kDegenerate, "zero latent code");
  return std::clamp(ad.dot(bd) / (na * nb), -1.0, 1.0);
}

int default_thread_count() {
  if (const char* env = std::getenv("AAE_NUM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<Neighbor> knn_query(const Codebook& cb, const LatentCode& query,
                                int k, int threads) {
  const auto n = static_cast<Eigen::Index>(cb.size());
  if (k < 1 || k > n) {
    throw Error(ErrorCode::kBounds, "k must be in [1, " + std::to_string(n) + "]");
  }
  if (query.size() != cb.dim()) {
    throw Error(ErrorCode::kDimension, "query dimension " + std::to_string(query.size()) +
                                           " != codebook dimension " +
                                           std::to_string(cb.dim()));
  }
  const Eigen::VectorXd q = query.cast<double>();
  const double qnorm = q.norm();
  if (!(qnorm > 0) || !std::isfinite(qnorm)) {
    throw Error(ErrorCode::kDegenerate, "query code is zero or not finite");
  }

  if (threads <= 0) threads = default_thread_count();
  const Eigen::Index blocks = (n + kBlock - 1) / kBlock;
  threads = static_cast<int>(std::min<Eigen::Index>(threads, blocks));

  auto scan = [&](Eigen::Index first_block, Eigen::Index last_block) {
    TopK top(static_cast<std::size_t>(k));
    Eigen::VectorXd dots;
    for (Eigen::Index b = first_block; b < last_block; ++b) {
      const Eigen::Index begin = b * kBlock;
      const Eigen::Index len = std::min(kBlock, n - begin);
      dots.noalias() =
          cb.codes().middleCols(begin, len).cast<double>().transpose() * q;
      for (Eigen::Index i = 0; i < len; ++i) {
        const double sim = std::clamp(
            dots(i) / (cb.norms()(begin + i) * qnorm), -1.0, 1.0);
        top.push({static_cast<std::size_t>(begin + i), sim});
      }
    }
    return std::move(top).take();
  };

  std::vector<std::vector<Neighbor>> partial(threads);
  if (threads == 1) {
    partial[0] = scan(0, blocks);
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) {
      const Eigen::Index lo = blocks * t / threads, hi = blocks * (t + 1) / threads;
      pool.emplace_back([&, t, lo, hi] { partial[t] = scan(lo, hi); });
    }
  }
  TopK merged(static_cast<std::size_t>(k));
  for (const auto& p : partial) {
    for (const auto& nb : p) merged.push(nb);
  }
  return std::move(merged).take();
}

std::vector<char> encode_codebook(const Codebook& cb) {
  io::Writer w;
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(cb.size()));
  w.u32(static_cast<std::uint32_t>(cb.dim()));
  for (const auto& e : cb.entries()) {
    for (Eigen::Index j = 0; j < e.code.size(); ++j) w.f32(e.code(j));
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) w.f32(e.rotation(r, c));
    }
    w.f32(e.bbox_diag);
    w.f32(e.bbox_center.x());
    w.f32(e.bbox_center.y());
  }
  return w.buffer();
}

Codebook decode_codebook(const std::vector<char>& bytes) {
  io::Reader r(bytes);
  if (bytes.size() < 4 || r.bytes(4) != std::string(kMagic, 4)) {
    throw FormatError(ErrorCode::kFormat, "bad codebook magic", 0);
  }
  const std::size_t version_at = r.offset();
  const auto version = r.u32();
  if (version != kVersion) {
    throw FormatError(ErrorCode::kUnsupportedVersion,
                      "unsupported codebook version " + std::to_string(version),
                      version_at);
  }
  const auto count = r.u32();
  const std::size_t dim_at = r.offset();
  const auto dim = r.u32();
  if (dim == 0) throw FormatError(ErrorCode::kFormat, "zero code dimension", dim_at);
  const std::size_t entry_bytes = (std::size_t{dim} + 12) * sizeof(float);
  if (r.remaining() != entry_bytes * count) {
    throw FormatError(ErrorCode::kFormat,
                      "payload size does not match " + std::to_string(count) +
                          " entries of dimension " + std::to_string(dim),
                      r.offset() + std::min(r.remaining(), entry_bytes * count));
  }
  std::vector<CodebookEntry> entries(count);
  for (auto& e : entries) {
    const std::size_t at = r.offset();
    e.code.resize(dim);
    for (std::uint32_t j = 0; j < dim; ++j) e.code(j) = r.f32();
    for (int row = 0; row < 3; ++row) {
      for (int c = 0; c < 3; ++c) e.rotation(row, c) = r.f32();
    }
    e.bbox_diag = r.f32();
    e.bbox_center.x() = r.f32();
    e.bbox_center.y() = r.f32();
    if (!(e.bbox_diag > 0) || !e.code.allFinite() || e.code.isZero(0)) {
      throw FormatError(ErrorCode::kFormat, "invalid codebook entry", at);
    }
  }
  return Codebook(static_cast<int>(dim), std::move(entries));
}

void save_codebook(const Codebook& cb, const std::filesystem::path& path) {
  io::write_file(path.string(), encode_codebook(cb));
}

Codebook load_codebook(const std::filesystem::path& path) {
  return decode_codebook(io::read_file(path.string()));
}

}  // namespace aae
