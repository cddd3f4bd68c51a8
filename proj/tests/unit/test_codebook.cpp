#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "aae/codebook.hpp"
#include "support.hpp"

using namespace aae;

namespace {

Codebook random_codebook(int n, int dim, Rng& rng) {
  CodebookBuilder b(dim);
  for (int i = 0; i < n; ++i) {
    LatentCode c(dim);
    for (int j = 0; j < dim; ++j) c(j) = static_cast<float>(rng.normal());
    b.add(c, aae::testing::random_rotation(rng),
          BBox{rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(5, 80), rng.uniform(5, 80)});
  }
  return std::move(b).finish();
}

LatentCode random_code(int dim, Rng& rng) {
  LatentCode c(dim);
  for (int j = 0; j < dim; ++j) c(j) = static_cast<float>(rng.normal());
  return c;
}

// Full sort of every similarity, computed from scratch in long double.
std::vector<std::size_t> sort_oracle(const Codebook& cb, const LatentCode& q) {
  std::vector<long double> sim(cb.size());
  for (std::size_t i = 0; i < cb.size(); ++i) {
    const auto& c = cb.entry(i).code;
    long double dot = 0, na = 0, nb = 0;
    for (Eigen::Index j = 0; j < c.size(); ++j) {
      dot += static_cast<long double>(c(j)) * q(j);
      na += static_cast<long double>(c(j)) * c(j);
      nb += static_cast<long double>(q(j)) * q(j);
    }
    sim[i] = dot / std::sqrt(na * nb);
  }
  std::vector<std::size_t> idx(cb.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return sim[a] > sim[b]; });
  return idx;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("aae_test_" + name);
}

}  // namespace

TEST(Cosine, KnownValues) {
  LatentCode a(2), b(2), c(2);
  a << 1, 0;
  b << 0, 1;
  c << 1, 1;
  EXPECT_DOUBLE_EQ(cosine_similarity(a, a), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(a, b), 0.0);
  EXPECT_NEAR(cosine_similarity(a, c), 1 / std::sqrt(2.0), 1e-12);
  EXPECT_THROW(cosine_similarity(a, LatentCode::Zero(2)), Error);
  EXPECT_THROW(cosine_similarity(a, LatentCode::Ones(3)), Error);
}

TEST(Codebook, NormsMatchRecomputation) {
  Rng rng(1);
  const auto cb = random_codebook(100, 32, rng);
  for (std::size_t i = 0; i < cb.size(); ++i) {
    EXPECT_NEAR(cb.norms()(i), cb.entry(i).code.cast<double>().norm(), 1e-6);
  }
}

TEST(Codebook, BuildKeepsOrderAndChecksDimension) {
  std::vector<CodebookView> views;
  for (int i = 0; i < 5; ++i) {
    views.push_back({ImageF::Constant(4, 4, static_cast<float>(i + 1)),
                     Rotation3d::AboutZ(0.1 * i), BBox{0, 0, 4, 4}});
  }
  const auto cb = build_codebook([](const CodebookView& v) { return LatentCode(Eigen::Map<const LatentCode>(v.image.data(), 16)); }, views);
  ASSERT_EQ(cb.size(), 5u);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(cb.entry(i).code(0), i + 1.0f);
  EXPECT_THROW(build_codebook([](const CodebookView&) { return LatentCode(); }, {}), Error);
  int calls = 0;
  EXPECT_THROW(build_codebook(
                   [&](const CodebookView&) { return LatentCode::Ones(++calls == 3 ? 5 : 4); }, views),
               Error);
}

TEST(Codebook, SingleEntrySelfQuery) {
  CodebookBuilder b(3);
  LatentCode c(3);
  c << 0.2f, -1.0f, 3.0f;
  b.add(c, Rotation3d::AboutX(0.4), BBox{1, 2, 3, 4});
  const auto cb = std::move(b).finish();
  const auto hits = knn_query(cb, c, 1);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].index, 0u);
  EXPECT_NEAR(hits[0].similarity, 1.0, 1e-6);
}

TEST(Codebook, InvalidEntriesRejected) {
  CodebookBuilder b(2);
  b.add(LatentCode::Zero(2), Rotation3d(), BBox{0, 0, 1, 1});
  EXPECT_THROW(std::move(b).finish(), Error);
  CodebookBuilder d(2);
  EXPECT_THROW(d.add(LatentCode::Ones(3), Rotation3d(), BBox{0, 0, 1, 1}), Error);
}

TEST(Knn, MatchesFullSortOracle) {
  Rng rng(2);
  const auto cb = random_codebook(3000, 16, rng);
  for (int q = 0; q < 40; ++q) {
    const auto query = random_code(16, rng);
    const auto oracle = sort_oracle(cb, query);
    for (int k : {1, 3, 10, 57}) {
      const auto hits = knn_query(cb, query, k);
      ASSERT_EQ(hits.size(), static_cast<std::size_t>(k));
      for (int i = 0; i < k; ++i) EXPECT_EQ(hits[i].index, oracle[i]);
      for (int i = 1; i < k; ++i) EXPECT_GE(hits[i - 1].similarity, hits[i].similarity);
    }
  }
}

TEST(Knn, SelfQueryFindsEntry) {
  Rng rng(4);
  const auto cb = random_codebook(500, 8, rng);
  for (std::size_t i = 0; i < cb.size(); i += 37) {
    const auto hits = knn_query(cb, cb.entry(i).code, 1);
    EXPECT_EQ(hits[0].index, i);
    EXPECT_NEAR(hits[0].similarity, 1.0, 1e-6);
  }
}

TEST(Knn, TiesBrokenByLowerIndex) {
  CodebookBuilder b(2);
  LatentCode c(2);
  c << 1, 1;
  for (int i = 0; i < 6; ++i) b.add(c, Rotation3d::AboutZ(0.1 * i), BBox{0, 0, 1, 1});
  const auto cb = std::move(b).finish();
  const auto hits = knn_query(cb, c, 6);
  for (std::size_t i = 0; i < hits.size(); ++i) EXPECT_EQ(hits[i].index, i);
}

TEST(Knn, RankingInvariantUnderQueryScaling) {
  Rng rng(6);
  const auto cb = random_codebook(2000, 32, rng);
  for (int q = 0; q < 20; ++q) {
    const auto query = random_code(32, rng);
    const auto base = knn_query(cb, query, 10);
    for (float s : {0.1f, 1.0f, 2.5f}) {
      const auto scaled = knn_query(cb, LatentCode(query * s), 10);
      for (int i = 0; i < 10; ++i) EXPECT_EQ(scaled[i].index, base[i].index);
    }
  }
}

TEST(Knn, ThreadCountDoesNotChangeResult) {
  Rng rng(9);
  const auto cb = random_codebook(5000, 24, rng);
  const auto query = random_code(24, rng);
  const auto one = knn_query(cb, query, 20, 1);
  for (int threads : {2, 3, 8}) EXPECT_EQ(knn_query(cb, query, 20, threads), one);
}

TEST(Knn, BoundsAndShapeErrors) {
  Rng rng(3);
  const auto cb = random_codebook(10, 4, rng);
  const auto q = random_code(4, rng);
  EXPECT_THROW(knn_query(cb, q, 0), Error);
  EXPECT_THROW(knn_query(cb, q, 11), Error);
  EXPECT_THROW(knn_query(cb, random_code(5, rng), 1), Error);
  EXPECT_THROW(knn_query(cb, LatentCode::Zero(4), 1), Error);
  EXPECT_EQ(knn_query(cb, q, 10).size(), 10u);
}

TEST(CodebookFile, RoundTripIsBitExact) {
  Rng rng(12);
  const auto cb = random_codebook(300, 128, rng);
  const auto path = temp_file("cb.bin");
  save_codebook(cb, path);
  const auto loaded = load_codebook(path);
  EXPECT_EQ(loaded, cb);
  EXPECT_EQ(encode_codebook(loaded), encode_codebook(cb));
  std::filesystem::remove(path);
}

TEST(CodebookFile, LayoutMatchesDocumentedFormat) {
  CodebookBuilder b(2);
  LatentCode c(2);
  c << 1.5f, -2.0f;
  b.add(c, Rotation3d(), BBox{10, 20, 30, 40});
  const auto bytes = encode_codebook(std::move(b).finish());
  ASSERT_EQ(bytes.size(), 16u + (2 + 9 + 1 + 2) * 4u);
  EXPECT_EQ(std::string(bytes.data(), 4), "AAEC");
  auto u32 = [&](std::size_t at) {
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + at, 4);
    return v;
  };
  auto f32 = [&](std::size_t at) {
    float v;
    std::memcpy(&v, bytes.data() + at, 4);
    return v;
  };
  EXPECT_EQ(u32(4), 1u);
  EXPECT_EQ(u32(8), 1u);
  EXPECT_EQ(u32(12), 2u);
  EXPECT_EQ(f32(16), 1.5f);
  EXPECT_EQ(f32(20), -2.0f);
  EXPECT_EQ(f32(24), 1.0f);                   // rotation (0,0)
  EXPECT_EQ(f32(24 + 9 * 4), 50.0f);          // diagonal of 30 x 40
  EXPECT_EQ(f32(24 + 10 * 4), 25.0f);         // centre x
  EXPECT_EQ(f32(24 + 11 * 4), 40.0f);         // centre y
}

TEST(CodebookFile, CorruptInputs) {
  EXPECT_THROW(decode_codebook({}), FormatError);
  Rng rng(1);
  auto bytes = encode_codebook(random_codebook(3, 4, rng));
  auto bad_version = bytes;
  const std::uint32_t v999 = 999;
  std::memcpy(bad_version.data() + 4, &v999, 4);
  try {
    decode_codebook(bad_version);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsupportedVersion);
    EXPECT_EQ(e.offset(), 4u);
  }
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  try {
    decode_codebook(truncated);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormat);
  }
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(decode_codebook(magic), FormatError);
  const auto empty = temp_file("empty.bin");
  std::ofstream(empty).close();
  EXPECT_THROW(load_codebook(empty), FormatError);
  std::filesystem::remove(empty);
}

TEST(Threads, EnvironmentOverride) {
  setenv("AAE_NUM_THREADS", "3", 1);
  EXPECT_EQ(default_thread_count(), 3);
  unsetenv("AAE_NUM_THREADS");
  EXPECT_GE(default_thread_count(), 1);
}
