#include <gtest/gtest.h>

#include "transmask/chunker.h"
#include "transmask/errors.h"
#include "transmask/ops.h"
#include "transmask/random.h"

namespace transmask {
namespace {

EncodedRep rep_of(Tensor x) {
  EncodedRep r;
  r.features = std::move(x);
  return r;
}

EncodedRep ramp(int64_t d, int64_t len) {
  std::vector<double> v(static_cast<size_t>(d * len));
  for (size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i + 1);
  return rep_of(Tensor::from({d, len}, v));
}

TEST(Chunker, GeometryExamples) {
  EXPECT_EQ(chunk_geometry(4, 2).padded_frames, 4);
  EXPECT_EQ(chunk_geometry(4, 2).num_chunks, 1);
  EXPECT_EQ(chunk_geometry(6, 2).num_chunks, 2);
  EXPECT_EQ(chunk_geometry(5, 2).padded_frames, 6);
  EXPECT_EQ(chunk_geometry(5, 2).num_chunks, 2);
  EXPECT_EQ(chunk_geometry(1, 8).padded_frames, 16);
  EXPECT_EQ(chunk_geometry(1, 8).num_chunks, 1);
}

TEST(Chunker, ChunkContents) {
  ChunkedRep c = segment(ramp(1, 6), 2);
  ASSERT_EQ(c.chunks.shape(), (Shape{1, 4, 2}));
  // chunk 0 = frames 0..3, chunk 1 = frames 2..5
  for (int64_t j = 0; j < 4; ++j) {
    EXPECT_EQ(c.chunks.at({0, j, 0}), static_cast<double>(j + 1));
    EXPECT_EQ(c.chunks.at({0, j, 1}), static_cast<double>(j + 3));
  }
  ChunkedRep padded = segment(ramp(1, 5), 2);
  EXPECT_EQ(padded.chunks.at({0, 3, 1}), 0.0);  // frame 5 is padding
  EXPECT_EQ(padded.chunks.at({0, 2, 1}), 5.0);
}

TEST(Chunker, ExhaustiveRoundTrip) {
  PrecisionScope f64(Precision::kFloat64);
  Rng rng(11);
  for (int64_t p : {1, 2, 4, 8}) {
    for (int64_t len = 1; len <= 200; ++len) {
      EncodedRep x = rep_of(uniform_tensor({3, len}, rng, -1, 1));
      EncodedRep y = overlap_add(segment(x, p));
      ASSERT_EQ(y.features.shape(), x.features.shape());
      for (int64_t i = 0; i < x.features.numel(); ++i) {
        ASSERT_EQ(y.features.data()[i], x.features.data()[i])
            << "L=" << len << " P=" << p;
      }
    }
  }
}

TEST(Chunker, RoundTripFloat32) {
  Rng rng(12);
  EncodedRep x = rep_of(uniform_tensor({4, 77}, rng, -1, 1));
  EncodedRep y = overlap_add(segment(x, 4));
  for (int64_t i = 0; i < x.features.numel(); ++i) {
    EXPECT_NEAR(y.features.data()[i], x.features.data()[i], 1e-6);
  }
}

TEST(Chunker, CoverageIsOneOrTwo) {
  // Segmenting all-ones frames and summing without normalization counts
  // coverage directly.
  for (int64_t p : {1, 2, 4, 8}) {
    for (int64_t len = 1; len <= 64; ++len) {
      const ChunkGeometry g = chunk_geometry(len, p);
      std::vector<int> cover(static_cast<size_t>(g.padded_frames), 0);
      for (int64_t s = 0; s < g.num_chunks; ++s) {
        for (int64_t j = 0; j < 2 * p; ++j) ++cover[static_cast<size_t>(s * p + j)];
      }
      for (int64_t f = 0; f < g.padded_frames; ++f) {
        const int expected = (f < p || f >= g.padded_frames - p) ? 1 : 2;
        ASSERT_EQ(cover[static_cast<size_t>(f)], expected);
      }
    }
  }
}

TEST(Chunker, AllOnesChunksNormalizeToOne) {
  ChunkedRep c;
  c.chunks = Tensor::full({1, 4, 3}, 1.0);
  c.hop = 2;
  c.original_frames = 8;
  EncodedRep y = overlap_add(c);
  for (double v : y.features.data()) EXPECT_EQ(v, 1.0);
}

TEST(Chunker, SingleChunkTruncates) {
  ChunkedRep c;
  c.chunks = Tensor::from({1, 4, 1}, {1, 2, 3, 4});
  c.hop = 2;
  c.original_frames = 3;
  EncodedRep y = overlap_add(c);
  EXPECT_EQ(y.features.shape(), (Shape{1, 3}));
  EXPECT_EQ(y.features.data()[2], 3.0);
}

TEST(Chunker, SegmentIsLinear) {
  PrecisionScope f64(Precision::kFloat64);
  Rng rng(13);
  Tensor a = uniform_tensor({2, 23}, rng, -1, 1);
  Tensor b = uniform_tensor({2, 23}, rng, -1, 1);
  Tensor lhs = segment(rep_of(add(scale(a, 0.3), scale(b, -2.0))), 4).chunks;
  Tensor rhs = add(scale(segment(rep_of(a), 4).chunks, 0.3),
                   scale(segment(rep_of(b), 4).chunks, -2.0));
  for (int64_t i = 0; i < lhs.numel(); ++i) {
    EXPECT_NEAR(lhs.data()[i], rhs.data()[i], 1e-14);
  }
}

TEST(Chunker, InconsistentGeometryThrows) {
  ChunkedRep c;
  c.chunks = Tensor::zeros({1, 4, 3});
  c.hop = 2;
  c.original_frames = 4;  // yields S=1, not 3
  EXPECT_THROW(overlap_add(c), ContractError);
  c.hop = 3;
  EXPECT_THROW(overlap_add(c), ContractError);
  EXPECT_THROW(segment(ramp(1, 4), 0), ContractError);
}

TEST(Chunker, MetadataCarried) {
  EncodedRep r = ramp(2, 9);
  r.original_samples = 80;
  r.kernel = 16;
  r.stride = 8;
  EncodedRep y = overlap_add(segment(r, 2));
  EXPECT_EQ(y.original_samples, 80);
  EXPECT_EQ(y.kernel, 16);
  EXPECT_EQ(y.stride, 8);
}

}  // namespace
}  // namespace transmask
