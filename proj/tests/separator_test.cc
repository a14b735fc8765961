#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "transmask/chunker.h"
#include "transmask/errors.h"
#include "transmask/ops.h"
#include "transmask/random.h"
#include "transmask/separator.h"

namespace transmask {
namespace {

ModelConfig tiny_config(SeparatorKind kind = SeparatorKind::kStrnn) {
  ModelConfig c;
  c.d_model = 4;
  c.enc_filters = 4;
  c.lstm_hidden = 3;
  c.n_heads = 2;
  c.d_ffn = 6;
  c.n_layers = 2;
  c.chunk_hop = 2;
  c.enc_kernel = 4;
  c.enc_stride = 2;
  c.separator = kind;
  return c;
}

ChunkedRep random_chunks(Shape shape, uint64_t seed) {
  Rng rng(seed);
  ChunkedRep c;
  c.chunks = uniform_tensor(std::move(shape), rng, -1, 1);
  c.hop = c.chunks.dim(1) / 2;
  c.original_frames = (c.chunks.dim(2) + 1) * c.hop;
  return c;
}

void expect_equal(const Tensor &a, const Tensor &b, double tol = 0.0) {
  ASSERT_EQ(a.shape(), b.shape());
  for (int64_t i = 0; i < a.numel(); ++i) {
    if (tol == 0.0) {
      ASSERT_EQ(a.data()[i], b.data()[i]) << "entry " << i;
    } else {
      ASSERT_NEAR(a.data()[i], b.data()[i], tol) << "entry " << i;
    }
  }
}

// ---- dual-temporal encoding -------------------------------------------

TEST(DualTemporal, PreservesShape) {
  ModelConfig c = tiny_config();
  c.d_model = c.enc_filters = 64;
  c.n_heads = 4;
  ModelParams m = init_model(c, 1);
  ChunkedRep x = random_chunks({64, 8, 5}, 2);
  EXPECT_EQ(dual_temporal_encoding(x, m.separator.encoding).chunks.shape(),
            (Shape{64, 8, 5}));
}

TEST(DualTemporal, ZeroParamsIsIdentity) {
  ModelParams m = init_model(tiny_config(), 3);
  for (auto &blk : m.separator.encoding.blocks) {
    for (Tensor *t : {&blk.weight, &blk.bias, &blk.norm.gain, &blk.norm.bias}) {
      for (double &v : t->mutable_data()) v = 0.0;
    }
  }
  ChunkedRep x = random_chunks({4, 4, 6}, 4);
  expect_equal(dual_temporal_encoding(x, m.separator.encoding).chunks,
               x.chunks);
}

TEST(DualTemporal, ChannelMismatchThrows) {
  ModelParams m = init_model(tiny_config(), 3);
  ChunkedRep x = random_chunks({5, 4, 6}, 4);
  EXPECT_THROW(dual_temporal_encoding(x, m.separator.encoding), ConfigError);
}

TEST(DualTemporal, ShiftEquivariantInInterior) {
  PrecisionScope f64(Precision::kFloat64);
  ModelParams m = init_model(tiny_config(), 5);
  const int64_t d = 4, rows = 4, margin = 8, body = 4;
  const int64_t s_len = margin + body + margin;
  Rng rng(6);
  Tensor base = Tensor::zeros({d, rows, s_len});
  Tensor shifted = Tensor::zeros({d, rows, s_len});
  for (int64_t c = 0; c < d; ++c) {
    for (int64_t r = 0; r < rows; ++r) {
      for (int64_t s = margin; s < margin + body; ++s) {
        const double v = rng.uniform(-1, 1);
        base.mutable_data()[(c * rows + r) * s_len + s] = v;
        shifted.mutable_data()[(c * rows + r) * s_len + s + 1] = v;
      }
    }
  }
  Tensor a = dual_temporal_branch(base, m.separator.encoding);
  Tensor b = dual_temporal_branch(shifted, m.separator.encoding);
  for (int64_t c = 0; c < d; ++c) {
    for (int64_t r = 0; r < rows; ++r) {
      for (int64_t s = margin - 2; s < margin + body + 2; ++s) {
        EXPECT_NEAR(a.at({c, r, s}), b.at({c, r, s + 1}), 1e-10);
      }
    }
  }
}

// ---- STRNN / baseline layers ------------------------------------------

TEST(StrnnLayer, ZeroOutputProjectionsGiveIdentity) {
  ModelParams m = init_model(tiny_config(), 7);
  zero_output_projections(m.separator);
  ChunkedRep x = random_chunks({4, 4, 5}, 8);
  expect_equal(strnn_layer(x, m.separator.strnn[0]).chunks, x.chunks);
  LayerOptions intra_only;
  intra_only.skip_inter = true;
  expect_equal(strnn_layer(x, m.separator.strnn[0], intra_only).chunks,
               x.chunks);
}

TEST(DprnnLayer, ZeroOutputProjectionsGiveIdentity) {
  ModelParams m = init_model(tiny_config(SeparatorKind::kDprnnBaseline), 7);
  zero_output_projections(m.separator);
  ChunkedRep x = random_chunks({4, 4, 5}, 8);
  ChunkedRep y = dprnn_baseline_layer(x, m.separator.dprnn[0]);
  expect_equal(y.chunks, x.chunks);
}

TEST(DprnnLayer, PreservesShape) {
  ModelParams m = init_model(tiny_config(SeparatorKind::kDprnnBaseline), 9);
  ChunkedRep x = random_chunks({4, 4, 7}, 10);
  EXPECT_EQ(dprnn_baseline_layer(x, m.separator.dprnn[0]).chunks.shape(),
            (Shape{4, 4, 7}));
}

TEST(StrnnLayer, IntraStageIsLocalToChunk) {
  PrecisionScope f64(Precision::kFloat64);
  ModelParams m = init_model(tiny_config(), 11);
  LayerOptions opt;
  opt.skip_inter = true;
  ChunkedRep x = random_chunks({4, 4, 5}, 12);
  Tensor y0 = strnn_layer(x, m.separator.strnn[0], opt).chunks;
  const int64_t s1 = 2;
  Tensor xp = x.chunks.clone_leaf(false);
  for (int64_t c = 0; c < 4; ++c) {
    for (int64_t p = 0; p < 4; ++p) xp.mutable_data()[(c * 4 + p) * 5 + s1] += 0.5;
  }
  Tensor y1 = strnn_layer(x.with_chunks(xp), m.separator.strnn[0], opt).chunks;
  for (int64_t c = 0; c < 4; ++c) {
    for (int64_t p = 0; p < 4; ++p) {
      for (int64_t s = 0; s < 5; ++s) {
        if (s == s1) {
          continue;
        }
        EXPECT_EQ(y0.at({c, p, s}), y1.at({c, p, s}));
      }
    }
  }
}

// Finite-difference dependency map of f: [D, 2P, S] -> [D, 2P, S], collapsed
// over channels: dep[(p_out, s_out), (p_in, s_in)].
using DepMap = std::vector<std::vector<bool>>;

template <typename Fn>
DepMap dependency_map(const Tensor &x, Fn fn) {
  const int64_t d = x.dim(0), rows = x.dim(1), cols = x.dim(2);
  const int64_t frames = rows * cols;
  DepMap dep(static_cast<size_t>(frames),
             std::vector<bool>(static_cast<size_t>(frames), false));
  const Tensor base = fn(x);
  for (int64_t c = 0; c < d; ++c) {
    for (int64_t f_in = 0; f_in < frames; ++f_in) {
      Tensor xp = x.clone_leaf(false);
      xp.mutable_data()[c * frames + f_in] += 1e-3;
      const Tensor y = fn(xp);
      for (int64_t co = 0; co < d; ++co) {
        for (int64_t f_out = 0; f_out < frames; ++f_out) {
          const int64_t i = co * frames + f_out;
          if (y.data()[i] != base.data()[i]) {
            dep[static_cast<size_t>(f_out)][static_cast<size_t>(f_in)] = true;
          }
        }
      }
    }
  }
  return dep;
}

TEST(StrnnLayer, JacobianSparsityMatchesStridedPattern) {
  PrecisionScope f64(Precision::kFloat64);
  ModelConfig c = tiny_config();
  c.d_model = c.enc_filters = 2;
  c.n_heads = 1;
  ModelParams m = init_model(c, 13);
  const StrnnLayerParams &layer = m.separator.strnn[0];
  ChunkedRep x = random_chunks({2, 4, 3}, 14);
  const int64_t rows = 4, cols = 3, frames = rows * cols;
  auto p_of = [&](int64_t f) { return f / cols; };
  auto s_of = [&](int64_t f) { return f % cols; };

  LayerOptions intra_only;
  intra_only.skip_inter = true;
  DepMap intra = dependency_map(x.chunks, [&](const Tensor &t) {
    return strnn_layer(x.with_chunks(t), layer, intra_only).chunks;
  });
  DepMap inter = dependency_map(x.chunks, [&](const Tensor &t) {
    Tensor frames_t = permute(t, {1, 2, 0});
    Tensor y = add(frames_t, sandwich_block(frames_t, layer.inter));
    return permute(y, {2, 0, 1});
  });
  DepMap full = dependency_map(x.chunks, [&](const Tensor &t) {
    return strnn_layer(x.with_chunks(t), layer).chunks;
  });
  for (int64_t o = 0; o < frames; ++o) {
    for (int64_t i = 0; i < frames; ++i) {
      const size_t uo = static_cast<size_t>(o), ui = static_cast<size_t>(i);
      EXPECT_EQ(intra[uo][ui], s_of(o) == s_of(i)) << o << "<-" << i;
      EXPECT_EQ(inter[uo][ui], p_of(o) == p_of(i)) << o << "<-" << i;
      bool predicted = false;
      for (int64_t k = 0; k < frames; ++k) {
        predicted = predicted || (p_of(o) == p_of(k) && s_of(k) == s_of(i));
      }
      if (full[uo][ui]) EXPECT_TRUE(predicted) << o << "<-" << i;
    }
  }
}

TEST(StrnnLayer, WorkersMatchSingleThread) {
  ModelParams m = init_model(tiny_config(), 15);
  ChunkedRep x = random_chunks({4, 4, 7}, 16);
  NoGradGuard no_grad;
  LayerOptions multi;
  multi.workers = 3;
  expect_equal(strnn_layer(x, m.separator.strnn[0], multi).chunks,
               strnn_layer(x, m.separator.strnn[0]).chunks, 1e-6);
}

// ---- sandwich block ----------------------------------------------------

std::vector<double> ref_ln(const std::vector<double> &v, const Tensor &g,
                           const Tensor &b) {
  const double n = static_cast<double>(v.size());
  double mu = 0, var = 0;
  for (double x : v) mu += x;
  mu /= n;
  for (double x : v) var += (x - mu) * (x - mu);
  var /= n;
  std::vector<double> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    out[i] = (v[i] - mu) / std::sqrt(var + 1e-5) * g.data()[i] + b.data()[i];
  }
  return out;
}

std::vector<double> ref_linear(const std::vector<double> &v,
                               const LinearParams &p) {
  const size_t out_n = static_cast<size_t>(p.weight.dim(1));
  std::vector<double> out(out_n);
  for (size_t o = 0; o < out_n; ++o) {
    double acc = p.bias.data()[o];
    for (size_t i = 0; i < v.size(); ++i) {
      acc += v[i] * p.weight.data()[i * out_n + o];
    }
    out[o] = acc;
  }
  return out;
}

TEST(Sandwich, SinglePositionClosedForm) {
  PrecisionScope f64(Precision::kFloat64);
  ModelParams m = init_model(tiny_config(), 17);
  const SandwichParams &p = m.separator.strnn[0].inter;
  Rng rng(18);
  Tensor x = uniform_tensor({1, 4}, rng, -1, 1);
  Tensor y = sandwich_block(x, p);

  // One key: attention weight 1, context = value projection.
  std::vector<double> xv(x.data().begin(), x.data().end());
  std::vector<double> ctx = ref_linear(ref_ln(xv, p.attn_norm.gain,
                                              p.attn_norm.bias), p.value);
  std::vector<double> attn = ref_linear(ctx, p.out);
  std::vector<double> y1(4);
  for (size_t i = 0; i < 4; ++i) y1[i] = xv[i] + attn[i];
  std::vector<double> h = ref_linear(ref_ln(y1, p.ffn_norm.gain,
                                            p.ffn_norm.bias), p.ffn_in);
  for (double &v : h) {
    v = 0.5 * v * (1 + std::tanh(std::sqrt(2 / M_PI) * (v + 0.044715 * v * v * v)));
  }
  std::vector<double> f = ref_linear(h, p.ffn_out);
  std::vector<double> y2(4);
  for (size_t i = 0; i < 4; ++i) y2[i] = y1[i] + f[i];
  std::vector<double> expected = ref_ln(y2, p.final_norm.gain, p.final_norm.bias);
  for (size_t i = 0; i < 4; ++i) EXPECT_NEAR(y.data()[i], expected[i], 1e-12);
}

TEST(Sandwich, AttentionRowsSumToOne) {
  ModelParams m = init_model(tiny_config(), 19);
  Rng rng(20);
  Tensor x = uniform_tensor({3, 6, 4}, rng, -2, 2);
  Tensor w = sandwich_attention_weights(x, m.separator.strnn[0].inter);
  ASSERT_EQ(w.shape(), (Shape{3 * 2, 6, 6}));
  for (int64_t r = 0; r < w.numel() / 6; ++r) {
    double s = 0;
    for (int64_t k = 0; k < 6; ++k) s += w.data()[r * 6 + k];
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

TEST(Sandwich, PermutationEquivariant) {
  PrecisionScope f64(Precision::kFloat64);
  ModelParams m = init_model(tiny_config(), 21);
  const SandwichParams &p = m.separator.strnn[0].inter;
  Rng rng(22);
  for (int trial = 0; trial < 10; ++trial) {
    const int64_t s_len = 7;
    Tensor x = uniform_tensor({s_len, 4}, rng, -1, 1);
    std::vector<int64_t> perm(s_len);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    std::vector<double> xp(static_cast<size_t>(s_len * 4));
    for (int64_t s = 0; s < s_len; ++s) {
      for (int64_t d = 0; d < 4; ++d) xp[s * 4 + d] = x.at({perm[s], d});
    }
    Tensor y = sandwich_block(x, p);
    Tensor yp = sandwich_block(Tensor::from({s_len, 4}, xp), p);
    for (int64_t s = 0; s < s_len; ++s) {
      for (int64_t d = 0; d < 4; ++d) {
        EXPECT_NEAR(yp.at({s, d}), y.at({perm[s], d}), 1e-12);
      }
    }
  }
}

TEST(Sandwich, BatchedMatchesPerItem) {
  ModelParams m = init_model(tiny_config(), 23);
  const SandwichParams &p = m.separator.strnn[0].inter;
  Rng rng(24);
  Tensor x = uniform_tensor({3, 5, 4}, rng, -1, 1);
  Tensor y = sandwich_block(x, p);
  for (int64_t b = 0; b < 3; ++b) {
    expect_equal(select(y, b), sandwich_block(select(x, b), p), 1e-6);
  }
}

// ---- separate / masks --------------------------------------------------

EncodedRep random_rep(int64_t d, int64_t len, uint64_t seed) {
  Rng rng(seed);
  EncodedRep r;
  r.features = uniform_tensor({d, len}, rng, 0, 1);
  r.original_samples = len * 2 + 2;
  r.kernel = 4;
  r.stride = 2;
  return r;
}

TEST(Separate, ShapeAndRange) {
  for (SeparatorKind kind : {SeparatorKind::kStrnn, SeparatorKind::kDprnnBaseline}) {
    ModelParams m = init_model(tiny_config(kind), 25);
    EncodedRep rep = random_rep(4, 13, 26);
    MaskSet masks = separate(rep, m);
    ASSERT_EQ(masks.masks.shape(), (Shape{2, 4, 13}));
    for (double v : masks.masks.data()) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  }
}

TEST(Separate, DefaultConfigShape) {
  ModelConfig c = transmask_config(1);
  c.chunk_hop = 4;
  ModelParams m = init_model(c, 27);
  MaskSet masks = separate(random_rep(64, 10, 28), m);
  EXPECT_EQ(masks.masks.shape(), (Shape{2, 64, 10}));
}

TEST(Separate, DeterministicAndWorkerInvariant) {
  ModelParams a = init_model(tiny_config(), 29);
  ModelParams b = init_model(tiny_config(), 29);
  EncodedRep rep = random_rep(4, 17, 30);
  expect_equal(separate(rep, a).masks, separate(rep, b).masks);
  NoGradGuard no_grad;
  expect_equal(separate(rep, a, 4).masks, separate(rep, a, 1).masks, 1e-6);
}

TEST(Separate, ConfigMismatchThrows) {
  ModelParams m = init_model(tiny_config(), 31);
  EXPECT_THROW(separate(random_rep(5, 10, 32), m), ConfigError);
  m.separator.strnn.pop_back();
  EXPECT_THROW(separate(random_rep(4, 10, 32), m), ConfigError);
}

TEST(ApplyMasks, OnesAndZeros) {
  EncodedRep rep = random_rep(4, 6, 33);
  MaskSet ones{Tensor::full({2, 4, 6}, 1.0)};
  MaskSet zeros{Tensor::zeros({2, 4, 6})};
  for (const EncodedRep &r : apply_masks(rep, ones)) {
    expect_equal(r.features, rep.features);
  }
  for (const EncodedRep &r : apply_masks(rep, zeros)) {
    for (double v : r.features.data()) EXPECT_EQ(v, 0.0);
  }
}

TEST(ApplyMasks, SumBoundedWhenMasksSumBelowOne) {
  EncodedRep rep = random_rep(4, 6, 34);
  ModelParams m = init_model(tiny_config(), 35);
  MaskSet masks = separate(rep, m);
  std::vector<EncodedRep> outs = apply_masks(rep, masks);
  for (int64_t i = 0; i < rep.features.numel(); ++i) {
    const double msum = masks.masks.data()[i] + masks.masks.data()[24 + i];
    if (msum > 1.0) continue;
    EXPECT_LE(outs[0].features.data()[i] + outs[1].features.data()[i],
              rep.features.data()[i] + 1e-7);
  }
}

TEST(ApplyMasks, ShapeMismatchThrows) {
  EncodedRep rep = random_rep(4, 6, 36);
  MaskSet bad{Tensor::zeros({2, 4, 5})};
  EXPECT_THROW(apply_masks(rep, bad), DimensionError);
}

// ---- sequential-step tally ----------------------------------------------

TEST(StepTally, MatchesClosedForm) {
  NoGradGuard no_grad;
  for (SeparatorKind kind : {SeparatorKind::kStrnn, SeparatorKind::kDprnnBaseline}) {
    ModelParams m = init_model(tiny_config(kind), 37);
    for (int64_t len : {5, 11, 30}) {
      for (int workers : {1, 3}) {
        reset_sequential_step_tally();
        separate(random_rep(4, len, 38), m, workers);
        const int64_t s = chunk_geometry(len, 2).num_chunks;
        const int64_t expected =
            kind == SeparatorKind::kStrnn ? 2 * 4 : 2 * (4 + s);
        EXPECT_EQ(sequential_step_tally(), expected);
      }
    }
  }
}

// ---- parameter accounting -------------------------------------------------

TEST(ParameterCount, ClosedFormPrimitives) {
  EXPECT_EQ(linear_parameter_count(4, 3), 15);
  EXPECT_EQ(bilstm_parameter_count(4, 4), 288);
  ModelConfig c = tiny_config();
  c.d_model = c.enc_filters = 4;
  c.lstm_hidden = 4;
  ModelParams m = init_model(c, 39);
  const BiLstmParams &rnn = m.separator.strnn[0].intra.rnn;
  int64_t n = 0;
  for (const LstmWeights *w : {&rnn.forward, &rnn.backward}) {
    n += w->w_ih.numel() + w->w_hh.numel() + w->bias.numel();
  }
  EXPECT_EQ(n, 288);
}

TEST(ParameterCount, MatchesEnumeration) {
  for (SeparatorKind kind : {SeparatorKind::kStrnn, SeparatorKind::kDprnnBaseline}) {
    for (int64_t layers : {1, 2, 4}) {
      ModelConfig c = tiny_config(kind);
      c.n_layers = layers;
      ModelParams m = init_model(c, 40);
      const ParameterCount pc = count_parameters(c);
      EXPECT_EQ(pc.total, enumerate_parameter_count(m));
      int64_t sum = 0;
      for (const auto &[name, v] : pc.breakdown) sum += v;
      EXPECT_EQ(sum, pc.total);
    }
  }
}

TEST(ParameterCount, DefaultBracket) {
  const ModelConfig six = transmask_config(6);
  const int64_t n6 = count_parameters(six).total;
  EXPECT_GE(n6, 1'100'000);
  EXPECT_LE(n6, 2'100'000);
  EXPECT_LT(n6, count_parameters(dprnn_baseline_config(six)).total);
  EXPECT_LT(count_parameters(transmask_config(4)).total, n6);
}

}  // namespace
}  // namespace transmask
