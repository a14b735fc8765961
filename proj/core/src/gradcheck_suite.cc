// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>

#include "transmask/chunker.h"
#include "transmask/codec.h"
#include "transmask/gradcheck.h"
#include "transmask/objective.h"
#include "transmask/ops.h"
#include "transmask/pipeline.h"
#include "transmask/random.h"
#include "transmask/separator.h"

namespace transmask {

namespace {

struct Dims {
  int64_t d;       // feature width
  int64_t hop;     // P
  int64_t frames;  // L
  int64_t hidden;  // LSTM H
  int64_t heads;
  int64_t ffn;
  int64_t layers;
};

Dims dims_for(GradCheckScale scale) {
  if (scale == GradCheckScale::kTiny) return {4, 2, 9, 3, 2, 6, 1};
  return {8, 2, 20, 8, 2, 16, 2};
}

ModelConfig config_for(const Dims &d, SeparatorKind kind) {
  ModelConfig c;
  c.d_model = c.enc_filters = d.d;
  c.lstm_hidden = d.hidden;
  c.n_heads = d.heads;
  c.d_ffn = d.ffn;
  c.n_layers = d.layers;
  c.chunk_hop = d.hop;
  c.n_speakers = 2;
  c.separator = kind;
  return c;
}

// Values bounded away from zero so kinks (ReLU) and log stay smooth under
// the finite-difference step.
Tensor away_from_zero(Shape shape, Rng &rng, bool positive = false) {
  Tensor t = uniform_tensor(std::move(shape), rng, 0.2, 1.0, true);
  if (!positive) {
    for (double &v : t.mutable_data()) {
      if (rng.uniform(0, 1) < 0.5) v = -v;
    }
  }
  return t;
}

std::vector<Tensor> params_with_prefix(ModelParams &m,
                                       const std::string &prefix) {
  std::vector<Tensor> out;
  for (auto &[name, t] : named_parameters(m)) {
    if (name.rfind(prefix, 0) == 0) out.push_back(t);
  }
  return out;
}

class Suite {
 public:
  Suite(GradCheckScale scale, uint64_t seed)
      : dims_(dims_for(scale)), rng_(seed), seed_(seed) {}

  void check(const std::string &name, std::vector<Tensor> inputs,
             const std::function<Tensor()> &out_fn, bool scalar = false) {
    const uint64_t proj_seed = mix_seed(seed_, results_.size());
    auto loss = [&]() {
      Tensor y = out_fn();
      return scalar ? y : random_projection_loss(y, proj_seed);
    };
    results_.push_back(check_gradients(name, loss, std::move(inputs)));
  }

  Tensor rand(Shape s) { return uniform_tensor(std::move(s), rng_, -1, 1, true); }
  Rng &rng() { return rng_; }
  const Dims &dims() const { return dims_; }
  std::vector<GradCheckResult> take() { return std::move(results_); }

 private:
  Dims dims_;
  Rng rng_;
  uint64_t seed_;
  std::vector<GradCheckResult> results_;
};

void elementwise_cases(Suite &s) {
  const int64_t d = s.dims().d;
  Tensor a = s.rand({3, d}), b = s.rand({3, d});
  Tensor pos = away_from_zero({3, d}, s.rng(), true);
  Tensor one = s.rand({1});
  Tensor row = s.rand({d});
  s.check("add", {a, b}, [=] { return add(a, b); });
  s.check("sub", {a, b}, [=] { return sub(a, b); });
  s.check("mul", {a, b}, [=] { return mul(a, b); });
  s.check("div", {a, pos}, [=] { return div(a, pos); });
  s.check("mul_broadcast", {one, a}, [=] { return mul(one, a); });
  s.check("scale", {a}, [=] { return scale(a, -1.7); });
  s.check("add_scalar", {a}, [=] { return add_scalar(a, 0.3); });
  s.check("add_row", {a, row}, [=] { return add_row(a, row); });
  s.check("mul_row", {a, row}, [=] { return mul_row(a, row); });
  s.check("sigmoid", {a}, [=] { return sigmoid(scale(a, 3.0)); });
  s.check("tanh", {a}, [=] { return tanh(scale(a, 2.0)); });
  Tensor kinked = away_from_zero({3, d}, s.rng());
  s.check("relu", {kinked}, [=] { return relu(kinked); });
  s.check("gelu", {a}, [=] { return gelu(scale(a, 2.0)); });
  s.check("log", {pos}, [=] { return log(pos); });
  s.check("sum", {a}, [=] { return sum(a); });
  s.check("mean", {a}, [=] { return mean(a); });
}

void shape_cases(Suite &s) {
  const int64_t d = s.dims().d;
  Tensor x = s.rand({2, 3, d});
  Tensor m = s.rand({3, d});
  s.check("transpose", {m}, [=] { return transpose(m); });
  s.check("permute", {x}, [=] { return permute(x, {2, 0, 1}); });
  s.check("reshape", {x}, [=] { return reshape(x, {6, d}); });
  s.check("narrow", {x}, [=] { return narrow(x, 2, 1, d - 2); });
  s.check("pad", {x}, [=] { return pad(x, 1, 1, 2); });
  Tensor y = s.rand({2, 3, d});
  s.check("concat", {x, y}, [=] { return concat({x, y}, 1); });
  Tensor m2 = s.rand({3, d});
  s.check("stack", {m, m2}, [=] { return stack({m, m2}); });
  s.check("select", {x}, [=] { return select(x, 1); });
}

void linear_algebra_cases(Suite &s) {
  const int64_t d = s.dims().d;
  Tensor a = s.rand({3, d}), b = s.rand({d, 5});
  s.check("matmul", {a, b}, [=] { return matmul(a, b); });
  Tensor ba = s.rand({2, 3, d}), bb = s.rand({2, d, 4});
  s.check("bmm", {ba, bb}, [=] { return bmm(ba, bb); });
  Tensor w = s.rand({d, 5}), bias = s.rand({5});
  s.check("linear", {a, w, bias}, [=] { return linear(a, w, bias); });
  Tensor logits = s.rand({3, d});
  s.check("softmax", {logits}, [=] { return softmax(scale(logits, 2.0), -1); });
  Tensor g = s.rand({d}), beta = s.rand({d});
  s.check("layer_norm", {a, g, beta}, [=] { return layer_norm(a, g, beta); });
  Tensor vol = s.rand({d, 3, 4});
  s.check("global_layer_norm", {vol, g, beta},
          [=] { return global_layer_norm(vol, g, beta); });
}

void conv_cases(Suite &s) {
  const int64_t d = s.dims().d;
  Tensor x1 = s.rand({2, 19}), w1 = s.rand({d, 2, 4}), b1 = s.rand({d});
  s.check("conv1d", {x1, w1, b1}, [=] { return conv1d(x1, w1, 3, b1); });
  Tensor xt = s.rand({d, 5}), wt = s.rand({d, 2, 4});
  s.check("conv_transpose1d", {xt, wt},
          [=] { return conv_transpose1d(xt, wt, 2); });
  Tensor x2 = s.rand({3, 4, 5}), w2 = s.rand({2, 3, 3, 3}), b2 = s.rand({2});
  s.check("conv2d", {x2, w2, b2}, [=] { return conv2d(x2, w2, 1, b2); });
}

void recurrence_cases(Suite &s) {
  const int64_t d = s.dims().d, h = s.dims().hidden;
  LstmWeights w{s.rand({d, 4 * h}), s.rand({h, 4 * h}), s.rand({4 * h})};
  Tensor x = s.rand({3, d}), h0 = s.rand({3, h}), c0 = s.rand({3, h});
  s.check("lstm_step", {x, h0, c0, w.w_ih, w.w_hh, w.bias}, [=] {
    LstmState st = lstm_step(x, h0, c0, w);
    return concat({st.h, st.c}, 1);
  });
  Tensor xp = s.rand({3, 4 * h});
  s.check("lstm_step_projected", {xp, h0, c0, w.w_hh, w.bias}, [=] {
    LstmState st = lstm_step_projected(xp, h0, c0, w);
    return concat({st.h, st.c}, 1);
  });
  LstmWeights wb{s.rand({d, 4 * h}), s.rand({h, 4 * h}), s.rand({4 * h})};
  BiLstmParams bi{w, wb};
  Tensor seq = s.rand({4, 2, d});
  s.check("bidirectional_lstm",
          {seq, w.w_ih, w.w_hh, w.bias, wb.w_ih, wb.w_hh, wb.bias},
          [=] { return bidirectional_lstm(seq, bi); });
}

void frontend_cases(Suite &s) {
  const int64_t d = s.dims().d, hop = s.dims().hop;
  Tensor feats = s.rand({d, s.dims().frames});
  s.check("segment", {feats}, [=] {
    EncodedRep r;
    r.features = feats;
    return segment(r, hop).chunks;
  });
  const ChunkGeometry g = chunk_geometry(s.dims().frames, hop);
  Tensor chunks = s.rand({d, 2 * hop, g.num_chunks});
  const int64_t frames = s.dims().frames;
  s.check("overlap_add", {chunks}, [=] {
    ChunkedRep c;
    c.chunks = chunks;
    c.hop = hop;
    c.original_frames = frames;
    return overlap_add(c).features;
  });

  CodecParams codec;
  codec.encoder = s.rand({d, 1, 16});
  codec.decoder = s.rand({d, 1, 16});
  codec.stride = 8;
  Tensor wave = s.rand({61});
  s.check("encode", {wave, codec.encoder},
          [=] { return encode(wave, codec).features; });
  s.check("decode", {feats, codec.decoder}, [=] {
    EncodedRep r;
    r.features = feats;
    r.original_samples = 16 + (frames - 1) * 8 - 3;
    return decode_tensor(r, codec);
  });
}

void objective_cases(Suite &s) {
  Tensor est = s.rand({2, 48});
  Tensor ref = uniform_tensor({2, 48}, s.rng(), -1, 1);
  Tensor e0 = select(est, 0).clone_leaf(true);
  Tensor r0 = select(ref, 0).clone_leaf(true);
  s.check("si_snr", {e0, r0}, [=] { return si_snr(e0, r0); }, true);
  s.check("upit_loss", {est}, [=] { return upit_loss(est, ref).loss; }, true);
}

void separator_cases(Suite &s) {
  const Dims &dm = s.dims();
  const ChunkGeometry g = chunk_geometry(dm.frames, dm.hop);
  ModelParams strnn = init_model(config_for(dm, SeparatorKind::kStrnn), 101);
  ModelParams dprnn =
      init_model(config_for(dm, SeparatorKind::kDprnnBaseline), 102);

  Tensor chunks = s.rand({dm.d, 2 * dm.hop, g.num_chunks});
  std::vector<Tensor> in = params_with_prefix(strnn, "encoding.");
  in.push_back(chunks);
  const DualTemporalParams dte = strnn.separator.encoding;
  s.check("dual_temporal_encoding", in,
          [=] { return dual_temporal_branch(chunks, dte); });

  const SandwichParams sw = strnn.separator.strnn[0].inter;
  Tensor seq = s.rand({2, g.num_chunks, dm.d});
  in = params_with_prefix(strnn, "layers.0.inter.");
  in.push_back(seq);
  s.check("sandwich_block", in, [=] { return sandwich_block(seq, sw); });

  const StrnnLayerParams layer = strnn.separator.strnn[0];
  Tensor frames = s.rand({2 * dm.hop, g.num_chunks, dm.d});
  in = params_with_prefix(strnn, "layers.0.");
  in.push_back(frames);
  s.check("strnn_layer", in, [=] { return strnn_layer_frames(frames, layer); });

  const DprnnLayerParams dlayer = dprnn.separator.dprnn[0];
  in = params_with_prefix(dprnn, "layers.0.");
  in.push_back(frames);
  s.check("dprnn_baseline_layer", in,
          [=] { return dprnn_layer_frames(frames, dlayer); });

  Tensor feats = uniform_tensor({dm.d, dm.frames}, s.rng(), 0.0, 1.0, true);
  in = params_with_prefix(strnn, "encoding.");
  for (const char *p : {"layers.", "mask."}) {
    for (Tensor &t : params_with_prefix(strnn, p)) in.push_back(t);
  }
  in.push_back(feats);
  s.check("separate", in, [=] {
    EncodedRep r;
    r.features = feats;
    return separate(r, strnn).masks;
  });
}

void end_to_end_case(Suite &s) {
  const Dims &dm = s.dims();
  ModelParams m = init_model(config_for(dm, SeparatorKind::kStrnn), 103);
  // N samples giving exactly dm.frames encoder frames.
  const int64_t n = m.config.enc_kernel + (dm.frames - 1) * m.config.enc_stride;
  Tensor mixture = s.rand({n});
  Tensor refs = uniform_tensor({2, n}, s.rng(), -1, 1);
  std::vector<Tensor> in = params_with_prefix(m, "");
  in.push_back(mixture);
  s.check("end_to_end_upit", in,
          [=] { return upit_loss(separate_waveform(mixture, m), refs).loss; },
          true);
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck_suite(GradCheckScale scale,
                                                 uint64_t seed) {
  PrecisionScope f64(Precision::kFloat64);
  Suite s(scale, seed);
  elementwise_cases(s);
  shape_cases(s);
  linear_algebra_cases(s);
  conv_cases(s);
  recurrence_cases(s);
  frontend_cases(s);
  objective_cases(s);
  separator_cases(s);
  end_to_end_case(s);
  return s.take();
}

}  // namespace transmask
