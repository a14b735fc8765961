// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "transmask/separator.h"

#include <cmath>

#include "transmask/chunker.h"
#include "transmask/ops.h"
#include "transmask/parallel.h"

namespace transmask {

namespace {

thread_local int64_t t_sequential_steps = 0;

// Runs `fn` over slices of `x` along `axis` on up to `workers` threads and
// concatenates the results along the same axis.
template <typename Fn>
Tensor split_apply(const Tensor &x, int axis, int workers, Fn fn) {
  const int64_t n = x.dim(axis);
  if (workers <= 1 || n < 2 || grad_enabled()) return fn(x);
  std::vector<Tensor> parts(static_cast<size_t>(std::min<int64_t>(workers, n)));
  parallel_ranges(workers, n, [&](int part, int64_t begin, int64_t end) {
    parts[static_cast<size_t>(part)] = fn(narrow(x, axis, begin, end - begin));
  });
  return concat(parts, axis);
}

Tensor run_lstm(const Tensor &x, const LstmWeights &w, bool reverse,
                int64_t *steps) {
  const int64_t t_len = x.dim(0), batch = x.dim(1), d = x.dim(2);
  const int64_t hid = w.hidden_size();
  if (d != w.input_size()) {
    throw DimensionError("lstm input width " + std::to_string(d) +
                         " does not match weights " + shape_str(w.w_ih.shape()));
  }
  Tensor proj = reshape(matmul(reshape(x, {t_len * batch, d}), w.w_ih),
                        {t_len, batch, 4 * hid});
  Tensor h = Tensor::zeros({batch, hid});
  Tensor c = Tensor::zeros({batch, hid});
  std::vector<Tensor> outs(static_cast<size_t>(t_len));
  for (int64_t i = 0; i < t_len; ++i) {
    const int64_t t = reverse ? t_len - 1 - i : i;
    LstmState s = lstm_step_projected(select(proj, t), h, c, w);
    h = s.h;
    c = s.c;
    outs[static_cast<size_t>(t)] = h;
    ++*steps;
  }
  return stack(outs);
}

// x[T, B, D] + LN(proj(BiLSTM(x))), batch split across workers.
Tensor recurrent_block(const Tensor &x, const RecurrentBlockParams &p,
                       int workers) {
  const int64_t t_len = x.dim(0), d = x.dim(2);
  const int64_t h2 = 2 * p.rnn.forward.hidden_size();
  const int64_t before = t_sequential_steps;
  int64_t chain = 0;
  Tensor rnn = split_apply(x, 1, workers, [&](const Tensor &part) {
    // Forward and backward chains are independent, so the longest ordered
    // chain of one call is the forward length.
    int64_t fwd = 0, bwd = 0;
    Tensor out = concat({run_lstm(part, p.rnn.forward, false, &fwd),
                         run_lstm(part, p.rnn.backward, true, &bwd)},
                        2);
    chain = fwd;  // equal for every slice
    return out;
  });
  t_sequential_steps = before + chain;
  const int64_t batch = rnn.dim(1);
  Tensor y = linear(reshape(rnn, {t_len * batch, h2}), p.proj.weight,
                    p.proj.bias);
  y = layer_norm(y, p.norm.gain, p.norm.bias);
  return add(x, reshape(y, {t_len, batch, d}));
}

struct AttentionParts {
  Tensor weights;  // [B*h, S, S]
  Tensor values;   // [B*h, S, dh]
};

AttentionParts attention_parts(const Tensor &normed, int64_t batch,
                               int64_t seq, const SandwichParams &p) {
  const int64_t d = normed.dim(1);
  const int64_t heads = p.n_heads;
  if (d % heads != 0) {
    throw ConfigError("attention width " + std::to_string(d) +
                      " not divisible by " + std::to_string(heads) + " heads");
  }
  const int64_t dh = d / heads;
  auto split_heads = [&](const Tensor &t, const std::vector<int> &perm,
                         Shape out) {
    return reshape(permute(reshape(t, {batch, seq, heads, dh}), perm),
                   std::move(out));
  };
  Tensor q = split_heads(linear(normed, p.query.weight, p.query.bias),
                         {0, 2, 1, 3}, {batch * heads, seq, dh});
  Tensor k_t = split_heads(linear(normed, p.key.weight, p.key.bias),
                           {0, 2, 3, 1}, {batch * heads, dh, seq});
  Tensor v = split_heads(linear(normed, p.value.weight, p.value.bias),
                         {0, 2, 1, 3}, {batch * heads, seq, dh});
  Tensor scores = scale(bmm(q, k_t), 1.0 / std::sqrt(static_cast<double>(dh)));
  return {softmax(scores, -1), v};
}

Tensor as_batch(const Tensor &x) {
  if (x.rank() == 2) return reshape(x, {1, x.dim(0), x.dim(1)});
  if (x.rank() != 3) {
    throw DimensionError("sandwich block expects [S, D] or [B, S, D], got " +
                         shape_str(x.shape()));
  }
  return x;
}

}  // namespace

int64_t sequential_step_tally() { return t_sequential_steps; }
void reset_sequential_step_tally() { t_sequential_steps = 0; }

Tensor bidirectional_lstm(const Tensor &x, const BiLstmParams &params) {
  if (x.rank() != 3) {
    throw DimensionError("bidirectional_lstm expects [T, B, D], got " +
                         shape_str(x.shape()));
  }
  int64_t fwd = 0, bwd = 0;
  Tensor out = concat({run_lstm(x, params.forward, false, &fwd),
                       run_lstm(x, params.backward, true, &bwd)},
                      2);
  t_sequential_steps += fwd;
  return out;
}

Tensor dual_temporal_branch(const Tensor &chunks,
                            const DualTemporalParams &params) {
  if (chunks.rank() != 3) {
    throw DimensionError("dual-temporal encoding expects [D, 2P, S], got " +
                         shape_str(chunks.shape()));
  }
  Tensor z = chunks;
  for (const ConvBlockParams &blk : params.blocks) {
    if (blk.weight.dim(1) != z.dim(0) || blk.weight.dim(0) != z.dim(0)) {
      throw ConfigError("dual-temporal conv " + shape_str(blk.weight.shape()) +
                        " does not map " + std::to_string(z.dim(0)) +
                        " channels to themselves");
    }
    const int64_t padding = blk.weight.dim(2) / 2;
    z = conv2d(z, blk.weight, padding, blk.bias);
    z = gelu(global_layer_norm(z, blk.norm.gain, blk.norm.bias));
  }
  return z;
}

ChunkedRep dual_temporal_encoding(const ChunkedRep &chunks,
                                  const DualTemporalParams &params) {
  return chunks.with_chunks(
      add(chunks.chunks, dual_temporal_branch(chunks.chunks, params)));
}

Tensor sandwich_attention_weights(const Tensor &x,
                                  const SandwichParams &params) {
  Tensor xb = as_batch(x);
  const int64_t batch = xb.dim(0), seq = xb.dim(1), d = xb.dim(2);
  Tensor flat = reshape(xb, {batch * seq, d});
  Tensor normed =
      layer_norm(flat, params.attn_norm.gain, params.attn_norm.bias);
  return attention_parts(normed, batch, seq, params).weights;
}

Tensor sandwich_block(const Tensor &x, const SandwichParams &p) {
  Tensor xb = as_batch(x);
  const int64_t batch = xb.dim(0), seq = xb.dim(1), d = xb.dim(2);
  const int64_t heads = p.n_heads, dh = d / heads;
  Tensor flat = reshape(xb, {batch * seq, d});

  Tensor normed = layer_norm(flat, p.attn_norm.gain, p.attn_norm.bias);
  AttentionParts att = attention_parts(normed, batch, seq, p);
  Tensor ctx = bmm(att.weights, att.values);  // [B*h, S, dh]
  ctx = reshape(permute(reshape(ctx, {batch, heads, seq, dh}), {0, 2, 1, 3}),
                {batch * seq, d});
  Tensor y1 = add(flat, linear(ctx, p.out.weight, p.out.bias));

  Tensor hidden = gelu(linear(layer_norm(y1, p.ffn_norm.gain, p.ffn_norm.bias),
                              p.ffn_in.weight, p.ffn_in.bias));
  Tensor y2 = add(y1, linear(hidden, p.ffn_out.weight, p.ffn_out.bias));
  Tensor out = layer_norm(y2, p.final_norm.gain, p.final_norm.bias);
  return reshape(out, x.shape());
}

Tensor strnn_layer_frames(const Tensor &x, const StrnnLayerParams &params,
                          const LayerOptions &options) {
  if (x.rank() != 3) {
    throw DimensionError("STRNN layer expects [2P, S, D], got " +
                         shape_str(x.shape()));
  }
  // Chunks are the batch axis of the recurrence.
  Tensor y = recurrent_block(x, params.intra, options.workers);
  if (options.skip_inter) return y;
  // Each intra-chunk position attends across chunks independently.
  Tensor attended = split_apply(y, 0, options.workers, [&](const Tensor &part) {
    return sandwich_block(part, params.inter);
  });
  return add(y, attended);
}

Tensor dprnn_layer_frames(const Tensor &x, const DprnnLayerParams &params,
                          const LayerOptions &options) {
  if (x.rank() != 3) {
    throw DimensionError("DPRNN layer expects [2P, S, D], got " +
                         shape_str(x.shape()));
  }
  Tensor y = recurrent_block(x, params.intra, options.workers);
  if (options.skip_inter) return y;
  Tensor across = permute(y, {1, 0, 2});  // [S, 2P, D]
  across = recurrent_block(across, params.inter, options.workers);
  return permute(across, {1, 0, 2});
}

ChunkedRep strnn_layer(const ChunkedRep &chunks, const StrnnLayerParams &params,
                       const LayerOptions &options) {
  Tensor frames = permute(chunks.chunks, {1, 2, 0});
  Tensor out = strnn_layer_frames(frames, params, options);
  return chunks.with_chunks(permute(out, {2, 0, 1}));
}

ChunkedRep dprnn_baseline_layer(const ChunkedRep &chunks,
                                const DprnnLayerParams &params,
                                const LayerOptions &options) {
  Tensor frames = permute(chunks.chunks, {1, 2, 0});
  Tensor out = dprnn_layer_frames(frames, params, options);
  return chunks.with_chunks(permute(out, {2, 0, 1}));
}

MaskSet separate(const EncodedRep &rep, const ModelParams &params,
                 int workers) {
  const ModelConfig &cfg = params.config;
  const SeparatorParams &sep = params.separator;
  if (rep.features.rank() != 2 || rep.channels() != cfg.enc_filters) {
    throw ConfigError("encoded features " + shape_str(rep.features.shape()) +
                      " do not match enc_filters " +
                      std::to_string(cfg.enc_filters));
  }
  const bool strnn = cfg.separator == SeparatorKind::kStrnn;
  const size_t layers = strnn ? sep.strnn.size() : sep.dprnn.size();
  if (static_cast<int64_t>(layers) != cfg.n_layers ||
      sep.mask.weight.dim(1) != cfg.n_speakers * cfg.enc_filters) {
    throw ConfigError("separator parameters do not match the model config");
  }

  ChunkedRep chunks = segment(rep, cfg.chunk_hop);
  if (strnn) chunks = dual_temporal_encoding(chunks, sep.encoding);

  LayerOptions options;
  options.workers = workers;
  Tensor x = permute(chunks.chunks, {1, 2, 0});
  for (size_t l = 0; l < layers; ++l) {
    x = strnn ? strnn_layer_frames(x, sep.strnn[l], options)
              : dprnn_layer_frames(x, sep.dprnn[l], options);
  }
  EncodedRep seq = overlap_add(chunks.with_chunks(permute(x, {2, 0, 1})));

  const int64_t len = seq.frames();
  Tensor logits = linear(transpose(seq.features), sep.mask.weight,
                         sep.mask.bias);  // [L, n * D_enc]
  Tensor m = reshape(sigmoid(logits), {len, cfg.n_speakers, cfg.enc_filters});
  return {permute(m, {1, 2, 0})};
}

std::vector<EncodedRep> apply_masks(const EncodedRep &rep,
                                    const MaskSet &masks) {
  const Tensor &m = masks.masks;
  if (m.rank() != 3 || m.dim(1) != rep.channels() ||
      m.dim(2) != rep.frames()) {
    throw DimensionError("masks " + shape_str(m.shape()) +
                         " do not match features " +
                         shape_str(rep.features.shape()));
  }
  std::vector<EncodedRep> out;
  for (int64_t s = 0; s < m.dim(0); ++s) {
    EncodedRep r = rep;
    r.features = mul(rep.features, select(m, s));
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace transmask
