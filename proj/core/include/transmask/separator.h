// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <vector>

#include "transmask/model.h"
#include "transmask/representation.h"

namespace transmask {

// masks[n_speakers, D_enc, L], every entry in (0, 1).
struct MaskSet {
  Tensor masks;

  int64_t speakers() const { return masks.dim(0); }
};

struct LayerOptions {
  // Worker threads for the independent chunks (recurrent stage) and
  // intra-chunk positions (attention stage). Only used while graph
  // recording is off.
  int workers = 1;
  // Drop the inter-chunk stage; used to probe locality.
  bool skip_inter = false;
};

// Pre-residual branch of the dual-temporal encoding: blocks of
// conv2d(k x k, same padding) -> global layer norm -> GELU over chunks[D,2P,S].
Tensor dual_temporal_branch(const Tensor &chunks,
                            const DualTemporalParams &params);
// chunks + dual_temporal_branch(chunks).
ChunkedRep dual_temporal_encoding(const ChunkedRep &chunks,
                                  const DualTemporalParams &params);

// Sandwich-norm transformer block over x[S, D] or a batch x[B, S, D]:
//   y1 = x + MHA(LN(x)); y2 = y1 + FFN(LN(y1)); out = LN(y2).
Tensor sandwich_block(const Tensor &x, const SandwichParams &params);
// Softmax attention weights of the block, [B * n_heads, S, S].
Tensor sandwich_attention_weights(const Tensor &x,
                                  const SandwichParams &params);

// x[T, B, D] -> [T, B, 2H]: forward and backward LSTMs over the leading
// axis, concatenated. Adds T to the sequential-step tally.
Tensor bidirectional_lstm(const Tensor &x, const BiLstmParams &params);

// One STRNN layer on chunks[D, 2P, S]: per-chunk bidirectional recurrence,
// then per-position self-attention across chunks.
ChunkedRep strnn_layer(const ChunkedRep &chunks, const StrnnLayerParams &params,
                       const LayerOptions &options = {});
// DPRNN-style layer: recurrence within chunks, then recurrence across them.
ChunkedRep dprnn_baseline_layer(const ChunkedRep &chunks,
                                const DprnnLayerParams &params,
                                const LayerOptions &options = {});

// Working-layout variants on x[2P, S, D] (intra position, chunk, feature).
Tensor strnn_layer_frames(const Tensor &x, const StrnnLayerParams &params,
                          const LayerOptions &options = {});
Tensor dprnn_layer_frames(const Tensor &x, const DprnnLayerParams &params,
                          const LayerOptions &options = {});

// segment -> [dual-temporal encoding] -> layers -> overlap_add ->
// linear D -> n_speakers * D_enc -> sigmoid.
MaskSet separate(const EncodedRep &rep, const ModelParams &params,
                 int workers = 1);

std::vector<EncodedRep> apply_masks(const EncodedRep &rep,
                                    const MaskSet &masks);

// Longest chain of ordered recurrence steps executed on this thread since
// the last reset.
int64_t sequential_step_tally();
void reset_sequential_step_tally();

}  // namespace transmask
