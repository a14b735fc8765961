// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "transmask/codec.h"
#include "transmask/config.h"
#include "transmask/ops.h"

namespace transmask {

struct LinearParams {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]
};

struct NormParams {
  Tensor gain;
  Tensor bias;
};

struct BiLstmParams {
  LstmWeights forward;
  LstmWeights backward;
};

// Bidirectional recurrence, 2H -> D projection, layer norm, residual.
struct RecurrentBlockParams {
  BiLstmParams rnn;
  LinearParams proj;
  NormParams norm;
};

// Pre-norm attention and feed-forward branches plus a terminal norm.
struct SandwichParams {
  int64_t n_heads = 1;
  NormParams attn_norm;
  LinearParams query, key, value, out;
  NormParams ffn_norm;
  LinearParams ffn_in, ffn_out;
  NormParams final_norm;
};

struct StrnnLayerParams {
  RecurrentBlockParams intra;
  SandwichParams inter;
};

struct DprnnLayerParams {
  RecurrentBlockParams intra;
  RecurrentBlockParams inter;
};

struct ConvBlockParams {
  Tensor weight;  // [D, D, k, k]
  Tensor bias;    // [D]
  NormParams norm;  // global layer norm, per-channel affine
};

struct DualTemporalParams {
  std::vector<ConvBlockParams> blocks;
};

struct SeparatorParams {
  DualTemporalParams encoding;           // STRNN only
  std::vector<StrnnLayerParams> strnn;   // one per layer when kind == strnn
  std::vector<DprnnLayerParams> dprnn;   // one per layer for the baseline
  LinearParams mask;                     // D -> n_speakers * D_enc
};

struct ModelParams {
  ModelConfig config;
  CodecParams codec;
  SeparatorParams separator;
};

using ParameterVisitor = std::function<void(const std::string &, Tensor &)>;

// Deterministic traversal in checkpoint order.
void for_each_parameter(ModelParams &params, const ParameterVisitor &visit);
std::vector<std::pair<std::string, Tensor>> named_parameters(
    ModelParams &params);
int64_t enumerate_parameter_count(ModelParams &params);

// Deep copy with fresh leaf tensors.
ModelParams clone_model(const ModelParams &params);

// Uniform(+-1/sqrt(fan_in)) weights, unit gains, zero norm biases.
ModelParams init_model(const ModelConfig &config, uint64_t seed);

struct ParameterCount {
  int64_t total = 0;
  std::vector<std::pair<std::string, int64_t>> breakdown;
};

// Closed-form count from the config alone.
ParameterCount count_parameters(const ModelConfig &config);

int64_t bilstm_parameter_count(int64_t input, int64_t hidden);
int64_t linear_parameter_count(int64_t in, int64_t out);

// Zeroes the last affine map of every residual branch in the separator
// layers: recurrent projections with their norm offsets, and the attention
// output, second feed-forward and terminal norm of each sandwich block.
// Every layer then acts as an exact identity.
void zero_output_projections(SeparatorParams &params);

}  // namespace transmask
