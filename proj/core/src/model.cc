// Copyright 2026 TransMask Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "transmask/model.h"

#include <cmath>

#include "transmask/random.h"

namespace transmask {

namespace {

Tensor uniform_param(Shape shape, Rng &rng, double fan_in) {
  const double bound = 1.0 / std::sqrt(fan_in);
  return uniform_tensor(std::move(shape), rng, -bound, bound, true);
}

LinearParams make_linear(int64_t in, int64_t out, Rng &rng) {
  return {uniform_param({in, out}, rng, static_cast<double>(in)),
          uniform_param({out}, rng, static_cast<double>(in))};
}

NormParams make_norm(int64_t d) {
  return {Tensor::full({d}, 1.0, true), Tensor::zeros({d}, true)};
}

LstmWeights make_lstm(int64_t in, int64_t hidden, Rng &rng) {
  const double fan = static_cast<double>(hidden);
  return {uniform_param({in, 4 * hidden}, rng, fan),
          uniform_param({hidden, 4 * hidden}, rng, fan),
          uniform_param({4 * hidden}, rng, fan)};
}

RecurrentBlockParams make_recurrent(const ModelConfig &c, Rng &rng) {
  RecurrentBlockParams p;
  p.rnn.forward = make_lstm(c.d_model, c.lstm_hidden, rng);
  p.rnn.backward = make_lstm(c.d_model, c.lstm_hidden, rng);
  p.proj = make_linear(2 * c.lstm_hidden, c.d_model, rng);
  p.norm = make_norm(c.d_model);
  return p;
}

SandwichParams make_sandwich(const ModelConfig &c, Rng &rng) {
  SandwichParams p;
  p.n_heads = c.n_heads;
  p.attn_norm = make_norm(c.d_model);
  p.query = make_linear(c.d_model, c.d_model, rng);
  p.key = make_linear(c.d_model, c.d_model, rng);
  p.value = make_linear(c.d_model, c.d_model, rng);
  p.out = make_linear(c.d_model, c.d_model, rng);
  p.ffn_norm = make_norm(c.d_model);
  p.ffn_in = make_linear(c.d_model, c.d_ffn, rng);
  p.ffn_out = make_linear(c.d_ffn, c.d_model, rng);
  p.final_norm = make_norm(c.d_model);
  return p;
}

void visit_linear(const std::string &prefix, LinearParams &p,
                  const ParameterVisitor &v) {
  v(prefix + ".weight", p.weight);
  v(prefix + ".bias", p.bias);
}

void visit_norm(const std::string &prefix, NormParams &p,
                const ParameterVisitor &v) {
  v(prefix + ".gain", p.gain);
  v(prefix + ".bias", p.bias);
}

void visit_lstm(const std::string &prefix, LstmWeights &p,
                const ParameterVisitor &v) {
  v(prefix + ".w_ih", p.w_ih);
  v(prefix + ".w_hh", p.w_hh);
  v(prefix + ".bias", p.bias);
}

void visit_recurrent(const std::string &prefix, RecurrentBlockParams &p,
                     const ParameterVisitor &v) {
  visit_lstm(prefix + ".rnn.fwd", p.rnn.forward, v);
  visit_lstm(prefix + ".rnn.bwd", p.rnn.backward, v);
  visit_linear(prefix + ".proj", p.proj, v);
  visit_norm(prefix + ".norm", p.norm, v);
}

void visit_sandwich(const std::string &prefix, SandwichParams &p,
                    const ParameterVisitor &v) {
  visit_norm(prefix + ".attn_norm", p.attn_norm, v);
  visit_linear(prefix + ".query", p.query, v);
  visit_linear(prefix + ".key", p.key, v);
  visit_linear(prefix + ".value", p.value, v);
  visit_linear(prefix + ".out", p.out, v);
  visit_norm(prefix + ".ffn_norm", p.ffn_norm, v);
  visit_linear(prefix + ".ffn_in", p.ffn_in, v);
  visit_linear(prefix + ".ffn_out", p.ffn_out, v);
  visit_norm(prefix + ".final_norm", p.final_norm, v);
}

void zero(Tensor &t) {
  for (double &v : t.mutable_data()) v = 0.0;
}

}  // namespace

void for_each_parameter(ModelParams &params, const ParameterVisitor &visit) {
  visit("codec.encoder", params.codec.encoder);
  visit("codec.decoder", params.codec.decoder);
  SeparatorParams &s = params.separator;
  for (size_t i = 0; i < s.encoding.blocks.size(); ++i) {
    const std::string p = "encoding." + std::to_string(i);
    visit(p + ".conv.weight", s.encoding.blocks[i].weight);
    visit(p + ".conv.bias", s.encoding.blocks[i].bias);
    visit_norm(p + ".norm", s.encoding.blocks[i].norm, visit);
  }
  for (size_t i = 0; i < s.strnn.size(); ++i) {
    const std::string p = "layers." + std::to_string(i);
    visit_recurrent(p + ".intra", s.strnn[i].intra, visit);
    visit_sandwich(p + ".inter", s.strnn[i].inter, visit);
  }
  for (size_t i = 0; i < s.dprnn.size(); ++i) {
    const std::string p = "layers." + std::to_string(i);
    visit_recurrent(p + ".intra", s.dprnn[i].intra, visit);
    visit_recurrent(p + ".inter", s.dprnn[i].inter, visit);
  }
  visit_linear("mask", s.mask, visit);
}

std::vector<std::pair<std::string, Tensor>> named_parameters(
    ModelParams &params) {
  std::vector<std::pair<std::string, Tensor>> out;
  for_each_parameter(params, [&](const std::string &name, Tensor &t) {
    out.emplace_back(name, t);
  });
  return out;
}

int64_t enumerate_parameter_count(ModelParams &params) {
  int64_t n = 0;
  for_each_parameter(params,
                     [&](const std::string &, Tensor &t) { n += t.numel(); });
  return n;
}

ModelParams clone_model(const ModelParams &params) {
  ModelParams out = params;
  for_each_parameter(out, [](const std::string &, Tensor &t) {
    t = t.clone_leaf(t.requires_grad());
  });
  return out;
}

ModelParams init_model(const ModelConfig &config, uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ModelParams m;
  m.config = config;
  const int64_t k = config.enc_kernel;
  m.codec.encoder = uniform_param({config.enc_filters, 1, k}, rng,
                                  static_cast<double>(k));
  m.codec.decoder = uniform_param({config.enc_filters, 1, k}, rng,
                                  static_cast<double>(k));
  m.codec.stride = config.enc_stride;

  SeparatorParams &s = m.separator;
  const int64_t d = config.d_model;
  if (config.separator == SeparatorKind::kStrnn) {
    const int64_t kk = config.dte_kernel;
    for (int64_t b = 0; b < config.dte_blocks; ++b) {
      const double fan = static_cast<double>(d * kk * kk);
      ConvBlockParams blk;
      blk.weight = uniform_param({d, d, kk, kk}, rng, fan);
      blk.bias = uniform_param({d}, rng, fan);
      blk.norm = make_norm(d);
      s.encoding.blocks.push_back(std::move(blk));
    }
    for (int64_t l = 0; l < config.n_layers; ++l) {
      StrnnLayerParams layer;
      layer.intra = make_recurrent(config, rng);
      layer.inter = make_sandwich(config, rng);
      s.strnn.push_back(std::move(layer));
    }
  } else {
    for (int64_t l = 0; l < config.n_layers; ++l) {
      DprnnLayerParams layer;
      layer.intra = make_recurrent(config, rng);
      layer.inter = make_recurrent(config, rng);
      s.dprnn.push_back(std::move(layer));
    }
  }
  s.mask = make_linear(d, config.n_speakers * config.enc_filters, rng);
  return m;
}

int64_t bilstm_parameter_count(int64_t input, int64_t hidden) {
  return 2 * (4 * (hidden * input + hidden * hidden + hidden));
}

int64_t linear_parameter_count(int64_t in, int64_t out) {
  return in * out + out;
}

ParameterCount count_parameters(const ModelConfig &c) {
  c.validate();
  ParameterCount pc;
  auto add = [&](const std::string &name, int64_t n) {
    pc.breakdown.emplace_back(name, n);
    pc.total += n;
  };
  const int64_t d = c.d_model;
  add("codec.encoder", c.enc_filters * c.enc_kernel);
  add("codec.decoder", c.enc_filters * c.enc_kernel);

  const int64_t recurrent = bilstm_parameter_count(d, c.lstm_hidden) +
                            linear_parameter_count(2 * c.lstm_hidden, d) +
                            2 * d;
  if (c.separator == SeparatorKind::kStrnn) {
    const int64_t kk = c.dte_kernel;
    add("encoding", c.dte_blocks * (d * d * kk * kk + d + 2 * d));
    const int64_t sandwich = 4 * linear_parameter_count(d, d) +
                             linear_parameter_count(d, c.d_ffn) +
                             linear_parameter_count(c.d_ffn, d) + 3 * 2 * d;
    add("layers.intra", c.n_layers * recurrent);
    add("layers.inter", c.n_layers * sandwich);
  } else {
    add("layers.intra", c.n_layers * recurrent);
    add("layers.inter", c.n_layers * recurrent);
  }
  add("mask", linear_parameter_count(d, c.n_speakers * c.enc_filters));
  return pc;
}

void zero_output_projections(SeparatorParams &params) {
  auto zero_recurrent = [](RecurrentBlockParams &r) {
    zero(r.proj.weight);
    zero(r.proj.bias);
    zero(r.norm.bias);  // norm of a zero vector is its bias
  };
  for (auto &layer : params.strnn) {
    zero_recurrent(layer.intra);
    zero(layer.inter.out.weight);
    zero(layer.inter.out.bias);
    zero(layer.inter.ffn_out.weight);
    zero(layer.inter.ffn_out.bias);
    zero(layer.inter.final_norm.gain);
    zero(layer.inter.final_norm.bias);
  }
  for (auto &layer : params.dprnn) {
    zero_recurrent(layer.intra);
    zero_recurrent(layer.inter);
  }
}

}  // namespace transmask
