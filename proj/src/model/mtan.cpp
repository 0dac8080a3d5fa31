// Copyright 2026 The MTAN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mtan/model/mtan.hpp"

#include <cmath>
#include <fstream>

#include "mtan/common/error.hpp"
#include "mtan/nn/losses.hpp"

namespace mtan::model {

namespace {

std::string conv_name(int i) { return "enc.conv" + std::to_string(i); }
std::string fc_name(std::size_t j) { return "enc.fc" + std::to_string(j); }

void add_affine(ParamStore& store, const std::string& prefix, int fan_in, int fan_out, Rng& rng) {
  store.add(prefix + ".W", nn::glorot_uniform(rng, fan_in, fan_out));
  store.add(prefix + ".b", Tensor(nn::Shape{fan_out}));
}

void add_bn(ParamStore& store, const std::string& prefix, int channels) {
  Tensor ones(nn::Shape{channels});
  ones.mat().setOnes();
  store.add(prefix + ".bn.gamma", ones);
  store.add(prefix + ".bn.beta", Tensor(nn::Shape{channels}));
  store.add(prefix + ".bn.running_mean", Tensor(nn::Shape{channels}), false);
  store.add(prefix + ".bn.running_var", ones, false);
}

VarId bind_param(Tape& tape, ParamStore& store, const std::string& name, Binding binding) {
  nn::Parameter& p = store.at(name);
  return binding == Binding::kTrainable ? tape.param(p) : tape.frozen(p);
}

// affine -> batch norm -> relu, shared by the conv and fc stacks.
VarId hidden_layer(Tape& tape, VarId x, ParamStore& store, const std::string& prefix, Mode mode,
                   Binding binding, bool conv) {
  const VarId w = bind_param(tape, store, prefix + ".W", binding);
  const VarId b = bind_param(tape, store, prefix + ".b", binding);
  const VarId a = conv ? nn::conv1d_1x1(tape, x, w, b) : nn::dense(tape, x, w, b);
  const VarId g = bind_param(tape, store, prefix + ".bn.gamma", binding);
  const VarId s = bind_param(tape, store, prefix + ".bn.beta", binding);
  const VarId n = nn::batchnorm(tape, a, g, s, store.at(prefix + ".bn.running_mean").value,
                                store.at(prefix + ".bn.running_var").value, mode);
  return nn::relu(tape, n);
}

VarId output_layer(Tape& tape, VarId e, ParamStore& store, const std::string& prefix,
                   Binding binding) {
  return nn::dense(tape, e, bind_param(tape, store, prefix + ".W", binding),
                   bind_param(tape, store, prefix + ".b", binding));
}

void check_batch(const MtanParams& params, const Batch& batch) {
  const Tensor& x = batch.x;
  if (x.rank() != 3 || x.dim(2) != params.config.feature_dim) {
    throw Error("batch features must be batch x t x " +
                std::to_string(params.config.feature_dim) + ", got " +
                nn::shape_string(x.shape()));
  }
  const auto n = static_cast<std::size_t>(x.dim(0));
  if (batch.speakers.size() != n || batch.noise.size() != n) {
    throw Error("batch label count does not match batch size");
  }
}

VarId l_var_node(Tape& tape, VarId disc_logits, const Batch& batch, Variant variant) {
  return variant == Variant::kFL ? nn::fl_loss(tape, disc_logits, 0)
                                 : nn::al_loss(tape, disc_logits, batch.noise);
}

}  // namespace

void ModelConfig::validate() const {
  if (num_speakers < 1 || num_noise_classes < 1 || conv_channels < 1 || conv_layers < 1 ||
      feature_dim < 1) {
    throw Error("model config sizes must be positive");
  }
  for (int d : fc_dims) {
    if (d < 1) throw Error("model config fc dims must be positive");
  }
}

std::size_t expected_parameter_count(const ModelConfig& c) {
  const auto affine = [](std::size_t in, std::size_t out) { return in * out + out; };
  std::size_t n = 0;
  std::size_t width = static_cast<std::size_t>(c.feature_dim);
  for (int i = 0; i < c.conv_layers; ++i) {
    n += affine(width, c.conv_channels) + 2 * static_cast<std::size_t>(c.conv_channels);
    width = static_cast<std::size_t>(c.conv_channels);
  }
  for (int d : c.fc_dims) {
    n += affine(width, d) + 2 * static_cast<std::size_t>(d);
    width = static_cast<std::size_t>(d);
  }
  return n + affine(width, c.num_speakers) + affine(width, c.num_noise_classes);
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kNone: return "none";
    case Variant::kFL: return "fl";
    case Variant::kAL: return "al";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  if (name == "none") return Variant::kNone;
  if (name == "fl") return Variant::kFL;
  if (name == "al") return Variant::kAL;
  throw Error("unknown loss variant '" + name + "'");
}

void LossWeights::validate() const {
  if (!std::isfinite(beta) || beta < 0.0) throw Error("beta must be finite and >= 0");
  if (!std::isfinite(gamma) || gamma <= 0.0) throw Error("gamma must be finite and > 0");
}

MtanParams init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  MtanParams p;
  p.config = config;
  Rng rng(derive_seed(seed, "model-init"));
  int width = config.feature_dim;
  for (int i = 0; i < config.conv_layers; ++i) {
    add_affine(p.encoder, conv_name(i), width, config.conv_channels, rng);
    add_bn(p.encoder, conv_name(i), config.conv_channels);
    width = config.conv_channels;
  }
  for (std::size_t j = 0; j < config.fc_dims.size(); ++j) {
    add_affine(p.encoder, fc_name(j), width, config.fc_dims[j], rng);
    add_bn(p.encoder, fc_name(j), config.fc_dims[j]);
    width = config.fc_dims[j];
  }
  add_affine(p.classifier, "cls", width, config.num_speakers, rng);
  add_affine(p.discriminator, "disc", width, config.num_noise_classes, rng);
  return p;
}

VarId encode(Tape& tape, VarId x, MtanParams& params, Mode mode, Binding binding) {
  const ModelConfig& c = params.config;
  const Tensor& xt = tape.value(x);
  if (xt.rank() != 3 || xt.dim(2) != c.feature_dim || xt.dim(1) < 1) {
    throw Error("encode: expected batch x t x " + std::to_string(c.feature_dim) + " input, got " +
                nn::shape_string(xt.shape()));
  }
  VarId h = x;
  for (int i = 0; i < c.conv_layers; ++i) {
    h = hidden_layer(tape, h, params.encoder, conv_name(i), mode, binding, true);
  }
  h = nn::avg_pool_time(tape, h);
  for (std::size_t j = 0; j < c.fc_dims.size(); ++j) {
    h = hidden_layer(tape, h, params.encoder, fc_name(j), mode, binding, false);
  }
  return h;
}

VarId classify(Tape& tape, VarId embeddings, MtanParams& params, Binding binding) {
  return output_layer(tape, embeddings, params.classifier, "cls", binding);
}

VarId discriminate(Tape& tape, VarId embeddings, MtanParams& params, Binding binding) {
  return output_layer(tape, embeddings, params.discriminator, "disc", binding);
}

Matrix embed(MtanParams& params, const Tensor& x) {
  Tape tape;
  const VarId e = encode(tape, tape.constant(x), params, Mode::kInfer, Binding::kFrozen);
  return tape.value(e).mat();
}

ObjectiveResult encoder_objective(MtanParams& params, const Batch& batch,
                                  const LossWeights& weights) {
  check_batch(params, batch);
  weights.validate();
  params.encoder.zero_grad();
  Tape tape;
  const VarId e =
      encode(tape, tape.constant(batch.x), params, Mode::kTrain, Binding::kTrainable);
  const VarId spk = classify(tape, e, params, Binding::kFrozen);
  const VarId noise = discriminate(tape, e, params, Binding::kFrozen);
  const VarId l_c = nn::softmax_cross_entropy(tape, spk, batch.speakers);

  const VarId l_d = nn::softmax_cross_entropy(tape, noise, batch.noise);  // logged only

  ObjectiveResult r;
  r.l_sC = tape.value(l_c).item();
  r.l_sD = tape.value(l_d).item();
  r.spk_accuracy = nn::accuracy(tape.value(spk).mat(), batch.speakers);
  r.disc_accuracy = nn::accuracy(tape.value(noise).mat(), batch.noise);
  VarId objective = l_c;
  if (weights.variant != Variant::kNone) {
    const VarId l_var = l_var_node(tape, noise, batch, weights.variant);
    r.l_var = tape.value(l_var).item();
    if (weights.beta != 0.0) objective = nn::add(tape, l_c, nn::scale(tape, l_var, weights.beta));
  }
  r.value = tape.value(objective).item();
  tape.backward(objective);
  return r;
}

ObjectiveResult discriminator_objective(MtanParams& params, const Batch& batch,
                                        const LossWeights& weights) {
  check_batch(params, batch);
  weights.validate();
  params.discriminator.zero_grad();
  Tape tape;
  const VarId e = encode(tape, tape.constant(batch.x), params, Mode::kTrain, Binding::kFrozen);
  const VarId noise = discriminate(tape, nn::stop_gradient(tape, e), params, Binding::kTrainable);
  const VarId l_d = nn::softmax_cross_entropy(tape, noise, batch.noise);
  const VarId objective = nn::scale(tape, l_d, weights.gamma);
  ObjectiveResult r;
  r.l_sD = tape.value(l_d).item();
  r.disc_accuracy = nn::accuracy(tape.value(noise).mat(), batch.noise);
  r.value = tape.value(objective).item();
  tape.backward(objective);
  return r;
}

ObjectiveResult classifier_objective(MtanParams& params, const Batch& batch) {
  check_batch(params, batch);
  params.classifier.zero_grad();
  Tape tape;
  const VarId e = encode(tape, tape.constant(batch.x), params, Mode::kTrain, Binding::kFrozen);
  const VarId spk = classify(tape, e, params, Binding::kTrainable);
  const VarId l_c = nn::softmax_cross_entropy(tape, spk, batch.speakers);
  ObjectiveResult r;
  r.l_sC = tape.value(l_c).item();
  r.spk_accuracy = nn::accuracy(tape.value(spk).mat(), batch.speakers);
  r.value = r.l_sC;
  tape.backward(l_c);
  return r;
}

ObjectiveResult cd_objectives(MtanParams& params, const Batch& batch,
                              const LossWeights& weights) {
  check_batch(params, batch);
  weights.validate();
  params.classifier.zero_grad();
  params.discriminator.zero_grad();
  Tape tape;
  const VarId e = nn::stop_gradient(
      tape, encode(tape, tape.constant(batch.x), params, Mode::kTrain, Binding::kFrozen));
  const VarId spk = classify(tape, e, params, Binding::kTrainable);
  const VarId noise = discriminate(tape, e, params, Binding::kTrainable);
  const VarId l_c = nn::softmax_cross_entropy(tape, spk, batch.speakers);
  const VarId l_d = nn::softmax_cross_entropy(tape, noise, batch.noise);
  const VarId d_objective = nn::scale(tape, l_d, weights.gamma);

  ObjectiveResult r;
  r.l_sC = tape.value(l_c).item();
  r.l_sD = tape.value(l_d).item();
  r.spk_accuracy = nn::accuracy(tape.value(spk).mat(), batch.speakers);
  r.disc_accuracy = nn::accuracy(tape.value(noise).mat(), batch.noise);
  if (weights.variant != Variant::kNone) {
    Tape probe;
    r.l_var = probe.value(l_var_node(probe, probe.constant(tape.value(noise)), batch,
                                     weights.variant))
                  .item();
  }
  r.value = r.l_sC + tape.value(d_objective).item();
  tape.backward(l_c);
  tape.backward(d_objective);
  return r;
}

double adversarial_value(double l_sD, double l_var, const LossWeights& weights) {
  return weights.gamma * l_sD - weights.beta * l_var;
}

void save_params(nn::Checkpoint& ckpt, const MtanParams& params) {
  const ModelConfig& c = params.config;
  ckpt.put_int("config.num_speakers", c.num_speakers);
  ckpt.put_int("config.num_noise_classes", c.num_noise_classes);
  ckpt.put_int("config.conv_channels", c.conv_channels);
  ckpt.put_int("config.conv_layers", c.conv_layers);
  ckpt.put_int("config.feature_dim", c.feature_dim);
  Tensor dims(nn::Shape{static_cast<std::int64_t>(c.fc_dims.size())});
  for (std::size_t j = 0; j < c.fc_dims.size(); ++j) dims.data()[j] = c.fc_dims[j];
  ckpt.put_tensor("config.fc_dims", dims);
  ckpt.put_params("param/", params.encoder);
  ckpt.put_params("param/", params.classifier);
  ckpt.put_params("param/", params.discriminator);
}

MtanParams load_params(const nn::Checkpoint& ckpt) {
  ModelConfig c;
  c.num_speakers = static_cast<int>(ckpt.get_int("config.num_speakers"));
  c.num_noise_classes = static_cast<int>(ckpt.get_int("config.num_noise_classes"));
  c.conv_channels = static_cast<int>(ckpt.get_int("config.conv_channels"));
  c.conv_layers = static_cast<int>(ckpt.get_int("config.conv_layers"));
  c.feature_dim = static_cast<int>(ckpt.get_int("config.feature_dim"));
  c.fc_dims.clear();
  for (double d : ckpt.get_tensor("config.fc_dims").values()) c.fc_dims.push_back(static_cast<int>(d));
  MtanParams p = init_params(c, 0);
  ckpt.get_params("param/", p.encoder);
  ckpt.get_params("param/", p.classifier);
  ckpt.get_params("param/", p.discriminator);
  return p;
}

void write_model_card(const std::filesystem::path& path, const MtanParams& params,
                      const LossWeights& weights, std::uint64_t seed, const std::string& extra) {
  const ModelConfig& c = params.config;
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write model card " + path.string());
  os << "#mtan-model-card v1\n";
  os << "num_speakers\t" << c.num_speakers << "\n";
  os << "num_noise_classes\t" << c.num_noise_classes << "\n";
  os << "conv_channels\t" << c.conv_channels << "\n";
  os << "conv_layers\t" << c.conv_layers << "\n";
  os << "fc_dims\t";
  for (std::size_t j = 0; j < c.fc_dims.size(); ++j) os << (j ? "," : "") << c.fc_dims[j];
  os << "\nembedding_dim\t" << c.embedding_dim() << "\n";
  os << "feature_dim\t" << c.feature_dim << "\n";
  os << "trainable_parameters\t"
     << params.encoder.trainable_size() + params.classifier.trainable_size() +
            params.discriminator.trainable_size()
     << "\n";
  os.precision(17);
  os << "variant\t" << variant_name(weights.variant) << "\n";
  os << "beta\t" << weights.beta << "\n";
  os << "gamma\t" << weights.gamma << "\n";
  os << "seed\t" << seed << "\n";
  os << extra;
  if (!os) throw Error("write failed for " + path.string());
}

}  // namespace mtan::model
