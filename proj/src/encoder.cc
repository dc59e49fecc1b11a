/* Copyright 2026 The docmatch Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "docmatch/encoder.h"

#include <numeric>

#include "docmatch/errors.h"
#include "docmatch/ops.h"

namespace docmatch {

void validate_model_config(const ModelConfig& c) {
  auto fail = [](const std::string& what) { throw ConfigError("model config: " + what); };
  if (c.d_multi == 0 || c.word_dim == 0 || c.obj_dim == 0) fail("widths must be positive");
  if (c.heads == 0 || c.d_multi % c.heads != 0) {
    fail("d_multi " + std::to_string(c.d_multi) + " is not divisible by " +
         std::to_string(c.heads) + " heads");
  }
  if (c.text_layers == 0 || c.cross_layers == 0) fail("transformer depths must be at least 1");
  if (c.vocab_size == 0) fail("vocab_size must be positive");
  if (c.max_sentence_len == 0) fail("max_sentence_len must be positive");
}

void ModelParams::visit(const ParamVisitor& fn) {
  fn("word_embed", word_embed);
  fn("pos_embed", pos_embed);
  docmatch::visit(word_norm, "word_norm", fn);
  fn("w_text", w_text);
  fn("b_text", b_text);
  for (std::size_t l = 0; l < text_layers.size(); ++l)
    docmatch::visit(text_layers[l], "text_layers." + std::to_string(l), fn);
  fn("w_obj", w_obj);
  fn("b_obj", b_obj);
  fn("seg_embed", seg_embed);
  docmatch::visit(obj_norm, "obj_norm", fn);
  docmatch::visit(obj_seg_norm, "obj_seg_norm", fn);
  docmatch::visit(concept_norm, "concept_norm", fn);
  docmatch::visit(concept_seg_norm, "concept_seg_norm", fn);
  for (std::size_t l = 0; l < cross_layers.size(); ++l)
    docmatch::visit(cross_layers[l], "cross_layers." + std::to_string(l), fn);
}

std::vector<std::pair<std::string, Tensor>> ModelParams::named() const {
  std::vector<std::pair<std::string, Tensor>> out;
  // visit() only hands out handles; the tensors themselves are not modified.
  const_cast<ModelParams*>(this)->visit(
      [&](const std::string& name, Tensor& t) { out.emplace_back(name, t); });
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named()) n += t.numel();
  return n;
}

ModelParams ModelParams::clone() const {
  ModelParams copy = *this;
  copy.visit([](const std::string&, Tensor& t) {
    Tensor fresh = Tensor::parameter(t.shape(), std::vector<double>(t.data().begin(), t.data().end()));
    t = fresh;
  });
  return copy;
}

ModelParams init_params(const ModelConfig& config, RngStream& rng,
                        const PretrainedEmbeddings* pretrained) {
  validate_model_config(config);
  const std::size_t d = config.d_multi;
  auto uniform_table = [&](std::size_t rows, std::size_t cols, RngStream& r) {
    std::vector<double> v(rows * cols);
    for (double& x : v) x = r.uniform(-0.02, 0.02);
    return v;
  };

  ModelParams p;
  RngStream embed_rng = rng.derive("word_embed");
  auto words = uniform_table(config.vocab_size, config.word_dim, embed_rng);
  if (pretrained) {
    for (const auto& [id, vec] : *pretrained) {
      if (vec.size() != config.word_dim) {
        throw ConfigError("pretrained vector for token " + std::to_string(id) + " has width " +
                          std::to_string(vec.size()) + " but word_dim is " +
                          std::to_string(config.word_dim));
      }
      if (id < config.vocab_size) {
        std::copy(vec.begin(), vec.end(), words.begin() + id * config.word_dim);
      }
    }
  }
  p.word_embed = Tensor::parameter({config.vocab_size, config.word_dim}, std::move(words));
  RngStream pos_rng = rng.derive("pos_embed");
  p.pos_embed = Tensor::parameter({config.max_sentence_len, config.word_dim},
                                  uniform_table(config.max_sentence_len, config.word_dim, pos_rng));
  p.word_norm = make_layernorm(config.word_dim);

  RngStream proj_rng = rng.derive("projections");
  p.w_text = make_linear_weight(d, config.word_dim, proj_rng);
  p.b_text = Tensor::parameter({d}, std::vector<double>(d, 0.0));
  p.w_obj = make_linear_weight(d, config.obj_dim, proj_rng);
  p.b_obj = Tensor::parameter({d}, std::vector<double>(d, 0.0));
  RngStream seg_rng = rng.derive("seg_embed");
  p.seg_embed = Tensor::parameter({2, d}, uniform_table(2, d, seg_rng));
  p.obj_norm = make_layernorm(d);
  p.obj_seg_norm = make_layernorm(d);
  p.concept_norm = make_layernorm(d);
  p.concept_seg_norm = make_layernorm(d);

  RngStream text_rng = rng.derive("text_layers");
  for (std::size_t l = 0; l < config.text_layers; ++l)
    p.text_layers.push_back(make_transformer_layer(d, text_rng));
  RngStream cross_rng = rng.derive("cross_layers");
  for (std::size_t l = 0; l < config.cross_layers; ++l)
    p.cross_layers.push_back(make_transformer_layer(d, cross_rng));
  return p;
}

Tensor encode_sentence(const Sentence& tokens, const ModelParams& params, const ModelConfig& config) {
  if (tokens.empty()) throw ConfigError("cannot encode an empty sentence");
  if (tokens.size() > config.max_sentence_len) {
    throw ConfigError("sentence length " + std::to_string(tokens.size()) +
                      " exceeds max_sentence_len " + std::to_string(config.max_sentence_len));
  }
  for (auto t : tokens) {
    if (t >= config.vocab_size) {
      throw ValidationError("token id " + std::to_string(t) + " is outside the vocabulary of " +
                            std::to_string(config.vocab_size));
    }
  }
  std::vector<std::size_t> positions(tokens.size());
  std::iota(positions.begin(), positions.end(), std::size_t{0});
  const Tensor words = gather_rows(params.word_embed, tokens);
  const Tensor pos = gather_rows(params.pos_embed, positions);
  Tensor h = linear(layernorm(add(words, pos), params.word_norm), params.w_text, params.b_text);
  for (const auto& layer : params.text_layers) h = transformer_layer(h, layer, config.heads);
  return mean_rows(h);
}

Tensor encode_image(const ImageRecord& image, const ModelParams& params, const ModelConfig& config) {
  const std::size_t mu = image.object_count();
  if (mu == 0) throw ValidationError("image has no objects");
  if (image.obj_dim != config.obj_dim || image.objects.size() != mu * config.obj_dim) {
    throw DimensionError("object rows have width " + std::to_string(image.obj_dim) +
                         ", model expects " + std::to_string(config.obj_dim));
  }
  const Tensor features({mu, config.obj_dim}, image.objects);
  const std::size_t obj_row[] = {kObjectSegment};
  const std::size_t con_row[] = {kConceptSegment};

  const Tensor f = layernorm(linear(features, params.w_obj, params.b_obj), params.obj_norm);
  const Tensor s_obj = mean_rows(layernorm(gather_rows(params.seg_embed, obj_row), params.obj_seg_norm));
  const Tensor objects = scale(add_row(f, s_obj), 0.5);

  std::vector<Tensor> concept_words;
  concept_words.reserve(mu);
  for (const auto& c : image.concepts) {
    if (c.empty()) throw ValidationError("image has an empty concept");
    for (auto t : c) {
      if (t >= config.vocab_size) {
        throw ValidationError("concept token " + std::to_string(t) +
                              " is outside the vocabulary of " + std::to_string(config.vocab_size));
      }
    }
    concept_words.push_back(mean_rows(gather_rows(params.word_embed, c)));
  }
  const Tensor t = layernorm(linear(stack(concept_words), params.w_text, params.b_text),
                             params.concept_norm);
  const Tensor s_con =
      mean_rows(layernorm(gather_rows(params.seg_embed, con_row), params.concept_seg_norm));
  const Tensor concepts = scale(add_row(t, s_con), 0.5);

  const Tensor parts[] = {objects, concepts};
  Tensor e = concat_rows(parts);
  for (const auto& layer : params.cross_layers) e = transformer_layer(e, layer, config.heads);
  return mean_rows(e);
}

DocumentEncoding encode_document(const Document& doc, const ModelParams& params,
                                 const ModelConfig& config) {
  std::vector<Tensor> s, v;
  s.reserve(doc.sentences.size());
  v.reserve(doc.images.size());
  for (const auto& sentence : doc.sentences) s.push_back(encode_sentence(sentence, params, config));
  for (const auto& image : doc.images) v.push_back(encode_image(image, params, config));
  return {stack(s), stack(v)};
}

Tensor similarity_matrix(const Tensor& sentence_reps, const Tensor& image_reps) {
  return cosine_similarity(sentence_reps, image_reps);
}

}  // namespace docmatch
