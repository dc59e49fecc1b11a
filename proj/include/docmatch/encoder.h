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

#ifndef DOCMATCH_ENCODER_H_
#define DOCMATCH_ENCODER_H_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "docmatch/corpus.h"
#include "docmatch/layers.h"
#include "docmatch/rng.h"
#include "docmatch/tensor.h"

namespace docmatch {

struct ModelConfig {
  std::size_t d_multi = 1024;
  std::size_t text_layers = 3;   // single-modality transformer depth
  std::size_t cross_layers = 3;  // cross-modality transformer depth
  std::size_t heads = 8;
  std::size_t word_dim = 300;
  std::size_t obj_dim = 2048;
  std::size_t vocab_size = 0;
  std::size_t max_sentence_len = 64;

  bool operator==(const ModelConfig&) const = default;
};

void validate_model_config(const ModelConfig& config);

// All learnable weights of the sentence and image encoders.
//
// There is a single word-embedding table, read by both sentence words and
// image concepts, and a single (w_text, b_text) projection used for both
// sentence tokens and concept embeddings.
struct ModelParams {
  Tensor word_embed;  // [vocab, word_dim]
  Tensor pos_embed;   // [max_sentence_len, word_dim]
  LayerNormParams word_norm;  // on word + position embedding
  Tensor w_text, b_text;      // [d_multi, word_dim], [d_multi]
  std::vector<TransformerLayerParams> text_layers;

  Tensor w_obj, b_obj;  // [d_multi, obj_dim], [d_multi]
  Tensor seg_embed;     // [2, d_multi]; row 0 objects, row 1 concepts
  LayerNormParams obj_norm;
  LayerNormParams obj_seg_norm;
  LayerNormParams concept_norm;
  LayerNormParams concept_seg_norm;
  std::vector<TransformerLayerParams> cross_layers;

  // Every parameter with a stable name, in a fixed order.
  void visit(const ParamVisitor& fn);
  std::vector<std::pair<std::string, Tensor>> named() const;
  std::size_t parameter_count() const;
  ModelParams clone() const;
};

inline constexpr std::size_t kObjectSegment = 0;
inline constexpr std::size_t kConceptSegment = 1;

// Position and word embeddings ~ Uniform(-0.02, 0.02); rows covered by
// `pretrained` are copied verbatim. Projection and transformer weights use
// Uniform(+-1/sqrt(fan_in)), biases 0, layer-norm gains 1. Deterministic in
// the rng seed. Throws ConfigError when pretrained widths differ from
// word_dim.
ModelParams init_params(const ModelConfig& config, RngStream& rng,
                        const PretrainedEmbeddings* pretrained = nullptr);

// [d_multi] representation of one tokenized sentence. Throws
// ValidationError for an out-of-vocabulary token and ConfigError for an
// empty or over-long sentence.
Tensor encode_sentence(const Sentence& tokens, const ModelParams& params, const ModelConfig& config);

// [d_multi] representation of one image from its objects and concepts.
Tensor encode_image(const ImageRecord& image, const ModelParams& params, const ModelConfig& config);

struct DocumentEncoding {
  Tensor sentences;  // [|S|, d_multi]
  Tensor images;     // [|V|, d_multi]
};
DocumentEncoding encode_document(const Document& doc, const ModelParams& params,
                                 const ModelConfig& config);

// |S| x |V| cosine-similarity matrix. Throws NumericError on a zero-norm
// representation.
Tensor similarity_matrix(const Tensor& sentence_reps, const Tensor& image_reps);

}  // namespace docmatch

#endif  // DOCMATCH_ENCODER_H_
