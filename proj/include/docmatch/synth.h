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

#ifndef DOCMATCH_SYNTH_H_
#define DOCMATCH_SYNTH_H_

#include <cstddef>
#include <string>
#include <vector>

#include "docmatch/corpus.h"
#include "docmatch/rng.h"

namespace docmatch {

// Synthetic corpus with known ground truth.
//
// A global pool of latent topics plays the role of semantic clusters. Each
// topic owns `words_per_topic` vocabulary tokens; every such token is an
// object class with its own prototype feature vector. A matched
// (sentence, image) pair shares a topic: the sentence mixes topic words
// with filler tokens, the image's objects are noisy copies of the topic's
// word prototypes and carry those words as concept labels. Distractor
// sentences and images each get a topic that no other item in the
// document uses.
//
// With `themes > 0` topics are grouped into themes whose prototypes sit
// close together (spread `theme_spread` around a theme center) and every
// document draws all of its topics from a single theme. That yields low
// intra-document diversity, the album-like setting. With `themes == 0`
// topics are independent, the random-composition setting.
struct SynthConfig {
  std::size_t train_docs = 500;
  std::size_t val_docs = 100;
  std::size_t test_docs = 100;
  std::size_t sentences_per_doc = 5;
  std::size_t images_per_doc = 5;
  // Gold edges / (sentences * images). Must lie in (0, 1] and yield at most
  // min(sentences, images) edges: each edge is its own topic.
  double density = 0.2;
  std::size_t topics = 12;
  std::size_t words_per_topic = 3;
  std::size_t vocab_size = 50;
  std::size_t obj_dim = 32;
  std::size_t objects_per_image = 36;
  std::size_t min_sentence_len = 4;
  std::size_t max_sentence_len = 8;
  // Probability that a token after the first is a topic word, not filler.
  double topic_word_prob = 0.4;
  // Std-dev of Gaussian noise added to object rows (prototypes are N(0, 1)).
  double sigma = 0.5;
  std::size_t themes = 0;
  double theme_spread = 0.3;
  // Width of the emitted pretrained word vectors.
  std::size_t embed_dim = 16;
};

void validate_synth_config(const SynthConfig& config);

struct SyntheticDataset {
  Corpus corpus;
  Vocabulary vocabulary;
  PretrainedEmbeddings embeddings;
  // Ground truth for oracles and tests.
  std::vector<std::vector<TokenId>> topic_words;          // topic -> tokens
  std::vector<std::vector<double>> word_prototypes;       // token -> obj_dim row (empty for filler)
  std::vector<std::vector<std::size_t>> sentence_topics;  // doc -> topic per sentence
  std::vector<std::vector<std::size_t>> image_topics;     // doc -> topic per image
};

SyntheticDataset generate_synthetic_dataset(const SynthConfig& config, RngStream& rng);
Corpus generate_synthetic(const SynthConfig& config, RngStream& rng);

// Mean of gold-edge count / (n_i * m_i) over documents with gold edges.
double mean_edge_density(const Corpus& corpus);

}  // namespace docmatch

#endif  // DOCMATCH_SYNTH_H_
