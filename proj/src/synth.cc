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

#include "docmatch/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "docmatch/errors.h"

namespace docmatch {

namespace {

std::size_t edge_count(const SynthConfig& c) {
  return static_cast<std::size_t>(
      std::llround(c.density * static_cast<double>(c.sentences_per_doc * c.images_per_doc)));
}

std::vector<double> gaussian_vector(std::size_t n, double scale, RngStream& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

std::string doc_id(const std::string& split, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s-%06zu", split.c_str(), i);
  return buf;
}

}  // namespace

void validate_synth_config(const SynthConfig& c) {
  auto fail = [](const std::string& what) { throw ConfigError("synthetic config: " + what); };
  if (!(c.density > 0.0 && c.density <= 1.0)) fail("density must lie in (0, 1]");
  if (c.sentences_per_doc == 0 || c.images_per_doc == 0) fail("documents need sentences and images");
  if (c.train_docs + c.val_docs + c.test_docs == 0) fail("no documents requested");
  const std::size_t edges = edge_count(c);
  if (edges == 0) fail("density yields zero gold edges per document");
  if (edges > std::min(c.sentences_per_doc, c.images_per_doc)) {
    fail("density yields " + std::to_string(edges) +
         " edges per document, more than a one-to-one matching allows");
  }
  if (c.words_per_topic == 0 || c.topics == 0) fail("topics and words_per_topic must be positive");
  if (c.vocab_size <= c.topics * c.words_per_topic) {
    fail("vocab_size must exceed topics * words_per_topic to leave filler tokens");
  }
  const std::size_t needed = c.sentences_per_doc + c.images_per_doc - edges;
  const std::size_t per_theme = c.themes == 0 ? c.topics : c.topics / c.themes;
  if (c.themes > 0 && c.topics % c.themes != 0) fail("topics must be a multiple of themes");
  if (per_theme < needed) {
    fail("each document needs " + std::to_string(needed) + " distinct topics but only " +
         std::to_string(per_theme) + " are available");
  }
  if (c.objects_per_image == 0) fail("objects_per_image must be positive");
  if (c.obj_dim == 0 || c.embed_dim == 0) fail("feature widths must be positive");
  if (c.min_sentence_len == 0 || c.min_sentence_len > c.max_sentence_len) {
    fail("sentence length range is empty");
  }
  if (c.topic_word_prob < 0.0 || c.topic_word_prob > 1.0) fail("topic_word_prob must lie in [0, 1]");
  if (c.sigma < 0.0 || c.theme_spread < 0.0) fail("noise scales must be non-negative");
}

SyntheticDataset generate_synthetic_dataset(const SynthConfig& c, RngStream& rng) {
  validate_synth_config(c);
  SyntheticDataset out;
  RngStream world = rng.derive("world");
  RngStream docs_rng = rng.derive("documents");

  const std::size_t n_topic_tokens = c.topics * c.words_per_topic;
  out.topic_words.resize(c.topics);
  for (std::size_t t = 0; t < c.topics; ++t)
    for (std::size_t j = 0; j < c.words_per_topic; ++j)
      out.topic_words[t].push_back(t * c.words_per_topic + j);

  for (std::size_t t = 0; t < c.topics; ++t)
    for (std::size_t j = 0; j < c.words_per_topic; ++j)
      out.vocabulary["t" + std::to_string(t) + "_w" + std::to_string(j)] = t * c.words_per_topic + j;
  for (std::size_t id = n_topic_tokens; id < c.vocab_size; ++id)
    out.vocabulary["f" + std::to_string(id - n_topic_tokens)] = id;

  // Prototypes and word vectors.
  std::vector<std::vector<double>> obj_centers, text_centers;
  for (std::size_t th = 0; th < c.themes; ++th) {
    obj_centers.push_back(gaussian_vector(c.obj_dim, 1.0, world));
    text_centers.push_back(gaussian_vector(c.embed_dim, 1.0, world));
  }
  out.word_prototypes.assign(c.vocab_size, {});
  for (std::size_t t = 0; t < c.topics; ++t) {
    for (TokenId w : out.topic_words[t]) {
      if (c.themes == 0) {
        out.word_prototypes[w] = gaussian_vector(c.obj_dim, 1.0, world);
        out.embeddings[w] = gaussian_vector(c.embed_dim, 1.0, world);
      } else {
        const std::size_t th = t % c.themes;
        auto p = gaussian_vector(c.obj_dim, c.theme_spread, world);
        for (std::size_t j = 0; j < c.obj_dim; ++j) p[j] += obj_centers[th][j];
        out.word_prototypes[w] = std::move(p);
        auto e = gaussian_vector(c.embed_dim, c.theme_spread, world);
        for (std::size_t j = 0; j < c.embed_dim; ++j) e[j] += text_centers[th][j];
        out.embeddings[w] = std::move(e);
      }
    }
  }
  for (TokenId w = n_topic_tokens; w < c.vocab_size; ++w) {
    out.embeddings[w] = gaussian_vector(c.embed_dim, 1.0, world);
  }

  const std::size_t edges = edge_count(c);
  const std::size_t n = c.sentences_per_doc, m = c.images_per_doc;
  const std::size_t n_fillers = c.vocab_size - n_topic_tokens;

  auto make_sentence = [&](std::size_t topic, RngStream& r) {
    const auto& words = out.topic_words[topic];
    const std::size_t len =
        c.min_sentence_len + r.below(c.max_sentence_len - c.min_sentence_len + 1);
    Sentence s;
    s.push_back(words[r.below(words.size())]);
    while (s.size() < len) {
      if (r.uniform() < c.topic_word_prob) {
        s.push_back(words[r.below(words.size())]);
      } else {
        s.push_back(n_topic_tokens + r.below(n_fillers));
      }
    }
    r.shuffle(s);
    return s;
  };

  auto make_image = [&](std::size_t topic, RngStream& r) {
    const auto& words = out.topic_words[topic];
    ImageRecord img;
    img.obj_dim = c.obj_dim;
    std::vector<TokenId> labels;
    for (std::size_t o = 0; o < c.objects_per_image; ++o) {
      labels.push_back(o < words.size() ? words[o] : words[r.below(words.size())]);
    }
    r.shuffle(labels);
    for (TokenId w : labels) {
      const auto& proto = out.word_prototypes[w];
      for (std::size_t j = 0; j < c.obj_dim; ++j) img.objects.push_back(proto[j] + c.sigma * r.normal());
      img.concepts.push_back({w});
    }
    return img;
  };

  out.corpus.vocab_size = c.vocab_size;
  out.corpus.obj_dim = c.obj_dim;
  const std::pair<const char*, std::size_t> splits[] = {
      {"train", c.train_docs}, {"val", c.val_docs}, {"test", c.test_docs}};
  for (const auto& [split, count] : splits) {
    auto& indices = out.corpus.splits[split];
    for (std::size_t i = 0; i < count; ++i) {
      RngStream r = docs_rng.derive(split, i);
      std::vector<std::size_t> pool;
      if (c.themes == 0) {
        pool.resize(c.topics);
        for (std::size_t t = 0; t < c.topics; ++t) pool[t] = t;
      } else {
        const std::size_t th = r.below(c.themes);
        for (std::size_t t = th; t < c.topics; t += c.themes) pool.push_back(t);
      }
      const auto picks = r.sample_without_replacement(pool.size(), n + m - edges);
      std::vector<std::size_t> sentence_topic_list, image_topic_list;
      for (std::size_t e = 0; e < edges; ++e) {
        sentence_topic_list.push_back(pool[picks[e]]);
        image_topic_list.push_back(pool[picks[e]]);
      }
      for (std::size_t k = 0; k < n - edges; ++k) sentence_topic_list.push_back(pool[picks[edges + k]]);
      for (std::size_t k = 0; k < m - edges; ++k) image_topic_list.push_back(pool[picks[n + k]]);

      // Random placement: slot_of_sentence[k] is where list entry k lands.
      std::vector<std::size_t> slot_of_sentence(n), slot_of_image(m);
      for (std::size_t k = 0; k < n; ++k) slot_of_sentence[k] = k;
      for (std::size_t k = 0; k < m; ++k) slot_of_image[k] = k;
      r.shuffle(slot_of_sentence);
      r.shuffle(slot_of_image);

      Document doc;
      doc.id = doc_id(split, i);
      doc.sentences.resize(n);
      doc.images.resize(m);
      std::vector<std::size_t> s_topics(n), i_topics(m);
      for (std::size_t k = 0; k < n; ++k) {
        s_topics[slot_of_sentence[k]] = sentence_topic_list[k];
      }
      for (std::size_t k = 0; k < m; ++k) {
        i_topics[slot_of_image[k]] = image_topic_list[k];
      }
      for (std::size_t k = 0; k < n; ++k) doc.sentences[k] = make_sentence(s_topics[k], r);
      for (std::size_t k = 0; k < m; ++k) doc.images[k] = make_image(i_topics[k], r);
      std::vector<Edge> gold;
      for (std::size_t e = 0; e < edges; ++e) gold.push_back({slot_of_sentence[e], slot_of_image[e]});
      std::sort(gold.begin(), gold.end());
      doc.gold_edges = std::move(gold);

      indices.push_back(out.corpus.documents.size());
      out.corpus.documents.push_back(std::move(doc));
      out.sentence_topics.push_back(std::move(s_topics));
      out.image_topics.push_back(std::move(i_topics));
    }
  }
  return out;
}

Corpus generate_synthetic(const SynthConfig& config, RngStream& rng) {
  return generate_synthetic_dataset(config, rng).corpus;
}

double mean_edge_density(const Corpus& corpus) {
  double total = 0.0;
  std::size_t counted = 0;
  for (const auto& d : corpus.documents) {
    if (!d.gold_edges) continue;
    total += static_cast<double>(d.gold_edges->size()) /
             static_cast<double>(d.sentences.size() * d.images.size());
    ++counted;
  }
  return counted == 0 ? 0.0 : total / static_cast<double>(counted);
}

}  // namespace docmatch
