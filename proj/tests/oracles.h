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

#ifndef DOCMATCH_TESTS_ORACLES_H_
#define DOCMATCH_TESTS_ORACLES_H_

#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "docmatch/evalmetrics.h"
#include "docmatch/synth.h"

namespace docmatch::testing {

// Topic of a sentence from its topic-word tokens (majority vote).
inline std::size_t sentence_topic(const Sentence& s, std::size_t topics, std::size_t words_per_topic) {
  std::map<std::size_t, int> votes;
  for (auto t : s) {
    if (t < topics * words_per_topic) ++votes[t / words_per_topic];
  }
  std::size_t best = 0;
  int best_votes = -1;
  for (const auto& [topic, v] : votes) {
    if (v > best_votes) {
      best = topic;
      best_votes = v;
    }
  }
  return best;
}

// Topic of an image by nearest word prototype of each object row (raw
// features only, concepts ignored), majority over objects.
inline std::size_t image_topic(const ImageRecord& img, const SyntheticDataset& data,
                               std::size_t words_per_topic) {
  std::map<std::size_t, int> votes;
  for (std::size_t o = 0; o < img.object_count(); ++o) {
    const auto row = img.object(o);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_word = 0;
    for (std::size_t w = 0; w < data.word_prototypes.size(); ++w) {
      const auto& p = data.word_prototypes[w];
      if (p.empty()) continue;
      double d = 0.0;
      for (std::size_t j = 0; j < p.size(); ++j) d += (row[j] - p[j]) * (row[j] - p[j]);
      if (d < best) {
        best = d;
        best_word = w;
      }
    }
    ++votes[best_word / words_per_topic];
  }
  std::size_t topic = 0;
  int top = -1;
  for (const auto& [t, v] : votes) {
    if (v > top) {
      topic = t;
      top = v;
    }
  }
  return topic;
}

// Nearest-prototype decoding: a pair scores 1 when the decoded topics agree.
inline ScoreMatrix nearest_prototype_scores(const Document& doc, const SyntheticDataset& data,
                                            const SynthConfig& config) {
  ScoreMatrix m;
  m.rows = doc.sentences.size();
  m.cols = doc.images.size();
  for (const auto& s : doc.sentences) {
    const auto st = sentence_topic(s, config.topics, config.words_per_topic);
    for (const auto& img : doc.images) {
      m.values.push_back(st == image_topic(img, data, config.words_per_topic) ? 1.0 : 0.0);
    }
  }
  return m;
}

}  // namespace docmatch::testing

#endif  // DOCMATCH_TESTS_ORACLES_H_
