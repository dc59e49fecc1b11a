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

#ifndef DOCMATCH_CORPUS_H_
#define DOCMATCH_CORPUS_H_

#include <compare>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "docmatch/tensor.h"

namespace docmatch {

using TokenId = std::size_t;
using Sentence = std::vector<TokenId>;

// A sentence-image link inside one document.
struct Edge {
  std::size_t sentence = 0;
  std::size_t image = 0;
  auto operator<=>(const Edge&) const = default;
};

// One image: mu object feature rows (row-major, obj_dim wide) with one
// concept token sequence per object.
struct ImageRecord {
  std::size_t obj_dim = 0;
  std::vector<double> objects;
  std::vector<std::vector<TokenId>> concepts;

  std::size_t object_count() const { return concepts.size(); }
  std::span<const double> object(std::size_t i) const {
    return std::span<const double>(objects).subspan(i * obj_dim, obj_dim);
  }
  bool operator==(const ImageRecord&) const = default;
};

struct Document {
  std::string id;
  std::vector<Sentence> sentences;
  std::vector<ImageRecord> images;
  std::optional<std::vector<Edge>> gold_edges;

  bool operator==(const Document&) const = default;
};

struct Corpus {
  std::vector<Document> documents;
  std::size_t vocab_size = 0;
  std::size_t obj_dim = 0;
  // Split name -> document indices. Splits are disjoint and cover all documents.
  std::map<std::string, std::vector<std::size_t>> splits;

  std::vector<const Document*> split(const std::string& name) const;
  bool operator==(const Corpus&) const = default;
};

using WarningSink = std::function<void(const std::string&)>;

struct LoadOptions {
  // Upper bound for token ids; inferred as max id + 1 when absent.
  std::optional<std::size_t> vocab_size;
  // Receives non-fatal findings (e.g. documents without gold edges).
  // Defaults to stderr.
  WarningSink on_warning;
};

// Throws ValidationError naming the document on any invariant violation.
void validate_document(const Document& doc, std::size_t vocab_size, std::size_t obj_dim);
void validate_corpus(const Corpus& corpus);

// JSON Lines, one document per line. All documents land in split "train".
// Malformed lines throw ParseError with the line number; an empty file
// throws ValidationError("no documents").
Corpus load_corpus(const std::string& path, const LoadOptions& options = {});
void save_corpus(const Corpus& corpus, const std::string& path);

// Document <-> single JSONL line (no trailing newline).
std::string document_to_json_line(const Document& doc);
Document document_from_json_line(const std::string& line, std::size_t line_number);

// Directory layout: splits.json manifest plus <split>.jsonl per split.
void save_dataset(const Corpus& corpus, const std::string& dir);
Corpus load_dataset(const std::string& dir, const LoadOptions& options = {});

using SplitManifest = std::map<std::string, std::vector<std::string>>;
SplitManifest load_split_manifest(const std::string& path);
void save_split_manifest(const SplitManifest& manifest, const std::string& path);

using Vocabulary = std::map<std::string, TokenId>;
Vocabulary load_vocabulary(const std::string& path);
void save_vocabulary(const Vocabulary& vocab, const std::string& path);

// Pretrained word vectors keyed by token id.
using PretrainedEmbeddings = std::map<TokenId, std::vector<double>>;
PretrainedEmbeddings load_embeddings(const std::string& path);
void save_embeddings(const PretrainedEmbeddings& embeddings, const std::string& path);

// Mean token embedding per sentence and mean object row per image. These
// fixed features feed the bias diagnostics only.
struct RawViews {
  std::vector<std::vector<double>> sentences;
  std::vector<std::vector<double>> images;
};
// `word_table` is a [vocab, width] embedding matrix.
RawViews raw_feature_views(const Document& doc, const Tensor& word_table);

// [vocab, width] table with covered rows from `embeddings`, zeros elsewhere.
// Throws ConfigError on a vector of the wrong width.
Tensor embedding_table(const PretrainedEmbeddings& embeddings, std::size_t vocab_size,
                       std::size_t width);

}  // namespace docmatch

#endif  // DOCMATCH_CORPUS_H_
