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

#include "docmatch/corpus.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "docmatch/errors.h"

namespace docmatch {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::ifstream open_for_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");
  return in;
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

void finish_write(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write to " + path + " failed");
}

const json& field(const json& obj, const char* name, std::size_t line) {
  if (!obj.is_object()) throw ParseError("expected a JSON object", line);
  auto it = obj.find(name);
  if (it == obj.end()) throw ParseError(std::string("missing field \"") + name + "\"", line);
  return *it;
}

std::size_t as_index(const json& v, std::size_t line) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ParseError("expected a non-negative integer, got " + v.dump(), line);
  }
  return v.get<std::size_t>();
}

std::vector<std::size_t> as_index_list(const json& v, std::size_t line) {
  if (!v.is_array()) throw ParseError("expected an array of integers", line);
  std::vector<std::size_t> out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back(as_index(x, line));
  return out;
}

double as_double(const json& v, std::size_t line) {
  if (!v.is_number()) throw ParseError("expected a number, got " + v.dump(), line);
  return v.get<double>();
}

}  // namespace

std::vector<const Document*> Corpus::split(const std::string& name) const {
  auto it = splits.find(name);
  if (it == splits.end()) throw ValidationError("corpus has no split \"" + name + "\"");
  std::vector<const Document*> out;
  out.reserve(it->second.size());
  for (auto i : it->second) out.push_back(&documents.at(i));
  return out;
}

void validate_document(const Document& doc, std::size_t vocab_size, std::size_t obj_dim) {
  auto fail = [&](const std::string& what) {
    throw ValidationError("document \"" + doc.id + "\": " + what);
  };
  if (doc.sentences.empty()) fail("no sentences");
  if (doc.images.empty()) fail("no images");
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    if (doc.sentences[s].empty()) fail("sentence " + std::to_string(s) + " is empty");
    for (auto t : doc.sentences[s]) {
      if (t >= vocab_size) {
        fail("token id " + std::to_string(t) + " exceeds vocabulary size " +
             std::to_string(vocab_size));
      }
    }
  }
  for (std::size_t i = 0; i < doc.images.size(); ++i) {
    const auto& img = doc.images[i];
    const std::string where = "image " + std::to_string(i);
    if (img.object_count() == 0) fail(where + " has no objects");
    if (img.obj_dim != obj_dim) {
      fail(where + " has object width " + std::to_string(img.obj_dim) + ", corpus uses " +
           std::to_string(obj_dim));
    }
    if (img.objects.size() != img.object_count() * img.obj_dim) {
      fail(where + ": object rows and concept entries differ in count");
    }
    for (const auto& concept_tokens : img.concepts) {
      if (concept_tokens.empty()) fail(where + " has an empty concept");
      for (auto t : concept_tokens) {
        if (t >= vocab_size) {
          fail(where + " concept token " + std::to_string(t) + " exceeds vocabulary size " +
               std::to_string(vocab_size));
        }
      }
    }
  }
  if (doc.gold_edges) {
    std::set<Edge> seen;
    for (const auto& e : *doc.gold_edges) {
      if (e.sentence >= doc.sentences.size() || e.image >= doc.images.size()) {
        fail("gold edge (" + std::to_string(e.sentence) + "," + std::to_string(e.image) +
             ") is out of range");
      }
      if (!seen.insert(e).second) {
        fail("duplicate gold edge (" + std::to_string(e.sentence) + "," +
             std::to_string(e.image) + ")");
      }
    }
  }
}

void validate_corpus(const Corpus& corpus) {
  if (corpus.documents.empty()) throw ValidationError("no documents");
  std::set<std::string> ids;
  for (const auto& doc : corpus.documents) {
    validate_document(doc, corpus.vocab_size, corpus.obj_dim);
    if (!ids.insert(doc.id).second) throw ValidationError("duplicate document id \"" + doc.id + "\"");
  }
  std::vector<int> covered(corpus.documents.size(), 0);
  for (const auto& [name, indices] : corpus.splits) {
    for (auto i : indices) {
      if (i >= covered.size()) throw ValidationError("split \"" + name + "\" indexes past the corpus");
      if (covered[i]++) {
        throw ValidationError("document \"" + corpus.documents[i].id +
                              "\" appears in more than one split");
      }
    }
  }
  for (std::size_t i = 0; i < covered.size(); ++i) {
    if (!covered[i]) {
      throw ValidationError("document \"" + corpus.documents[i].id + "\" is in no split");
    }
  }
}

std::string document_to_json_line(const Document& doc) {
  json j;
  j["id"] = doc.id;
  json sentences = json::array();
  for (const auto& s : doc.sentences) {
    json entry;
    entry["tokens"] = s;
    sentences.push_back(std::move(entry));
  }
  j["sentences"] = std::move(sentences);
  json images = json::array();
  for (const auto& img : doc.images) {
    json objects = json::array();
    for (std::size_t o = 0; o < img.object_count(); ++o) {
      auto row = img.object(o);
      objects.push_back(std::vector<double>(row.begin(), row.end()));
    }
    json entry;
    entry["objects"] = std::move(objects);
    entry["concepts"] = img.concepts;
    images.push_back(std::move(entry));
  }
  j["images"] = std::move(images);
  if (doc.gold_edges) {
    json edges = json::array();
    for (const auto& e : *doc.gold_edges) edges.push_back({e.sentence, e.image});
    j["gold_edges"] = std::move(edges);
  }
  return j.dump();
}

Document document_from_json_line(const std::string& line, std::size_t line_number) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), line_number);
  }
  Document doc;
  const auto& id = field(j, "id", line_number);
  if (!id.is_string()) throw ParseError("\"id\" must be a string", line_number);
  doc.id = id.get<std::string>();

  const auto& sentences = field(j, "sentences", line_number);
  if (!sentences.is_array()) throw ParseError("\"sentences\" must be an array", line_number);
  for (const auto& s : sentences) {
    doc.sentences.push_back(as_index_list(field(s, "tokens", line_number), line_number));
  }

  const auto& images = field(j, "images", line_number);
  if (!images.is_array()) throw ParseError("\"images\" must be an array", line_number);
  for (const auto& im : images) {
    ImageRecord img;
    const auto& objects = field(im, "objects", line_number);
    if (!objects.is_array()) throw ParseError("\"objects\" must be an array", line_number);
    for (const auto& row : objects) {
      if (!row.is_array()) throw ParseError("object rows must be arrays", line_number);
      if (img.objects.empty() && img.obj_dim == 0) img.obj_dim = row.size();
      if (row.size() != img.obj_dim) {
        throw ParseError("object rows of one image differ in width", line_number);
      }
      for (const auto& v : row) img.objects.push_back(as_double(v, line_number));
    }
    const auto& concepts = field(im, "concepts", line_number);
    if (!concepts.is_array()) throw ParseError("\"concepts\" must be an array", line_number);
    for (const auto& c : concepts) img.concepts.push_back(as_index_list(c, line_number));
    if (img.concepts.size() != objects.size()) {
      throw ValidationError("document \"" + doc.id +
                            "\": object rows and concept entries differ in count");
    }
    doc.images.push_back(std::move(img));
  }

  if (auto it = j.find("gold_edges"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw ParseError("\"gold_edges\" must be an array", line_number);
    std::vector<Edge> edges;
    for (const auto& e : *it) {
      if (!e.is_array() || e.size() != 2) {
        throw ParseError("gold edges must be [sentence, image] pairs", line_number);
      }
      edges.push_back({as_index(e[0], line_number), as_index(e[1], line_number)});
    }
    doc.gold_edges = std::move(edges);
  }
  return doc;
}

namespace {

std::vector<Document> read_documents(const std::string& path) {
  auto in = open_for_read(path);
  std::vector<Document> docs;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    docs.push_back(document_from_json_line(line, line_number));
  }
  return docs;
}

void finalize(Corpus& corpus, const LoadOptions& options) {
  if (corpus.documents.empty()) throw ValidationError("no documents");
  for (const auto& d : corpus.documents) {
    if (!d.images.empty()) {
      corpus.obj_dim = d.images.front().obj_dim;
      break;
    }
  }
  if (options.vocab_size) {
    corpus.vocab_size = *options.vocab_size;
  } else {
    TokenId max_id = 0;
    for (const auto& d : corpus.documents) {
      for (const auto& s : d.sentences)
        for (auto t : s) max_id = std::max(max_id, t);
      for (const auto& im : d.images)
        for (const auto& c : im.concepts)
          for (auto t : c) max_id = std::max(max_id, t);
    }
    corpus.vocab_size = max_id + 1;
  }
  validate_corpus(corpus);
  const WarningSink warn = options.on_warning
                               ? options.on_warning
                               : [](const std::string& m) { std::cerr << "warning: " << m << '\n'; };
  std::size_t missing = 0;
  std::string first;
  for (const auto& d : corpus.documents) {
    if (!d.gold_edges) {
      if (missing++ == 0) first = d.id;
    }
  }
  if (missing) {
    warn(std::to_string(missing) + " document(s) have no gold edges (first: \"" + first +
         "\"); they can be trained on but not evaluated");
  }
}

}  // namespace

Corpus load_corpus(const std::string& path, const LoadOptions& options) {
  Corpus corpus;
  corpus.documents = read_documents(path);
  auto& train = corpus.splits["train"];
  for (std::size_t i = 0; i < corpus.documents.size(); ++i) train.push_back(i);
  finalize(corpus, options);
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  auto out = open_for_write(path);
  for (const auto& d : corpus.documents) out << document_to_json_line(d) << '\n';
  finish_write(out, path);
}

SplitManifest load_split_manifest(const std::string& path) {
  auto in = open_for_read(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError(path + ": split manifest must be an object");
  SplitManifest manifest;
  for (const auto& [name, ids] : j.items()) {
    if (!ids.is_array()) throw ParseError(path + ": split \"" + name + "\" must be an array");
    auto& list = manifest[name];
    for (const auto& id : ids) {
      if (!id.is_string()) throw ParseError(path + ": document ids must be strings");
      list.push_back(id.get<std::string>());
    }
  }
  return manifest;
}

void save_split_manifest(const SplitManifest& manifest, const std::string& path) {
  json j = json::object();
  for (const char* name : {"train", "val", "test"}) {
    if (auto it = manifest.find(name); it != manifest.end()) j[name] = it->second;
  }
  for (const auto& [name, ids] : manifest) {
    if (!j.contains(name)) j[name] = ids;
  }
  auto out = open_for_write(path);
  out << j.dump(2) << '\n';
  finish_write(out, path);
}

void save_dataset(const Corpus& corpus, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
  SplitManifest manifest;
  for (const auto& [name, indices] : corpus.splits) {
    const std::string path = (fs::path(dir) / (name + ".jsonl")).string();
    auto out = open_for_write(path);
    auto& ids = manifest[name];
    for (auto i : indices) {
      out << document_to_json_line(corpus.documents[i]) << '\n';
      ids.push_back(corpus.documents[i].id);
    }
    finish_write(out, path);
  }
  save_split_manifest(manifest, (fs::path(dir) / "splits.json").string());
}

Corpus load_dataset(const std::string& dir, const LoadOptions& options) {
  const auto manifest = load_split_manifest((fs::path(dir) / "splits.json").string());
  Corpus corpus;
  for (const auto& [name, ids] : manifest) {
    auto docs = read_documents((fs::path(dir) / (name + ".jsonl")).string());
    if (docs.size() != ids.size()) {
      throw ValidationError("split \"" + name + "\": manifest lists " + std::to_string(ids.size()) +
                            " documents, file holds " + std::to_string(docs.size()));
    }
    auto& indices = corpus.splits[name];
    for (std::size_t i = 0; i < docs.size(); ++i) {
      if (docs[i].id != ids[i]) {
        throw ValidationError("split \"" + name + "\": document \"" + docs[i].id +
                              "\" does not match manifest entry \"" + ids[i] + "\"");
      }
      indices.push_back(corpus.documents.size());
      corpus.documents.push_back(std::move(docs[i]));
    }
  }
  finalize(corpus, options);
  return corpus;
}

Vocabulary load_vocabulary(const std::string& path) {
  auto in = open_for_read(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError(path + ": vocabulary must be an object");
  Vocabulary vocab;
  for (const auto& [token, id] : j.items()) vocab[token] = as_index(id, 0);
  return vocab;
}

void save_vocabulary(const Vocabulary& vocab, const std::string& path) {
  // Written in id order so the file reads like a token list.
  std::vector<std::pair<TokenId, std::string>> by_id;
  for (const auto& [token, id] : vocab) by_id.emplace_back(id, token);
  std::sort(by_id.begin(), by_id.end());
  json j = json::object();
  for (const auto& [id, token] : by_id) j[token] = id;
  auto out = open_for_write(path);
  out << j.dump(1) << '\n';
  finish_write(out, path);
}

PretrainedEmbeddings load_embeddings(const std::string& path) {
  auto in = open_for_read(path);
  PretrainedEmbeddings table;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line_number);
    }
    const auto id = as_index(field(j, "id", line_number), line_number);
    const auto& vec = field(j, "vec", line_number);
    if (!vec.is_array()) throw ParseError("\"vec\" must be an array", line_number);
    std::vector<double> v;
    for (const auto& x : vec) v.push_back(as_double(x, line_number));
    table[id] = std::move(v);
  }
  return table;
}

void save_embeddings(const PretrainedEmbeddings& embeddings, const std::string& path) {
  auto out = open_for_write(path);
  for (const auto& [id, vec] : embeddings) {
    json j;
    j["id"] = id;
    j["vec"] = vec;
    out << j.dump() << '\n';
  }
  finish_write(out, path);
}

RawViews raw_feature_views(const Document& doc, const Tensor& word_table) {
  if (word_table.rank() != 2) {
    throw DimensionError("word table must be a matrix, got " + shape_string(word_table.shape()));
  }
  const std::size_t vocab = word_table.dim(0), width = word_table.dim(1);
  const auto table = word_table.data();
  RawViews views;
  for (const auto& s : doc.sentences) {
    std::vector<double> v(width, 0.0);
    for (auto t : s) {
      if (t >= vocab) {
        throw ValidationError("document \"" + doc.id + "\": token id " + std::to_string(t) +
                              " outside the embedding table");
      }
      for (std::size_t j = 0; j < width; ++j) v[j] += table[t * width + j];
    }
    for (double& x : v) x /= static_cast<double>(s.size());
    views.sentences.push_back(std::move(v));
  }
  for (const auto& img : doc.images) {
    std::vector<double> v(img.obj_dim, 0.0);
    for (std::size_t o = 0; o < img.object_count(); ++o) {
      auto row = img.object(o);
      for (std::size_t j = 0; j < img.obj_dim; ++j) v[j] += row[j];
    }
    for (double& x : v) x /= static_cast<double>(img.object_count());
    views.images.push_back(std::move(v));
  }
  return views;
}

Tensor embedding_table(const PretrainedEmbeddings& embeddings, std::size_t vocab_size,
                       std::size_t width) {
  std::vector<double> rows(vocab_size * width, 0.0);
  for (const auto& [id, vec] : embeddings) {
    if (vec.size() != width) {
      throw ConfigError("pretrained vector for token " + std::to_string(id) + " has width " +
                        std::to_string(vec.size()) + ", expected " + std::to_string(width));
    }
    if (id >= vocab_size) continue;
    std::copy(vec.begin(), vec.end(), rows.begin() + id * width);
  }
  return Tensor({vocab_size, width}, std::move(rows));
}

}  // namespace docmatch
