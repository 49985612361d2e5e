// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sforge/error.hpp"

namespace sforge::retrieval {

/// Lowercased alphanumeric runs; no stemming, so "25ID" stays "25id".
inline std::vector<std::string> normalize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

struct Chunk {
  std::size_t id = 0;
  std::string source_path;  // "<document>#<json path>" or "<document>#p<paragraph>"
  std::string text;
  std::vector<std::string> tokens;
};

enum class DocumentFormat { Json, Text };

struct Document {
  std::string name;
  DocumentFormat format = DocumentFormat::Text;
  std::string content;
};

namespace detail {

template <class Json>
std::string scalar_text(const Json& v) {
  if (v.is_string()) return v.template get<std::string>();
  return v.dump();
}

template <class Json>
bool is_leaf(const Json& v) {
  if (v.is_primitive()) return true;
  if (v.is_array()) return std::all_of(v.begin(), v.end(), [](const auto& e) { return e.is_primitive(); });
  return false;
}

template <class Json>
void walk(const Json& node, const std::string& path, std::vector<std::pair<std::string, std::string>>& out) {
  if (node.is_object()) {
    std::string text;
    for (const auto& [key, value] : node.items()) {
      if (!is_leaf(value)) continue;
      if (!text.empty()) text += '\n';
      text += key + ": ";
      if (value.is_array()) {
        for (std::size_t i = 0; i < value.size(); ++i) text += (i ? ", " : "") + scalar_text(value[i]);
      } else {
        text += scalar_text(value);
      }
    }
    if (!text.empty()) out.emplace_back(path, std::move(text));
    for (const auto& [key, value] : node.items())
      if (!is_leaf(value)) walk(value, path + "." + key, out);
  } else if (node.is_array()) {
    for (std::size_t i = 0; i < node.size(); ++i) {
      if (is_leaf(node[i])) continue;
      walk(node[i], path + "[" + std::to_string(i) + "]", out);
    }
  }
}

}  // namespace detail

/// JSON: one chunk per object carrying at least one scalar (or scalar-list)
/// member, in document order, text = "key: value" lines. A bare scalar
/// document is a single chunk. Text: one chunk per blank-line paragraph.
/// Chunk ids are assigned later by `Corpus`.
inline std::vector<Chunk> chunk_document(const Document& doc) {
  std::vector<Chunk> chunks;
  if (doc.format == DocumentFormat::Json) {
    if (doc.content.find_first_not_of(" \t\r\n") == std::string::npos) return chunks;
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(doc.content);
    } catch (const nlohmann::ordered_json::parse_error& e) {
      throw ParseError(doc.name + ": " + e.what());
    }
    std::vector<std::pair<std::string, std::string>> parts;
    if (j.is_primitive()) {
      if (!j.is_null()) parts.emplace_back("$", detail::scalar_text(j));
    } else {
      detail::walk(j, "$", parts);
    }
    for (auto& [path, text] : parts) chunks.push_back({0, doc.name + "#" + path, text, normalize(text)});
    return chunks;
  }

  std::size_t paragraph = 0;
  std::string current;
  auto flush = [&] {
    auto first = current.find_first_not_of(" \t\r\n");
    if (first != std::string::npos) {
      auto last = current.find_last_not_of(" \t\r\n");
      std::string text = current.substr(first, last - first + 1);
      chunks.push_back({0, doc.name + "#p" + std::to_string(paragraph++), text, normalize(text)});
    }
    current.clear();
  };
  std::size_t pos = 0;
  while (pos <= doc.content.size()) {
    auto nl = doc.content.find('\n', pos);
    std::string_view line(doc.content.data() + pos, (nl == std::string::npos ? doc.content.size() : nl) - pos);
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      flush();
    } else {
      current.append(line);
      current.push_back('\n');
    }
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  flush();
  return chunks;
}

inline constexpr double kBm25K1 = 1.2;
inline constexpr double kBm25B = 0.75;
inline constexpr std::size_t kDefaultTopK = 5;

struct ScoredChunk {
  const Chunk* chunk = nullptr;
  double score = 0.0;
};

/// Immutable chunk collection with BM25 statistics.
class Corpus {
 public:
  Corpus() = default;

  explicit Corpus(std::vector<Chunk> chunks) : chunks_(std::move(chunks)) {
    double total = 0;
    for (std::size_t i = 0; i < chunks_.size(); ++i) {
      chunks_[i].id = i;
      total += static_cast<double>(chunks_[i].tokens.size());
      for (const auto& t : std::set<std::string>(chunks_[i].tokens.begin(), chunks_[i].tokens.end())) ++df_[t];
    }
    avg_len_ = chunks_.empty() ? 0.0 : total / static_cast<double>(chunks_.size());
  }

  static Corpus from_documents(const std::vector<Document>& docs) {
    std::vector<Chunk> all;
    for (const auto& d : docs) {
      auto cs = chunk_document(d);
      all.insert(all.end(), std::make_move_iterator(cs.begin()), std::make_move_iterator(cs.end()));
    }
    return Corpus(std::move(all));
  }

  const std::vector<Chunk>& chunks() const { return chunks_; }
  std::size_t document_frequency(const std::string& term) const {
    auto it = df_.find(term);
    return it == df_.end() ? 0 : it->second;
  }
  double average_length() const { return avg_len_; }

  /// Non-negative idf variant: ln(1 + (N - n + 0.5) / (n + 0.5)).
  double idf(const std::string& term) const {
    const double n = static_cast<double>(document_frequency(term));
    const double N = static_cast<double>(chunks_.size());
    return std::log(1.0 + (N - n + 0.5) / (n + 0.5));
  }

  /// BM25 of one chunk; each distinct query term counts once.
  double score(const Chunk& c, const std::vector<std::string>& query_terms) const {
    if (avg_len_ == 0.0) return 0.0;
    const double len = static_cast<double>(c.tokens.size());
    double s = 0.0;
    for (const auto& term : std::set<std::string>(query_terms.begin(), query_terms.end())) {
      const auto tf = static_cast<double>(std::count(c.tokens.begin(), c.tokens.end(), term));
      if (tf == 0.0) continue;
      s += idf(term) * tf * (kBm25K1 + 1.0) / (tf + kBm25K1 * (1.0 - kBm25B + kBm25B * len / avg_len_));
    }
    return s;
  }

 private:
  std::vector<Chunk> chunks_;
  std::map<std::string, std::size_t> df_;
  double avg_len_ = 0.0;
};

/// Descending BM25 score, ties by ascending chunk id.
inline std::vector<ScoredChunk> retrieve_top_k(const Corpus& corpus, std::string_view query, std::size_t k) {
  if (k < 1) throw PreconditionError("k must be at least 1");
  const auto terms = normalize(query);
  std::vector<ScoredChunk> scored;
  scored.reserve(corpus.chunks().size());
  for (const auto& c : corpus.chunks()) scored.push_back({&c, corpus.score(c, terms)});
  std::stable_sort(scored.begin(), scored.end(), [](const ScoredChunk& a, const ScoredChunk& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.chunk->id < b.chunk->id;
  });
  if (scored.size() > k) scored.resize(k);
  return scored;
}

}  // namespace sforge::retrieval
