#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tokenizer.hpp"

namespace qrkit {

struct Document {
  std::string doc_id;
  std::string text;
  std::size_t length_tokens = 0;

  bool operator==(const Document&) const = default;
};

struct Posting {
  std::uint32_t doc = 0;  // position in InvertedIndex::documents()
  std::uint32_t tf = 0;

  bool operator==(const Posting&) const = default;
};

/// Immutable in-memory inverted index. Documents are stored sorted by doc_id,
/// so posting lists (ordered by document position) are sorted by doc_id too
/// and the index is independent of ingestion order.
class InvertedIndex {
 public:
  InvertedIndex() = default;

  /// Throws ValidationError naming the first duplicate or empty doc_id.
  /// `threads` > 1 tokenizes contiguous partitions concurrently and merges
  /// the partial posting lists.
  static InvertedIndex build(std::vector<Document> docs, const TokenizerConfig& config = {},
                             unsigned threads = 1);

  std::size_t doc_count() const noexcept { return docs_.size(); }
  double avg_doc_len() const noexcept { return avg_doc_len_; }
  std::size_t term_count() const noexcept { return postings_.size(); }

  const std::vector<Document>& documents() const noexcept { return docs_; }
  std::optional<std::uint32_t> find(std::string_view doc_id) const;
  const Document& document(std::uint32_t pos) const { return docs_.at(pos); }

  /// Empty span when the term is not indexed.
  const std::vector<Posting>& postings(const std::string& term) const;
  std::size_t doc_freq(const std::string& term) const { return postings(term).size(); }

  /// Terms in ascending byte order.
  std::vector<std::string> terms() const;

  const Tokenizer& tokenizer() const noexcept { return tokenizer_; }

  void save(const std::string& path) const;
  static InvertedIndex load(const std::string& path);

  bool operator==(const InvertedIndex& other) const;

 private:
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  double avg_doc_len_ = 0.0;
  Tokenizer tokenizer_;
};

/// Reads a JSON-lines corpus: one object per line with string fields
/// "doc_id" and "text". Blank lines are skipped.
std::vector<Document> read_corpus_jsonl(const std::string& path);
std::vector<Document> parse_corpus_jsonl(std::string_view content, const std::string& source);

}  // namespace qrkit
