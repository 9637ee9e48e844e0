#include "index.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>
#include <thread>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "text.hpp"

namespace qrkit {
namespace {

constexpr char k_magic[8] = {'Q', 'R', 'K', 'I', 'D', 'X', '\0', '\n'};
constexpr std::uint32_t k_snapshot_version = 1;

using PartialPostings = std::unordered_map<std::string, std::vector<Posting>>;

PartialPostings index_range(std::vector<Document>& docs, const Tokenizer& tokenizer,
                            std::size_t begin, std::size_t end) {
  PartialPostings partial;
  std::unordered_map<std::string, std::uint32_t> counts;
  for (std::size_t i = begin; i < end; ++i) {
    auto tokens = tokenizer.tokenize(docs[i].text);
    docs[i].length_tokens = tokens.size();
    counts.clear();
    for (auto& t : tokens) ++counts[std::move(t)];
    for (auto& [term, tf] : counts) {
      partial[term].push_back({static_cast<std::uint32_t>(i), tf});
    }
  }
  return partial;
}

class Writer {
 public:
  explicit Writer(std::string& out) : out_(out) {}
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void str(std::string_view s) {
    u64(s.size());
    out_.append(s);
  }

 private:
  std::string& out_;
};

class Reader {
 public:
  Reader(std::string_view data, std::string source) : data_(data), source_(std::move(source)) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t u32() {
    auto b = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    auto b = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }
  std::string str() {
    auto n = u64();
    return std::string(take(n));
  }
  std::string_view take(std::uint64_t n) {
    if (n > data_.size() - pos_) throw IoError(source_ + ": truncated index snapshot");
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  std::string_view data_;
  std::string source_;
  std::size_t pos_ = 0;
};

double mean_length(const std::vector<Document>& docs) {
  if (docs.empty()) return 0.0;
  double total = 0.0;
  for (const auto& d : docs) total += static_cast<double>(d.length_tokens);
  return total / static_cast<double>(docs.size());
}

}  // namespace

InvertedIndex InvertedIndex::build(std::vector<Document> docs, const TokenizerConfig& config,
                                   unsigned threads) {
  std::sort(docs.begin(), docs.end(),
            [](const Document& a, const Document& b) { return a.doc_id < b.doc_id; });
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (docs[i].doc_id.empty()) throw ValidationError("document with empty doc_id");
    if (i > 0 && docs[i].doc_id == docs[i - 1].doc_id) {
      throw ValidationError("duplicate doc_id '" + docs[i].doc_id + "'");
    }
  }
  if (docs.size() > UINT32_MAX) throw ValidationError("corpus too large for index");

  InvertedIndex index;
  index.tokenizer_ = Tokenizer(config);

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(docs.size() / 64 + 1)));
  std::vector<PartialPostings> partials(threads);
  const std::size_t chunk = (docs.size() + threads - 1) / threads;
  if (threads == 1) {
    partials[0] = index_range(docs, index.tokenizer_, 0, docs.size());
  } else {
    std::vector<std::thread> workers;
    for (unsigned t = 0; t < threads; ++t) {
      std::size_t begin = std::min(docs.size(), t * chunk);
      std::size_t end = std::min(docs.size(), begin + chunk);
      workers.emplace_back([&, t, begin, end] {
        partials[t] = index_range(docs, index.tokenizer_, begin, end);
      });
    }
    for (auto& w : workers) w.join();
  }
  // Partitions cover ascending document ranges, so appending in partition
  // order keeps every posting list sorted.
  for (auto& partial : partials) {
    for (auto& [term, list] : partial) {
      auto& dest = index.postings_[term];
      dest.insert(dest.end(), list.begin(), list.end());
    }
  }
  index.docs_ = std::move(docs);
  index.avg_doc_len_ = mean_length(index.docs_);
  return index;
}

std::optional<std::uint32_t> InvertedIndex::find(std::string_view doc_id) const {
  auto it = std::lower_bound(docs_.begin(), docs_.end(), doc_id,
                             [](const Document& d, std::string_view id) { return d.doc_id < id; });
  if (it == docs_.end() || it->doc_id != doc_id) return std::nullopt;
  return static_cast<std::uint32_t>(it - docs_.begin());
}

const std::vector<Posting>& InvertedIndex::postings(const std::string& term) const {
  static const std::vector<Posting> empty;
  auto it = postings_.find(term);
  return it == postings_.end() ? empty : it->second;
}

std::vector<std::string> InvertedIndex::terms() const {
  std::vector<std::string> out;
  out.reserve(postings_.size());
  for (const auto& [term, _] : postings_) out.push_back(term);
  std::sort(out.begin(), out.end());
  return out;
}

bool InvertedIndex::operator==(const InvertedIndex& other) const {
  return docs_ == other.docs_ && postings_ == other.postings_ &&
         avg_doc_len_ == other.avg_doc_len_ && tokenizer_.config() == other.tokenizer_.config();
}

void InvertedIndex::save(const std::string& path) const {
  std::string out(k_magic, sizeof(k_magic));
  Writer w(out);
  w.u32(k_snapshot_version);
  const auto& cfg = tokenizer_.config();
  w.u8(cfg.lowercase);
  w.u8(cfg.stopwords);
  w.u8(cfg.stemming);
  w.str(cfg.stopword_path);
  w.u64(docs_.size());
  for (const auto& d : docs_) {
    w.str(d.doc_id);
    w.str(d.text);
    w.u64(d.length_tokens);
  }
  auto sorted_terms = terms();
  w.u64(sorted_terms.size());
  for (const auto& term : sorted_terms) {
    const auto& list = postings_.at(term);
    w.str(term);
    w.u64(list.size());
    for (const auto& p : list) {
      w.u32(p.doc);
      w.u32(p.tf);
    }
  }
  text::write_file_atomic(path, out);
}

InvertedIndex InvertedIndex::load(const std::string& path) {
  const std::string data = text::read_file(path);
  if (data.size() < sizeof(k_magic) || std::memcmp(data.data(), k_magic, sizeof(k_magic)) != 0) {
    throw IoError(path + ": not a qrkit index snapshot");
  }
  Reader r(std::string_view(data).substr(sizeof(k_magic)), path);
  auto version = r.u32();
  if (version != k_snapshot_version) {
    throw IoError(path + ": unsupported snapshot version " + std::to_string(version));
  }
  TokenizerConfig cfg;
  cfg.lowercase = r.u8() != 0;
  cfg.stopwords = r.u8() != 0;
  cfg.stemming = r.u8() != 0;
  cfg.stopword_path = r.str();

  InvertedIndex index;
  index.tokenizer_ = Tokenizer(cfg);
  auto ndocs = r.u64();
  for (std::uint64_t i = 0; i < ndocs; ++i) {
    Document d;
    d.doc_id = r.str();
    d.text = r.str();
    d.length_tokens = r.u64();
    if (!index.docs_.empty() && !(index.docs_.back().doc_id < d.doc_id)) {
      throw IoError(path + ": documents not strictly sorted at '" + d.doc_id + "'");
    }
    index.docs_.push_back(std::move(d));
  }
  auto nterms = r.u64();
  for (std::uint64_t i = 0; i < nterms; ++i) {
    auto term = r.str();
    auto n = r.u64();
    std::vector<Posting> list;
    list.reserve(n);
    for (std::uint64_t j = 0; j < n; ++j) {
      Posting p{r.u32(), r.u32()};
      if (p.doc >= ndocs || p.tf == 0 || (!list.empty() && list.back().doc >= p.doc)) {
        throw IoError(path + ": invalid posting for term '" + term + "'");
      }
      list.push_back(p);
    }
    index.postings_.emplace(std::move(term), std::move(list));
  }
  if (!r.at_end()) throw IoError(path + ": trailing bytes in index snapshot");
  index.avg_doc_len_ = mean_length(index.docs_);
  return index;
}

std::vector<Document> parse_corpus_jsonl(std::string_view content, const std::string& source) {
  std::vector<Document> docs;
  std::size_t line_no = 0;
  for (auto line : text::split_lines(content)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto excerpt = std::string(line.substr(0, 80));
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(source, line_no, excerpt, "invalid JSON");
    }
    if (!obj.is_object() || !obj.contains("doc_id") || !obj.contains("text") ||
        !obj["doc_id"].is_string() || !obj["text"].is_string()) {
      throw ParseError(source, line_no, excerpt, "expected string fields \"doc_id\" and \"text\"");
    }
    docs.push_back({obj["doc_id"].get<std::string>(), obj["text"].get<std::string>(), 0});
  }
  return docs;
}

std::vector<Document> read_corpus_jsonl(const std::string& path) {
  return parse_corpus_jsonl(text::read_file(path), path);
}

}  // namespace qrkit
