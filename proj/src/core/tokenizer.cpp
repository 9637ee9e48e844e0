#include "tokenizer.hpp"

#include "error.hpp"
#include "porter_stemmer.hpp"
#include "resources.hpp"
#include "text.hpp"

namespace qrkit {
namespace {

std::shared_ptr<const std::unordered_set<std::string>> bundled_stopwords() {
  static const auto list = [] {
    auto content = find_bundled_resource("stopwords_en_v1.txt");
    if (!content) throw Error("bundled stopword list missing");
    return std::make_shared<const std::unordered_set<std::string>>(parse_stopword_list(*content));
  }();
  return list;
}

}  // namespace

std::unordered_set<std::string> parse_stopword_list(std::string_view content) {
  std::unordered_set<std::string> words;
  for (auto line : text::split_lines(content)) {
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    words.insert(text::to_lower_ascii(t));
  }
  return words;
}

Tokenizer::Tokenizer(TokenizerConfig config) : config_(std::move(config)) {
  if (!config_.stopwords) return;
  if (config_.stopword_path.empty()) {
    stopwords_ = bundled_stopwords();
  } else {
    stopwords_ = std::make_shared<const std::unordered_set<std::string>>(
        parse_stopword_list(text::read_file(config_.stopword_path)));
  }
}

bool Tokenizer::is_stopword(std::string_view term) const {
  return stopwords_ && stopwords_->count(text::to_lower_ascii(term)) > 0;
}

std::vector<std::string> Tokenizer::tokenize(std::string_view input) const {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  const std::size_t n = input.size();
  while (i < n) {
    while (i < n) {
      auto c = static_cast<unsigned char>(input[i]);
      if (text::is_ascii_alnum(c) || c >= 0x80) break;
      ++i;
    }
    std::size_t start = i;
    while (i < n) {
      auto c = static_cast<unsigned char>(input[i]);
      if (!(text::is_ascii_alnum(c) || c >= 0x80)) break;
      ++i;
    }
    if (i == start) continue;
    std::string token(input.substr(start, i - start));
    if (config_.lowercase) token = text::to_lower_ascii(token);
    if (is_stopword(token)) continue;
    if (config_.stemming) token = porter_stem(token);
    if (!token.empty()) tokens.push_back(std::move(token));
  }
  return tokens;
}

}  // namespace qrkit
