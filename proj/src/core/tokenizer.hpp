#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace qrkit {

struct TokenizerConfig {
  bool lowercase = true;
  bool stopwords = true;
  bool stemming = false;
  // Empty means the bundled list (stopwords_en_v1.txt).
  std::string stopword_path;

  bool operator==(const TokenizerConfig&) const = default;
};

/// Splits text on runs of characters that are not ASCII letters or digits.
/// Bytes >= 0x80 count as word characters so UTF-8 words stay intact.
class Tokenizer {
 public:
  explicit Tokenizer(TokenizerConfig config = {});

  std::vector<std::string> tokenize(std::string_view text) const;
  const TokenizerConfig& config() const noexcept { return config_; }
  bool is_stopword(std::string_view term) const;

 private:
  TokenizerConfig config_;
  std::shared_ptr<const std::unordered_set<std::string>> stopwords_;
};

// Parses a stopword file: one term per line, '#' comments, blank lines ignored.
std::unordered_set<std::string> parse_stopword_list(std::string_view content);

}  // namespace qrkit
