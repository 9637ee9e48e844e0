#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qrkit {

enum class Provider { remote, mock };

struct GeneratorConfig {
  Provider provider = Provider::mock;
  std::string model_name = "mock";
  // Sampling settings: nucleus 0.92, top-k 200, repetition penalty 1.2.
  double top_p = 0.92;
  int top_k = 200;
  double repetition_penalty = 1.2;
  int max_new_tokens = 256;
  double temperature = 1.0;
  std::int64_t seed = 0;

  // Remote transport. Not part of the fingerprint.
  std::string endpoint;
  std::string api_key;  // falls back to $QRW_API_KEY
  bool extended_sampling = false;  // endpoint accepts top_k / repetition_penalty
  int max_in_flight = 4;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double timeout_seconds = 120.0;

  /// Throws ValidationError naming the offending field.
  void validate() const;
  /// Hex SHA-256 over the provider, model and sampling settings.
  std::string fingerprint() const;
};

std::string_view to_string(Provider provider);
Provider parse_provider(std::string_view name);

/// Hex SHA-256 of arbitrary bytes.
std::string sha256_hex(std::string_view data);

class Generator {
 public:
  virtual ~Generator() = default;
  /// Returns the raw generated text for `prompt`.
  virtual std::string complete(const std::string& prompt) = 0;
};

/// Offline stand-in for an LLM. Deterministic in (prompt, seed,
/// max_new_tokens): echoes the content words of the query on the final prompt
/// line (the text after its last ':'), then maps every content word of that
/// line through a seeded hash into the bundled expansion vocabulary. Output
/// is a comma-separated keyword list of at most `max_new_tokens` entries.
std::string mock_complete(const std::string& prompt, std::int64_t seed, int max_new_tokens = 256);
const std::vector<std::string>& mock_vocabulary();

class MockGenerator : public Generator {
 public:
  explicit MockGenerator(GeneratorConfig config) : config_(std::move(config)) {}
  std::string complete(const std::string& prompt) override;

 private:
  GeneratorConfig config_;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

struct TransportResult {
  bool ok = false;
  HttpResponse response;
  std::string error;  // set when !ok
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual TransportResult post(const std::string& url, const std::string& body,
                               const std::vector<std::pair<std::string, std::string>>& headers,
                               double timeout_seconds) = 0;
};

/// cpp-httplib backed transport; supports http:// and https:// URLs.
std::shared_ptr<HttpTransport> make_http_transport();

/// Blocks while `limit` callers are inside.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(int limit) : limit_(limit) {}
  void acquire();
  void release();

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int limit_;
  int active_ = 0;
};

/// Chat-completion client. One POST per call carrying model, messages,
/// temperature, top_p and max_tokens (plus top_k and repetition_penalty when
/// extended_sampling is set); the answer is choices[0].message.content.
/// Transport failures, 429 and 5xx responses are retried with exponential
/// backoff up to max_attempts; other non-2xx statuses fail immediately.
class RemoteGenerator : public Generator {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  RemoteGenerator(GeneratorConfig config, std::shared_ptr<HttpTransport> transport,
                  Sleeper sleeper = {});
  std::string complete(const std::string& prompt) override;

  /// The JSON request body sent for `prompt`.
  std::string request_body(const std::string& prompt) const;

 private:
  GeneratorConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  Sleeper sleeper_;
  InFlightLimiter limiter_;
};

struct GenerationRecord {
  std::string prompt;
  std::string config_fingerprint;
  std::string output;
  std::string timestamp;  // ISO 8601, UTC
  std::string provider;

  bool operator==(const GenerationRecord&) const = default;
};

/// One JSON file per (prompt, fingerprint) key, named by the hex digest of
/// the key. Writes go through a temporary file and a rename.
class GenerationCache {
 public:
  explicit GenerationCache(std::filesystem::path dir);

  std::optional<GenerationRecord> get(const std::string& prompt,
                                      const std::string& fingerprint) const;
  void put(const GenerationRecord& record);

  static std::string key_digest(const std::string& prompt, const std::string& fingerprint);
  std::filesystem::path path_for(const std::string& prompt, const std::string& fingerprint) const;
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::mutex& stripe(const std::string& digest) const;

  std::filesystem::path dir_;
  mutable std::unique_ptr<std::mutex[]> stripes_;
};

/// Consults the cache before delegating and records every fresh output.
class CachingGenerator : public Generator {
 public:
  CachingGenerator(std::shared_ptr<Generator> inner, std::shared_ptr<GenerationCache> cache,
                   GeneratorConfig config);
  std::string complete(const std::string& prompt) override;

 private:
  std::shared_ptr<Generator> inner_;
  std::shared_ptr<GenerationCache> cache_;
  GeneratorConfig config_;
  std::string fingerprint_;
};

/// Builds the provider for `config`, wrapped in a cache when `cache_dir` is
/// non-empty. Validates the config.
std::shared_ptr<Generator> make_generator(const GeneratorConfig& config,
                                          const std::string& cache_dir = {},
                                          std::shared_ptr<HttpTransport> transport = nullptr);

/// Validates the prompt and config, then completes through `generator`.
std::string complete(Generator& generator, const std::string& prompt);

}  // namespace qrkit
