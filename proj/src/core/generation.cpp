#include "generation.hpp"

#include <array>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <sstream>
#include <thread>
#include <unordered_set>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "diag.hpp"
#include "error.hpp"
#include "resources.hpp"
#include "text.hpp"
#include "tokenizer.hpp"

namespace qrkit {
namespace {

using nlohmann::json;

constexpr std::size_t k_cache_stripes = 64;

std::uint64_t fnv1a(std::uint64_t h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string utc_timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string excerpt(const std::string& body) {
  return body.size() > 200 ? body.substr(0, 200) + "..." : body;
}

class HttplibTransport : public HttpTransport {
 public:
  TransportResult post(const std::string& url, const std::string& body,
                       const std::vector<std::pair<std::string, std::string>>& headers,
                       double timeout_seconds) override {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) return {false, {}, "malformed URL '" + url + "'"};
    auto path_start = url.find('/', scheme_end + 3);
    std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
    httplib::Client client(origin);
    const auto secs = static_cast<time_t>(timeout_seconds);
    client.set_connection_timeout(secs, 0);
    client.set_read_timeout(secs, 0);
    client.set_write_timeout(secs, 0);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = client.Post(path, h, body, "application/json");
    if (!res) return {false, {}, httplib::to_string(res.error())};
    return {true, {res->status, res->body}, {}};
  }
};

}  // namespace

std::string_view to_string(Provider provider) {
  return provider == Provider::remote ? "remote" : "mock";
}

Provider parse_provider(std::string_view name) {
  if (name == "remote") return Provider::remote;
  if (name == "mock") return Provider::mock;
  throw ValidationError("unknown generator provider '" + std::string(name) +
                        "' (expected remote or mock)");
}

void GeneratorConfig::validate() const {
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ValidationError("generator.top_p must be in (0, 1]");
  if (top_k < 1) throw ValidationError("generator.top_k must be >= 1");
  if (!(repetition_penalty >= 1.0)) {
    throw ValidationError("generator.repetition_penalty must be >= 1");
  }
  if (max_new_tokens < 1) throw ValidationError("generator.max_new_tokens must be >= 1");
  if (!(temperature >= 0.0)) throw ValidationError("generator.temperature must be >= 0");
  if (max_in_flight < 1) throw ValidationError("generator.max_in_flight must be >= 1");
  if (max_attempts < 1) throw ValidationError("generator.max_attempts must be >= 1");
  if (provider == Provider::remote && endpoint.empty()) {
    throw ValidationError("generator.endpoint is required for the remote provider");
  }
}

std::string GeneratorConfig::fingerprint() const {
  json j = {
      {"provider", std::string(to_string(provider))},
      {"model", model_name},
      {"top_p", top_p},
      {"top_k", top_k},
      {"repetition_penalty", repetition_penalty},
      {"max_new_tokens", max_new_tokens},
      {"temperature", temperature},
      {"seed", seed},
  };
  return sha256_hex(j.dump());
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

const std::vector<std::string>& mock_vocabulary() {
  static const std::vector<std::string> vocab = [] {
    auto content = find_bundled_resource("mock_vocabulary_v1.txt");
    if (!content) throw Error("bundled mock vocabulary missing");
    std::vector<std::string> words;
    for (auto line : text::split_lines(*content)) {
      auto t = text::trim(line);
      if (!t.empty() && t.front() != '#') words.emplace_back(t);
    }
    return words;
  }();
  return vocab;
}

std::string mock_complete(const std::string& prompt, std::int64_t seed, int max_new_tokens) {
  std::string_view last_line;
  for (auto line : text::split_lines(prompt)) {
    if (!text::trim(line).empty()) last_line = text::trim(line);
  }
  auto colon = last_line.rfind(':');
  std::string_view query = colon == std::string_view::npos ? last_line : last_line.substr(colon + 1);

  static const Tokenizer tokenizer{TokenizerConfig{}};
  const auto& vocab = mock_vocabulary();
  const std::uint64_t seed_hash = splitmix(static_cast<std::uint64_t>(seed));

  std::vector<std::string> keywords;
  std::unordered_set<std::string> seen;
  auto add = [&](std::string word) {
    if (static_cast<int>(keywords.size()) >= max_new_tokens) return;
    if (seen.insert(word).second) keywords.push_back(std::move(word));
  };
  for (auto& w : tokenizer.tokenize(query)) add(std::move(w));
  for (const auto& w : tokenizer.tokenize(last_line)) {
    auto h = splitmix(fnv1a(0xcbf29ce484222325ULL ^ seed_hash, w));
    add(vocab[h % vocab.size()]);
  }
  return text::join(keywords, ", ");
}

std::string MockGenerator::complete(const std::string& prompt) {
  return mock_complete(prompt, config_.seed, config_.max_new_tokens);
}

std::shared_ptr<HttpTransport> make_http_transport() {
  return std::make_shared<HttplibTransport>();
}

void InFlightLimiter::acquire() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return active_ < limit_; });
  ++active_;
}

void InFlightLimiter::release() {
  {
    std::lock_guard lock(mutex_);
    --active_;
  }
  cv_.notify_one();
}

RemoteGenerator::RemoteGenerator(GeneratorConfig config, std::shared_ptr<HttpTransport> transport,
                                 Sleeper sleeper)
    : config_(std::move(config)),
      transport_(transport ? std::move(transport) : make_http_transport()),
      sleeper_(sleeper ? std::move(sleeper)
                       : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
      limiter_(config_.max_in_flight) {
  if (config_.api_key.empty()) {
    if (const char* env = std::getenv("QRW_API_KEY")) config_.api_key = env;
  }
  if (!config_.extended_sampling) {
    static std::once_flag once;
    std::call_once(once, [] {
      diag::warn("endpoint does not take top_k/repetition_penalty; sending top_p and temperature only");
    });
  }
}

std::string RemoteGenerator::request_body(const std::string& prompt) const {
  json body = {
      {"model", config_.model_name},
      {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", config_.temperature},
      {"top_p", config_.top_p},
      {"max_tokens", config_.max_new_tokens},
  };
  if (config_.extended_sampling) {
    body["top_k"] = config_.top_k;
    body["repetition_penalty"] = config_.repetition_penalty;
  }
  return body.dump();
}

std::string RemoteGenerator::complete(const std::string& prompt) {
  const std::string body = request_body(prompt);
  std::vector<std::pair<std::string, std::string>> headers;
  if (!config_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + config_.api_key);

  struct Slot {
    InFlightLimiter& l;
    explicit Slot(InFlightLimiter& limiter) : l(limiter) { l.acquire(); }
    ~Slot() { l.release(); }
  };

  std::string last_error;
  int last_status = 0;
  auto backoff = config_.initial_backoff;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    TransportResult result;
    {
      Slot slot(limiter_);
      result = transport_->post(config_.endpoint, body, headers, config_.timeout_seconds);
    }
    if (result.ok) {
      const int status = result.response.status;
      if (status >= 200 && status < 300) {
        try {
          auto parsed = json::parse(result.response.body);
          return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
          throw GenerationError("malformed completion response: " + std::string(e.what()) +
                                    ": " + excerpt(result.response.body),
                                attempt, status);
        }
      }
      if (status != 429 && status < 500) {
        throw GenerationError("remote returned status " + std::to_string(status) + ": " +
                                  excerpt(result.response.body),
                              attempt, status);
      }
      last_status = status;
      last_error = "status " + std::to_string(status) + ": " + excerpt(result.response.body);
    } else {
      last_status = 0;
      last_error = result.error;
    }
    if (attempt < config_.max_attempts) {
      sleeper_(backoff);
      backoff *= 2;
    }
  }
  throw GenerationError("remote generation failed after " + std::to_string(config_.max_attempts) +
                            " attempts: " + last_error,
                        config_.max_attempts, last_status);
}

GenerationCache::GenerationCache(std::filesystem::path dir)
    : dir_(std::move(dir)), stripes_(new std::mutex[k_cache_stripes]) {
  std::filesystem::create_directories(dir_);
}

std::string GenerationCache::key_digest(const std::string& prompt, const std::string& fingerprint) {
  return sha256_hex(fingerprint + "\n" + prompt);
}

std::filesystem::path GenerationCache::path_for(const std::string& prompt,
                                                const std::string& fingerprint) const {
  return dir_ / (key_digest(prompt, fingerprint) + ".json");
}

std::mutex& GenerationCache::stripe(const std::string& digest) const {
  return stripes_[std::hash<std::string>{}(digest) % k_cache_stripes];
}

std::optional<GenerationRecord> GenerationCache::get(const std::string& prompt,
                                                     const std::string& fingerprint) const {
  const auto digest = key_digest(prompt, fingerprint);
  const auto path = dir_ / (digest + ".json");
  std::lock_guard lock(stripe(digest));
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  try {
    auto j = json::parse(text::read_file(path.string()));
    GenerationRecord r{j.at("prompt").get<std::string>(),
                       j.at("config_fingerprint").get<std::string>(),
                       j.at("output").get<std::string>(), j.at("timestamp").get<std::string>(),
                       j.at("provider").get<std::string>()};
    if (r.prompt != prompt || r.config_fingerprint != fingerprint) {
      diag::warn("cache entry " + path.string() + " does not match its key; ignoring it");
      return std::nullopt;
    }
    return r;
  } catch (const std::exception& e) {
    diag::warn("unreadable cache entry " + path.string() + ": " + e.what());
    return std::nullopt;
  }
}

void GenerationCache::put(const GenerationRecord& record) {
  const auto digest = key_digest(record.prompt, record.config_fingerprint);
  json j = {{"prompt", record.prompt},
            {"config_fingerprint", record.config_fingerprint},
            {"output", record.output},
            {"timestamp", record.timestamp},
            {"provider", record.provider}};
  std::lock_guard lock(stripe(digest));
  text::write_file_atomic((dir_ / (digest + ".json")).string(), j.dump(2) + "\n");
}

CachingGenerator::CachingGenerator(std::shared_ptr<Generator> inner,
                                   std::shared_ptr<GenerationCache> cache, GeneratorConfig config)
    : inner_(std::move(inner)),
      cache_(std::move(cache)),
      config_(std::move(config)),
      fingerprint_(config_.fingerprint()) {}

std::string CachingGenerator::complete(const std::string& prompt) {
  if (auto hit = cache_->get(prompt, fingerprint_)) return hit->output;
  std::string output = inner_->complete(prompt);
  cache_->put({prompt, fingerprint_, output, utc_timestamp(), std::string(to_string(config_.provider))});
  return output;
}

std::shared_ptr<Generator> make_generator(const GeneratorConfig& config,
                                          const std::string& cache_dir,
                                          std::shared_ptr<HttpTransport> transport) {
  config.validate();
  std::shared_ptr<Generator> provider;
  if (config.provider == Provider::mock) {
    provider = std::make_shared<MockGenerator>(config);
  } else {
    provider = std::make_shared<RemoteGenerator>(config, std::move(transport));
  }
  if (cache_dir.empty()) return provider;
  return std::make_shared<CachingGenerator>(provider, std::make_shared<GenerationCache>(cache_dir),
                                            config);
}

std::string complete(Generator& generator, const std::string& prompt) {
  if (text::trim(prompt).empty()) throw ValidationError("prompt must be nonempty");
  return generator.complete(prompt);
}

}  // namespace qrkit
