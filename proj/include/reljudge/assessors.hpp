#pragma once

#include "reljudge/corpus.hpp"
#include "reljudge/prompts.hpp"

#include <json.hpp>

#include <array>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

namespace reljudge {

struct ModelConfig {
  std::string model_id;
  std::string endpoint_url; // base URL, e.g. "https://api.openai.com/v1"
  std::string api_key_env;  // env var holding the bearer token; empty = none
  double temperature = 0.0;
  int max_output_tokens = 64;
  double price_input_per_mtok = 0.0;
  double price_output_per_mtok = 0.0;

  void validate() const; // throws ConfigError
};

enum class ResponseSource { live, cache, synthetic };

std::string_view response_source_name(ResponseSource source);
ResponseSource response_source_from_name(std::string_view name);

struct AssessorResponse {
  std::string raw_text;
  std::uint64_t input_tokens = 0;
  std::uint64_t output_tokens = 0;
  ResponseSource source = ResponseSource::live;
  std::uint64_t latency_ms = 0;
  bool usage_estimated = false; // token counts came from the byte heuristic
};

nlohmann::json response_to_json(const AssessorResponse &response);
AssessorResponse response_from_json(const nlohmann::json &obj);

class AssessorError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Fatal: bad spec, unresolvable API key, invalid synthetic spec.
class ConfigError : public AssessorError {
public:
  using AssessorError::AssessorError;
};

// Retries exhausted on a retryable failure (429/5xx/timeouts).
class TransportError : public AssessorError {
public:
  using AssessorError::AssessorError;
};

// Non-retryable HTTP status or malformed success body.
class ApiError : public AssessorError {
public:
  ApiError(int status, const std::string &detail)
      : AssessorError("api error (status " + std::to_string(status) + "): " +
                      detail),
        status_(status) {}

  int status() const { return status_; }

private:
  int status_;
};

class CacheError : public AssessorError {
public:
  using AssessorError::AssessorError;
};

// Fatal in replay-only mode.
class CacheMissError : public AssessorError {
public:
  explicit CacheMissError(const std::string &key)
      : AssessorError("cache miss in replay mode for key " + key) {}
};

class Assessor {
public:
  virtual ~Assessor() = default;
  virtual AssessorResponse assess(const RenderedPrompt &prompt,
                                  const JudgingUnit &unit) = 0;
};

struct RetryPolicy {
  int max_retries = 4;
  std::chrono::milliseconds initial_delay{250};
  double backoff_factor = 2.0;
  std::chrono::milliseconds max_delay{8000};
  std::chrono::seconds request_timeout{120};
};

// Bounds in-flight requests against one endpoint.
class ConcurrencyLimiter {
public:
  explicit ConcurrencyLimiter(int max_in_flight);

  class Guard {
  public:
    explicit Guard(ConcurrencyLimiter &limiter) : limiter_(&limiter) {
      limiter_->acquire();
    }
    ~Guard() {
      if (limiter_) {
        limiter_->release();
      }
    }
    Guard(const Guard &) = delete;
    Guard &operator=(const Guard &) = delete;

  private:
    ConcurrencyLimiter *limiter_;
  };

  void acquire();
  void release();
  int max_in_flight() const { return max_; }

private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int available_;
  int max_;
};

// OpenAI-compatible chat-completions backend. Sends the prompt as a single
// user message and retries 429/5xx/timeouts with exponential backoff.
class LiveAssessor : public Assessor {
public:
  explicit LiveAssessor(ModelConfig config, RetryPolicy retry = {},
                        std::shared_ptr<ConcurrencyLimiter> limiter = {});

  AssessorResponse assess(const RenderedPrompt &prompt,
                          const JudgingUnit &unit) override;

private:
  ModelConfig config_;
  RetryPolicy retry_;
  std::shared_ptr<ConcurrencyLimiter> limiter_;
  std::string api_key_;
};

// Content-addressed on-disk response store: one JSONL record per entry in
// <dir>/responses.jsonl, append-only. Concurrent reads, serialized writes.
class CacheStore {
public:
  explicit CacheStore(const std::filesystem::path &dir);

  static std::string make_key(const ModelConfig &config,
                              const RenderedPrompt &prompt);

  std::optional<AssessorResponse> lookup(const std::string &key) const;
  void insert(const std::string &key, const ModelConfig &config,
              const RenderedPrompt &prompt, const AssessorResponse &response);
  std::size_t size() const;
  const std::filesystem::path &file() const { return file_; }

private:
  std::filesystem::path file_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, AssessorResponse> entries_;
  std::ofstream appender_;
};

// Cache-through assessor. Hit: stored response, byte-for-byte, with
// source=cache. Miss: delegate to the fallback and persist, or throw
// CacheMissError when replay-only (no fallback).
class CachedAssessor : public Assessor {
public:
  CachedAssessor(ModelConfig config, CacheStore &store,
                 std::shared_ptr<Assessor> fallback);

  AssessorResponse assess(const RenderedPrompt &prompt,
                          const JudgingUnit &unit) override;

private:
  ModelConfig config_;
  CacheStore &store_;
  std::shared_ptr<Assessor> fallback_;
};

struct SyntheticAssessorSpec {
  // rows indexed by gold label, columns by emitted label; row-stochastic
  std::array<std::array<double, 4>, 4> confusion{};
  std::uint64_t seed = 0;

  void validate() const; // throws ConfigError
  static SyntheticAssessorSpec identity(std::uint64_t seed);
};

// Draws the emitted label from confusion[gold] with a counter-based
// generator keyed by (seed, topic_id, doc_id, stage range), then clamps it
// into the stage's score range. Pure: identical inputs give identical
// responses regardless of call order or thread interleaving.
class SyntheticAssessor : public Assessor {
public:
  explicit SyntheticAssessor(SyntheticAssessorSpec spec);

  AssessorResponse assess(const RenderedPrompt &prompt,
                          const JudgingUnit &unit) override;

private:
  SyntheticAssessorSpec spec_;
};

} // namespace reljudge
