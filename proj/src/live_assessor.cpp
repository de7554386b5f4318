#include "reljudge/assessors.hpp"
#include "reljudge/cost.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <thread>

namespace reljudge {

namespace {

// "https://host:port/prefix" -> {"https://host:port", "/prefix"}
std::pair<std::string, std::string> split_endpoint(const std::string &url) {
  const auto scheme_end = url.find("://");
  const auto path_start =
      url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  if (path_start == std::string::npos) {
    return {url, ""};
  }
  auto prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') {
    prefix.pop_back();
  }
  return {url.substr(0, path_start), prefix};
}

bool retryable_status(int status) {
  return status == 429 || (status >= 500 && status < 600);
}

std::string body_excerpt(const std::string &body) {
  constexpr std::size_t kMax = 200;
  if (body.size() <= kMax) {
    return body;
  }
  return body.substr(0, kMax) + "...";
}

} // namespace

LiveAssessor::LiveAssessor(ModelConfig config, RetryPolicy retry,
                           std::shared_ptr<ConcurrencyLimiter> limiter)
    : config_(std::move(config)), retry_(retry), limiter_(std::move(limiter)) {
  config_.validate();
  if (config_.endpoint_url.empty()) {
    throw ConfigError("endpoint_url must not be empty for the live backend");
  }
  if (!config_.api_key_env.empty()) {
    const char *key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw ConfigError("API key environment variable '" +
                        config_.api_key_env + "' is not set");
    }
    api_key_ = key;
  }
}

AssessorResponse LiveAssessor::assess(const RenderedPrompt &prompt,
                                      const JudgingUnit &) {
  const nlohmann::json body{
      {"model", config_.model_id},
      {"messages",
       nlohmann::json::array(
           {{{"role", "user"}, {"content", prompt.text}}})},
      {"temperature", config_.temperature},
      {"max_tokens", config_.max_output_tokens},
  };
  const std::string payload = body.dump();

  const auto [base, prefix] = split_endpoint(config_.endpoint_url);
  const std::string path = prefix + "/chat/completions";

  httplib::Headers headers;
  if (!api_key_.empty()) {
    headers.emplace("Authorization", "Bearer " + api_key_);
  }

  auto delay = retry_.initial_delay;
  int attempt = 0;
  std::string last_failure;
  for (;;) {
    httplib::Result res;
    std::uint64_t latency_ms = 0;
    {
      std::optional<ConcurrencyLimiter::Guard> slot;
      if (limiter_) {
        slot.emplace(*limiter_);
      }
      httplib::Client client(base);
      client.set_connection_timeout(retry_.request_timeout);
      client.set_read_timeout(retry_.request_timeout);
      client.set_write_timeout(retry_.request_timeout);
      const auto start = std::chrono::steady_clock::now();
      res = client.Post(path, headers, payload, "application/json");
      latency_ms = static_cast<std::uint64_t>(
          std::chrono::duration_cast<std::chrono::milliseconds>(
              std::chrono::steady_clock::now() - start)
              .count());
    }

    if (res && res->status >= 200 && res->status < 300) {
      nlohmann::json parsed;
      try {
        parsed = nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception &e) {
        throw ApiError(res->status,
                       std::string("malformed response JSON: ") + e.what());
      }
      if (!parsed.contains("choices") || !parsed["choices"].is_array() ||
          parsed["choices"].empty() ||
          !parsed["choices"][0].contains("message") ||
          !parsed["choices"][0]["message"].contains("content")) {
        throw ApiError(res->status,
                       "response missing choices[0].message.content: " +
                           body_excerpt(res->body));
      }

      AssessorResponse response;
      response.raw_text =
          parsed["choices"][0]["message"]["content"].get<std::string>();
      response.source = ResponseSource::live;
      response.latency_ms = latency_ms;
      if (parsed.contains("usage") &&
          parsed["usage"].contains("prompt_tokens") &&
          parsed["usage"].contains("completion_tokens")) {
        response.input_tokens =
            parsed["usage"]["prompt_tokens"].get<std::uint64_t>();
        response.output_tokens =
            parsed["usage"]["completion_tokens"].get<std::uint64_t>();
      } else {
        response.input_tokens = cost::estimate_tokens(prompt.text);
        response.output_tokens = cost::estimate_tokens(response.raw_text);
        response.usage_estimated = true;
      }
      return response;
    }

    if (res && !retryable_status(res->status)) {
      throw ApiError(res->status, body_excerpt(res->body));
    }

    last_failure = res ? "http status " + std::to_string(res->status)
                       : "transport: " + httplib::to_string(res.error());
    if (attempt >= retry_.max_retries) {
      throw TransportError("retries exhausted after " +
                           std::to_string(attempt) + " retries (" +
                           last_failure + ") for " + config_.endpoint_url);
    }
    std::this_thread::sleep_for(delay);
    delay = std::min(
        std::chrono::milliseconds(static_cast<std::int64_t>(
            static_cast<double>(delay.count()) * retry_.backoff_factor)),
        retry_.max_delay);
    ++attempt;
  }
}

} // namespace reljudge
