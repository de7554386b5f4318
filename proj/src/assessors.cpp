#include "reljudge/assessors.hpp"

#include "reljudge/cost.hpp"
#include "reljudge/digest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace reljudge {

void ModelConfig::validate() const {
  if (model_id.empty()) {
    throw ConfigError("model_id must not be empty");
  }
  if (price_input_per_mtok < 0.0 || price_output_per_mtok < 0.0) {
    throw ConfigError("model prices must be >= 0");
  }
  if (temperature < 0.0) {
    throw ConfigError("temperature must be >= 0");
  }
  if (max_output_tokens < 1) {
    throw ConfigError("max_output_tokens must be >= 1");
  }
}

std::string_view response_source_name(ResponseSource source) {
  switch (source) {
  case ResponseSource::live:
    return "live";
  case ResponseSource::cache:
    return "cache";
  case ResponseSource::synthetic:
    return "synthetic";
  }
  return "live";
}

ResponseSource response_source_from_name(std::string_view name) {
  if (name == "live") {
    return ResponseSource::live;
  }
  if (name == "cache") {
    return ResponseSource::cache;
  }
  if (name == "synthetic") {
    return ResponseSource::synthetic;
  }
  throw ConfigError("unknown response source: '" + std::string(name) + "'");
}

nlohmann::json response_to_json(const AssessorResponse &response) {
  return nlohmann::json{
      {"raw_text", response.raw_text},
      {"input_tokens", response.input_tokens},
      {"output_tokens", response.output_tokens},
      {"source", std::string(response_source_name(response.source))},
      {"latency_ms", response.latency_ms},
      {"usage_estimated", response.usage_estimated},
  };
}

AssessorResponse response_from_json(const nlohmann::json &obj) {
  AssessorResponse response;
  response.raw_text = obj.at("raw_text").get<std::string>();
  response.input_tokens = obj.at("input_tokens").get<std::uint64_t>();
  response.output_tokens = obj.at("output_tokens").get<std::uint64_t>();
  response.source =
      response_source_from_name(obj.at("source").get<std::string>());
  response.latency_ms = obj.at("latency_ms").get<std::uint64_t>();
  response.usage_estimated = obj.at("usage_estimated").get<bool>();
  return response;
}

ConcurrencyLimiter::ConcurrencyLimiter(int max_in_flight)
    : available_(max_in_flight), max_(max_in_flight) {
  if (max_in_flight < 1) {
    throw ConfigError("max_in_flight must be >= 1");
  }
}

void ConcurrencyLimiter::acquire() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return available_ > 0; });
  --available_;
}

void ConcurrencyLimiter::release() {
  {
    std::lock_guard lock(mutex_);
    ++available_;
  }
  cv_.notify_one();
}

namespace {

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

} // namespace

// ---------------------------------------------------------------------------
// CacheStore

CacheStore::CacheStore(const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  file_ = dir / "responses.jsonl";

  std::ifstream in(file_, std::ios::binary);
  if (in) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim_view(line).empty()) {
        continue;
      }
      nlohmann::json record;
      try {
        record = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception &e) {
        throw CacheError("corrupt cache entry at " + file_.string() + ":" +
                         std::to_string(line_no) + ": " + e.what());
      }
      if (!record.contains("key") || !record["key"].is_string()) {
        throw CacheError("corrupt cache entry at " + file_.string() + ":" +
                         std::to_string(line_no) + ": missing key");
      }
      const auto key = record["key"].get<std::string>();
      try {
        entries_[key] = response_from_json(record.at("response"));
      } catch (const std::exception &e) {
        throw CacheError("corrupt cache entry for key " + key + ": " +
                         e.what());
      }
    }
  }

  appender_.open(file_, std::ios::binary | std::ios::app);
  if (!appender_) {
    throw CacheError("cannot open cache file for append: " + file_.string());
  }
}

std::string CacheStore::make_key(const ModelConfig &config,
                                 const RenderedPrompt &prompt) {
  std::string input = "cache";
  input += '\x1f';
  input += config.model_id;
  input += '\x1f';
  input += format_double(config.temperature);
  input += '\x1f';
  input += prompt.content_hash;
  return sha256_hex(input);
}

std::optional<AssessorResponse> CacheStore::lookup(
    const std::string &key) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find(key);
  if (it == entries_.end()) {
    return std::nullopt;
  }
  return it->second;
}

void CacheStore::insert(const std::string &key, const ModelConfig &config,
                        const RenderedPrompt &prompt,
                        const AssessorResponse &response) {
  std::unique_lock lock(mutex_);
  if (entries_.contains(key)) {
    return; // content-addressed: an existing entry is the same response
  }
  nlohmann::json record{
      {"key", key},
      {"request",
       {{"model_id", config.model_id},
        {"temperature", config.temperature},
        {"template", std::string(template_name(prompt.template_id))},
        {"prompt_sha256", prompt.content_hash},
        {"prompt_text", prompt.text}}},
      {"response", response_to_json(response)},
  };
  appender_ << record.dump() << '\n';
  appender_.flush();
  if (!appender_) {
    throw CacheError("failed to append cache entry to " + file_.string());
  }
  entries_.emplace(key, response);
}

std::size_t CacheStore::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

// ---------------------------------------------------------------------------
// CachedAssessor

CachedAssessor::CachedAssessor(ModelConfig config, CacheStore &store,
                               std::shared_ptr<Assessor> fallback)
    : config_(std::move(config)), store_(store),
      fallback_(std::move(fallback)) {
  config_.validate();
}

AssessorResponse CachedAssessor::assess(const RenderedPrompt &prompt,
                                        const JudgingUnit &unit) {
  const auto key = CacheStore::make_key(config_, prompt);
  if (auto hit = store_.lookup(key)) {
    hit->source = ResponseSource::cache;
    return *hit;
  }
  if (!fallback_) {
    throw CacheMissError(key);
  }
  auto response = fallback_->assess(prompt, unit);
  store_.insert(key, config_, prompt, response);
  return response;
}

// ---------------------------------------------------------------------------
// SyntheticAssessor

void SyntheticAssessorSpec::validate() const {
  for (std::size_t row = 0; row < confusion.size(); ++row) {
    double sum = 0.0;
    for (const double p : confusion[row]) {
      if (p < 0.0) {
        throw ConfigError("confusion row " + std::to_string(row) +
                          " has a negative entry");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ConfigError("confusion row " + std::to_string(row) +
                        " sums to " + format_double(sum) + ", expected 1");
    }
  }
}

SyntheticAssessorSpec SyntheticAssessorSpec::identity(std::uint64_t seed) {
  SyntheticAssessorSpec spec;
  for (std::size_t i = 0; i < 4; ++i) {
    spec.confusion[i][i] = 1.0;
  }
  spec.seed = seed;
  return spec;
}

SyntheticAssessor::SyntheticAssessor(SyntheticAssessorSpec spec)
    : spec_(spec) {
  spec_.validate();
}

AssessorResponse SyntheticAssessor::assess(const RenderedPrompt &prompt,
                                           const JudgingUnit &unit) {
  const auto &tmpl = builtin_template(prompt.template_id);
  const int gold = unit.qrel.gold_label;
  if (gold < 0 || gold > 3) {
    throw ConfigError("gold label out of range 0..3: " + std::to_string(gold));
  }

  std::string key = "syn";
  key += '\x1f';
  key += std::to_string(spec_.seed);
  key += '\x1f';
  key += unit.qrel.topic_id;
  key += '\x1f';
  key += unit.qrel.doc_id;
  key += '\x1f';
  key += std::to_string(tmpl.score_min);
  key += ':';
  key += std::to_string(tmpl.score_max);
  const double u =
      static_cast<double>(sha256_u64(key) >> 11) * 0x1.0p-53;

  const auto &row = spec_.confusion[static_cast<std::size_t>(gold)];
  int drawn = 0;
  double acc = 0.0;
  for (int label = 0; label < 4; ++label) {
    acc += row[static_cast<std::size_t>(label)];
    if (u < acc) {
      drawn = label;
      break;
    }
    if (row[static_cast<std::size_t>(label)] > 0.0) {
      drawn = label; // guards against accumulated rounding at u ~ 1
    }
  }

  const int emitted = std::clamp(drawn, tmpl.score_min, tmpl.score_max);

  AssessorResponse response;
  response.raw_text = "##final score: " + std::to_string(emitted);
  response.input_tokens = cost::estimate_tokens(prompt.text);
  response.output_tokens = cost::estimate_tokens(response.raw_text);
  response.source = ResponseSource::synthetic;
  response.latency_ms = 0;
  response.usage_estimated = true;
  return response;
}

} // namespace reljudge
