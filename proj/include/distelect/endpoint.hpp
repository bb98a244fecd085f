// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file endpoint.hpp
 * @brief Client for OpenAI-compatible chat-completion endpoints that expose
 *        top-k logprobs, plus a bounded-parallel cell fetcher.
 *
 * One request is issued per (state, candidate, opponent, year) cell, asking
 * for a single output token with `top_logprobs = top_k`. Only the
 * alternatives listed for the first token position are read; which token
 * was actually sampled is irrelevant.
 *
 * Retry contract: transport failures, HTTP 429 and HTTP 5xx are retried up to
 * `max_retries` times with exponential backoff starting at `retry_backoff`.
 * HTTP 401/403 fail immediately with AuthError. A 200 response without a
 * logprob block is a MalformedResponse and is not retried.
 */

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "distelect/cell_store.hpp"
#include "distelect/prompt.hpp"
#include "distelect/tokens.hpp"

namespace distelect {

inline constexpr const char* kApiKeyEnv = "DISTELECT_API_KEY";

inline std::optional<std::string> api_key_from_env() {
  const char* v = std::getenv(kApiKeyEnv);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

struct EndpointConfig {
  std::string base_url;
  std::string model;
  int top_k = 20;
  double temperature = 1.0;
  std::chrono::milliseconds timeout{30000};
  int max_retries = 3;
  std::chrono::milliseconds retry_backoff{500};
  int parallel = 4;
  std::string api_key;  // sent as a bearer token when non-empty

  void validate() const {
    if (base_url.empty()) throw Error(ErrorCode::InvalidConfig, "base_url is empty");
    if (model.empty()) throw Error(ErrorCode::InvalidConfig, "model is empty");
    if (top_k < 1) throw Error(ErrorCode::InvalidConfig, "top_k must be at least 1");
    if (!(temperature >= 0.0)) throw Error(ErrorCode::InvalidConfig, "temperature must be >= 0");
    if (max_retries < 0) throw Error(ErrorCode::InvalidConfig, "max_retries must be >= 0");
    if (parallel < 1) throw Error(ErrorCode::InvalidConfig, "parallel must be at least 1");
    if (timeout.count() <= 0) throw Error(ErrorCode::InvalidConfig, "timeout must be positive");
  }
};

namespace detail {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

inline SplitUrl split_base_url(const std::string& base_url) {
  auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos)
    throw Error(ErrorCode::InvalidConfig, "base_url '" + base_url + "' has no scheme");
  auto path_start = base_url.find('/', scheme_end + 3);
  SplitUrl out;
  if (path_start == std::string::npos) {
    out.origin = base_url;
  } else {
    out.origin = base_url.substr(0, path_start);
    out.prefix = base_url.substr(path_start);
  }
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

inline std::string completion_request_body(const EndpointConfig& cfg, const PromptPair& prompt) {
  nlohmann::ordered_json body;
  body["model"] = cfg.model;
  body["messages"] = nlohmann::ordered_json::array(
      {{{"role", "system"}, {"content", prompt.system_text}},
       {{"role", "user"}, {"content", prompt.user_text}}});
  body["max_tokens"] = 1;
  body["temperature"] = cfg.temperature;
  body["logprobs"] = true;
  body["top_logprobs"] = cfg.top_k;
  return body.dump();
}

}  // namespace detail

/// Reads `choices[0].logprobs.content[0].top_logprobs` and exponentiates.
inline RawTokenDistribution parse_completion_logprobs(const std::string& body,
                                                      const std::string& model) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::MalformedResponse, std::string("response is not JSON: ") + e.what());
  }
  const nlohmann::json* top = nullptr;
  try {
    const auto& content = doc.at("choices").at(0).at("logprobs").at("content");
    if (content.is_array() && !content.empty()) top = &content.at(0).at("top_logprobs");
  } catch (const nlohmann::json::exception&) {
    top = nullptr;
  }
  if (top == nullptr || !top->is_array())
    throw Error(ErrorCode::MalformedResponse, "response has no top_logprobs for the first token");

  RawTokenDistribution raw;
  raw.model = doc.value("model", model);
  raw.retrieved_at = std::chrono::system_clock::now();
  for (const auto& alt : *top) {
    if (!alt.is_object() || !alt.contains("token") || !alt.contains("logprob") ||
        !alt["token"].is_string() || !alt["logprob"].is_number())
      throw Error(ErrorCode::MalformedResponse, "top_logprobs entry lacks token/logprob");
    const double lp = alt["logprob"].get<double>();
    raw.entries.push_back({alt["token"].get<std::string>(), std::min(1.0, std::exp(lp))});
  }
  validate_raw(raw);
  return raw;
}

inline RawTokenDistribution fetch_token_distribution(const EndpointConfig& cfg,
                                                     const PromptPair& prompt) {
  cfg.validate();
  const auto url = detail::split_base_url(cfg.base_url);
  const std::string path = url.prefix + "/chat/completions";
  const std::string body = detail::completion_request_body(cfg, prompt);

  httplib::Headers headers;
  if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);

  std::string last_failure;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(cfg.retry_backoff * (1LL << std::min(attempt - 1, 20)));

    httplib::Client client(url.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    auto res = client.Post(path, headers, body, "application/json");
    if (!res) {
      last_failure = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 401 || res->status == 403)
      throw Error(ErrorCode::AuthError, "endpoint rejected credentials (HTTP " +
                                            std::to_string(res->status) + "); check " + kApiKeyEnv);
    if (res->status == 429 || res->status >= 500) {
      last_failure = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw Error(ErrorCode::NetworkError,
                  "HTTP " + std::to_string(res->status) + " from " + cfg.base_url + path + ": " +
                      res->body.substr(0, 200));
    return parse_completion_logprobs(res->body, cfg.model);
  }
  throw Error(ErrorCode::NetworkError, last_failure + " after " +
                                           std::to_string(cfg.max_retries + 1) + " attempts to " +
                                           cfg.base_url);
}

inline ShareDistribution fetch_cell(const EndpointConfig& cfg, const CellKey& key) {
  const auto prompt = build_prompt(key.candidate, key.opponent, key.year, key.state);
  const auto raw = fetch_token_distribution(cfg, prompt);
  CellMeta meta{key.state, key.candidate, key.opponent, key.year, cfg.model,
                prompt_fingerprint(prompt)};
  return tokens_to_shares(raw, std::move(meta));
}

/// Fetches both directions of one race. Failures name the candidate whose
/// request failed.
inline StateRace fetch_race(const EndpointConfig& cfg, const std::string& state,
                            const std::string& c1, const std::string& c2, int year) {
  auto one = [&](const std::string& cand, const std::string& opp) {
    try {
      return fetch_cell(cfg, {state, cand, opp, year});
    } catch (const Error& e) {
      throw Error(e.code(), "fetching " + cand + " in " + state + ": " + e.what(), {cand});
    }
  };
  auto a = one(c1, c2);
  auto b = one(c2, c1);
  return StateRace(std::move(a), std::move(b));
}

struct FetchOutcome {
  CellKey key;
  std::optional<ShareDistribution> cell;
  std::optional<Error> error;
};

/// Fetches every key with at most `cfg.parallel` requests in flight.
/// Outcomes come back in input order.
inline std::vector<FetchOutcome> fetch_cells(const EndpointConfig& cfg,
                                             const std::vector<CellKey>& keys) {
  cfg.validate();
  std::vector<FetchOutcome> out(keys.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < keys.size(); i = next++) {
      out[i].key = keys[i];
      try {
        out[i].cell = fetch_cell(cfg, keys[i]);
      } catch (const Error& e) {
        out[i].error = e;
      } catch (const std::exception& e) {
        out[i].error = Error(ErrorCode::NetworkError, e.what());
      }
    }
  };
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(cfg.parallel), keys.size());
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  if (n > 0) worker();
  pool.clear();
  return out;
}

/// A cell store that fills gaps from an endpoint on demand. Without an
/// endpoint, missing cells are an error.
class CellRepository {
 public:
  explicit CellRepository(CellStore store, std::optional<EndpointConfig> endpoint = std::nullopt)
      : store_(std::move(store)), endpoint_(std::move(endpoint)) {}

  /// Makes every key available, fetching the missing ones in parallel.
  void ensure(const std::vector<CellKey>& keys) {
    std::set<CellKey> seen;
    std::vector<CellKey> missing;
    for (const auto& k : keys)
      if (!store_.contains(k) && seen.insert(k).second) missing.push_back(k);
    if (missing.empty()) return;
    if (!endpoint_) {
      std::vector<std::string> states;
      std::string msg = std::to_string(missing.size()) + " cell(s) not in store:";
      for (const auto& k : missing) {
        msg += "\n  " + k.describe();
        states.push_back(k.state);
      }
      throw Error(ErrorCode::MissingCell, msg, std::move(states));
    }
    auto outcomes = fetch_cells(*endpoint_, missing);
    fetches_ += outcomes.size();
    std::vector<std::string> failed;
    std::string msg;
    std::optional<ErrorCode> code;
    for (auto& o : outcomes) {
      if (o.cell) {
        store_.put(std::move(*o.cell));
      } else {
        if (!code) code = o.error->code();
        failed.push_back(o.key.candidate);
        msg += "\n  " + o.key.describe() + ": " + o.error->what();
      }
    }
    if (code)
      throw Error(*code, std::to_string(failed.size()) + " fetch(es) failed:" + msg, std::move(failed));
  }

  StateRace race(const std::string& state, const std::string& c1, const std::string& c2, int year) {
    ensure({{state, c1, c2, year}, {state, c2, c1, year}});
    return store_.race(state, c1, c2, year);
  }

  const CellStore& store() const noexcept { return store_; }
  std::size_t fetch_count() const noexcept { return fetches_.load(); }
  bool live() const noexcept { return endpoint_.has_value(); }

 private:
  CellStore store_;
  std::optional<EndpointConfig> endpoint_;
  std::atomic<std::size_t> fetches_{0};
};

}  // namespace distelect
