// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file replay_server.hpp
 * @brief A local chat-completion endpoint that answers from a cell store.
 *
 * The server recognizes the user prompt of every stored cell and replies
 * with that cell's masses as first-token logprobs, scaled by the cell's
 * conforming mass. Fetching through it reproduces the stored cells, which
 * lets every live code path run offline.
 */

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "distelect/cell_store.hpp"
#include "distelect/prompt.hpp"

namespace distelect {

/// The OpenAI-shaped body a server would return for this cell.
inline std::string completion_response_for(const ShareDistribution& cell, const std::string& model,
                                           int top_k) {
  std::vector<std::pair<Share, double>> ranked(cell.masses().begin(), cell.masses().end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (top_k > 0 && ranked.size() > static_cast<std::size_t>(top_k)) ranked.resize(top_k);

  nlohmann::ordered_json top = nlohmann::ordered_json::array();
  for (const auto& [share, mass] : ranked) {
    nlohmann::ordered_json alt;
    alt["token"] = std::to_string(share);
    alt["logprob"] = std::log(mass * cell.conforming_mass());
    top.push_back(std::move(alt));
  }
  const std::string first = ranked.empty() ? "" : std::to_string(ranked.front().first);
  nlohmann::ordered_json token;
  token["token"] = first;
  token["logprob"] = top.empty() ? 0.0 : top.front()["logprob"].get<double>();
  token["top_logprobs"] = std::move(top);

  nlohmann::ordered_json choice;
  choice["index"] = 0;
  choice["message"] = {{"role", "assistant"}, {"content", first}};
  choice["logprobs"] = {{"content", nlohmann::ordered_json::array({std::move(token)})}};
  choice["finish_reason"] = "length";

  nlohmann::ordered_json body;
  body["id"] = "replay";
  body["object"] = "chat.completion";
  body["model"] = model;
  body["choices"] = nlohmann::ordered_json::array({std::move(choice)});
  return body.dump();
}

class ReplayServer {
 public:
  struct Options {
    bool require_auth = true;
  };

  explicit ReplayServer(const CellStore& store) : ReplayServer(store, Options{}) {}

  ReplayServer(const CellStore& store, Options options) : options_(options) {
    for (const auto& cell : store.cells()) {
      const auto& m = cell.meta();
      by_prompt_.emplace(build_prompt(m.candidate, m.opponent, m.year, m.state).user_text, cell);
    }
    server_.Post(R"((.*)/chat/completions)",
                 [this](const httplib::Request& req, httplib::Response& res) { handle(req, res); });
  }

  ~ReplayServer() { stop(); }

  ReplayServer(const ReplayServer&) = delete;
  ReplayServer& operator=(const ReplayServer&) = delete;

  /// Binds `port` (0 picks a free one) and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0) {
    if (port == 0)
      port_ = server_.bind_to_any_port(host);
    else
      port_ = server_.bind_to_port(host, port) ? port : -1;
    if (port_ <= 0)
      throw Error(ErrorCode::IoError, "replay server cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const noexcept { return port_; }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  std::size_t request_count() const noexcept { return requests_.load(); }

 private:
  void handle(const httplib::Request& req, httplib::Response& res) {
    ++requests_;
    if (options_.require_auth && req.get_header_value("Authorization").rfind("Bearer ", 0) != 0) {
      res.status = 401;
      res.set_content(R"({"error":{"message":"missing bearer token"}})", "application/json");
      return;
    }
    std::string user_text;
    std::string model = "replay";
    int top_k = 20;
    try {
      auto body = nlohmann::json::parse(req.body);
      model = body.value("model", model);
      top_k = body.value("top_logprobs", top_k);
      for (const auto& msg : body.at("messages"))
        if (msg.value("role", "") == "user") user_text = msg.at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      res.status = 400;
      res.set_content(R"({"error":{"message":"bad request body"}})", "application/json");
      return;
    }
    auto it = by_prompt_.find(user_text);
    if (it == by_prompt_.end()) {
      res.status = 404;
      res.set_content(R"({"error":{"message":"no recorded cell for this prompt"}})", "application/json");
      return;
    }
    res.set_content(completion_response_for(it->second, model, top_k), "application/json");
  }

  Options options_;
  std::map<std::string, ShareDistribution> by_prompt_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<std::size_t> requests_{0};
};

}  // namespace distelect
