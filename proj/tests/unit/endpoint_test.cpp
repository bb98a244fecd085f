// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <functional>
#include <thread>

#include "distelect/endpoint.hpp"
#include "distelect/replay_server.hpp"
#include "support/oracles.hpp"

namespace de = distelect;
using de::testing::meta_for;
using namespace std::chrono_literals;

namespace {

/// A throwaway HTTP server on an ephemeral port.
class StubServer {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  explicit StubServer(Handler h) : handler_(std::move(h)) {
    server_.Post(R"((.*)/chat/completions)", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits;
      handler_(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

  std::atomic<int> hits{0};

 private:
  Handler handler_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

std::string logprob_body(const std::vector<std::pair<std::string, double>>& entries) {
  nlohmann::json top = nlohmann::json::array();
  for (const auto& [tok, p] : entries) top.push_back({{"token", tok}, {"logprob", std::log(p)}});
  nlohmann::json body;
  body["model"] = "stub";
  body["choices"] = {{{"index", 0}, {"logprobs", {{"content", {{{"token", "x"}, {"top_logprobs", top}}}}}}}};
  return body.dump();
}

de::EndpointConfig config(const std::string& url) {
  de::EndpointConfig cfg;
  cfg.base_url = url;
  cfg.model = "stub-model";
  cfg.api_key = "k";
  cfg.retry_backoff = 1ms;
  cfg.timeout = 2000ms;
  return cfg;
}

de::ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const de::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return de::ErrorCode::IoError;
}

}  // namespace

TEST(ParseCompletion, ExponentiatesLogprobs) {
  auto raw = de::parse_completion_logprobs(logprob_body({{" 52", 0.6}, {"53", 0.3}, {"I", 0.05}}), "m");
  ASSERT_EQ(raw.entries.size(), 3u);
  EXPECT_EQ(raw.entries[0].token, " 52");
  EXPECT_NEAR(raw.entries[0].probability, 0.6, 1e-15);
  auto d = de::tokens_to_shares(raw, meta_for("Iowa", "A", "B"));
  EXPECT_NEAR(d.conforming_mass(), 0.9, 1e-15);
  EXPECT_NEAR(d.at(52), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(d.at(53), 1.0 / 3.0, 1e-15);
}

TEST(ParseCompletion, RejectsMalformedBodies) {
  EXPECT_EQ(code_of([] { de::parse_completion_logprobs("{", "m"); }), de::ErrorCode::MalformedResponse);
  EXPECT_EQ(code_of([] { de::parse_completion_logprobs(R"({"choices":[]})", "m"); }),
            de::ErrorCode::MalformedResponse);
  EXPECT_EQ(code_of([] {
              de::parse_completion_logprobs(
                  R"({"choices":[{"logprobs":{"content":[{"top_logprobs":[{"token":"5"}]}]}}]})", "m");
            }),
            de::ErrorCode::MalformedResponse);
  EXPECT_EQ(code_of([] {
              de::parse_completion_logprobs(
                  R"({"choices":[{"message":{"content":"50"}}]})", "m");
            }),
            de::ErrorCode::MalformedResponse);
}

TEST(EndpointConfig, Validation) {
  auto cfg = config("http://127.0.0.1:1/v1");
  cfg.top_k = 0;
  EXPECT_EQ(code_of([&] { cfg.validate(); }), de::ErrorCode::InvalidConfig);
  cfg = config("");
  EXPECT_EQ(code_of([&] { cfg.validate(); }), de::ErrorCode::InvalidConfig);
  cfg = config("127.0.0.1:8080");
  EXPECT_EQ(code_of([&] { de::fetch_cell(cfg, {"Iowa", "A", "B", 2024}); }), de::ErrorCode::InvalidConfig);
}

TEST(FetchCell, SendsPromptAndParsesReply) {
  std::string seen_path, seen_auth, seen_body;
  StubServer server([&](const httplib::Request& req, httplib::Response& res) {
    seen_path = req.path;
    seen_auth = req.get_header_value("Authorization");
    seen_body = req.body;
    res.set_content(logprob_body({{" 52", 0.6}, {"53", 0.3}}), "application/json");
  });
  auto cell = de::fetch_cell(config(server.base_url()), {"Iowa", "Kamala Harris", "Donald Trump", 2024});
  EXPECT_EQ(seen_path, "/v1/chat/completions");
  EXPECT_EQ(seen_auth, "Bearer k");
  auto body = nlohmann::json::parse(seen_body);
  EXPECT_EQ(body["model"], "stub-model");
  EXPECT_EQ(body["max_tokens"], 1);
  EXPECT_EQ(body["top_logprobs"], 20);
  EXPECT_EQ(body["messages"][1]["content"],
            de::build_prompt("Kamala Harris", "Donald Trump", 2024, "Iowa").user_text);
  EXPECT_EQ(cell.meta().model, "stub-model");
  EXPECT_EQ(cell.meta().prompt_fingerprint,
            de::prompt_fingerprint(de::build_prompt("Kamala Harris", "Donald Trump", 2024, "Iowa")));
  EXPECT_NEAR(cell.at(52), 2.0 / 3.0, 1e-15);
}

TEST(FetchCell, UnreachableHostRetriesThenFails) {
  httplib::Server probe;
  const int port = probe.bind_to_any_port("127.0.0.1");
  probe.stop();
  auto cfg = config("http://127.0.0.1:" + std::to_string(port) + "/v1");
  cfg.max_retries = 2;
  cfg.timeout = 300ms;
  try {
    de::fetch_cell(cfg, {"Iowa", "A", "B", 2024});
    FAIL();
  } catch (const de::Error& e) {
    EXPECT_EQ(e.code(), de::ErrorCode::NetworkError);
    EXPECT_NE(std::string(e.what()).find("after 3 attempts"), std::string::npos) << e.what();
  }
}

TEST(FetchCell, ServerErrorsAreRetried) {
  int calls = 0;
  StubServer server([&](const httplib::Request&, httplib::Response& res) {
    if (++calls < 3) {
      res.status = calls == 1 ? 503 : 429;
      return;
    }
    res.set_content(logprob_body({{"50", 1.0}}), "application/json");
  });
  auto cell = de::fetch_cell(config(server.base_url()), {"Iowa", "A", "B", 2024});
  EXPECT_EQ(cell.at(50), 1.0);
  EXPECT_EQ(server.hits.load(), 3);
}

TEST(FetchCell, AuthAndClientErrorsAreNotRetried) {
  StubServer unauthorized([](const httplib::Request&, httplib::Response& res) { res.status = 401; });
  EXPECT_EQ(code_of([&] { de::fetch_cell(config(unauthorized.base_url()), {"Iowa", "A", "B", 2024}); }),
            de::ErrorCode::AuthError);
  EXPECT_EQ(unauthorized.hits.load(), 1);

  StubServer bad([](const httplib::Request&, httplib::Response& res) { res.status = 400; });
  EXPECT_EQ(code_of([&] { de::fetch_cell(config(bad.base_url()), {"Iowa", "A", "B", 2024}); }),
            de::ErrorCode::NetworkError);
  EXPECT_EQ(bad.hits.load(), 1);

  StubServer junk([](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"choices":[{"logprobs":null}]})", "application/json");
  });
  EXPECT_EQ(code_of([&] { de::fetch_cell(config(junk.base_url()), {"Iowa", "A", "B", 2024}); }),
            de::ErrorCode::MalformedResponse);
}

TEST(FetchRace, PointMassesDecideTheState) {
  StubServer server([](const httplib::Request& req, httplib::Response& res) {
    const bool first = req.body.find("will Alice win") != std::string::npos;
    res.set_content(logprob_body({{first ? "60" : "40", 1.0}}), "application/json");
  });
  auto race = de::fetch_race(config(server.base_url()), "Ohio", "Alice", "Bob", 2024);
  EXPECT_EQ(de::win_probability(race).p_c1_wins, 1.0);
  EXPECT_EQ(race.c1().meta().candidate, "Alice");
  EXPECT_EQ(race.c2().meta().candidate, "Bob");
}

TEST(FetchRace, FailureNamesTheCandidate) {
  StubServer server([](const httplib::Request& req, httplib::Response& res) {
    if (req.body.find("will Bob win") != std::string::npos)
      res.set_content(logprob_body({{"maybe", 0.9}}), "application/json");
    else
      res.set_content(logprob_body({{"55", 1.0}}), "application/json");
  });
  try {
    de::fetch_race(config(server.base_url()), "Ohio", "Alice", "Bob", 2024);
    FAIL();
  } catch (const de::Error& e) {
    EXPECT_EQ(e.code(), de::ErrorCode::NoConformingTokens);
    EXPECT_EQ(e.subjects(), std::vector<std::string>{"Bob"});
  }
}

TEST(ReplayServer, ReproducesStoredCells) {
  std::mt19937_64 rng(3);
  de::CellStore store;
  std::vector<de::CellKey> keys;
  for (const auto* s : {"Iowa", "Ohio", "Utah"}) {
    auto r = de::testing::random_race(rng, s, 15);
    store.put(r.c1());
    store.put(r.c2());
    keys.push_back(de::CellKey::of(r.c1().meta()));
    keys.push_back(de::CellKey::of(r.c2().meta()));
  }
  de::ReplayServer server(store);
  server.start();
  auto cfg = config(server.base_url());
  cfg.top_k = 20;
  auto outcomes = de::fetch_cells(cfg, keys);
  ASSERT_EQ(outcomes.size(), keys.size());
  for (const auto& o : outcomes) {
    ASSERT_TRUE(o.cell) << o.error->what();
    const auto& orig = *store.find(o.key);
    EXPECT_NEAR(o.cell->conforming_mass(), orig.conforming_mass(), 1e-12);
    ASSERT_EQ(o.cell->masses().size(), orig.masses().size());
    for (const auto& [s, p] : orig.masses()) EXPECT_NEAR(o.cell->at(s), p, 1e-12);
  }
  EXPECT_EQ(server.request_count(), keys.size());

  auto anonymous = cfg;
  anonymous.api_key.clear();
  EXPECT_EQ(code_of([&] { de::fetch_cell(anonymous, keys[0]); }), de::ErrorCode::AuthError);
  EXPECT_EQ(code_of([&] { de::fetch_cell(cfg, {"Maine", "A", "B", 2024}); }), de::ErrorCode::NetworkError);
}

TEST(CellRepository, FetchesOnlyMissingCells) {
  std::mt19937_64 rng(4);
  de::CellStore full;
  for (const auto* s : {"Iowa", "Ohio"}) {
    auto r = de::testing::random_race(rng, s);
    full.put(r.c1());
    full.put(r.c2());
  }
  de::ReplayServer server(full);
  server.start();

  de::CellStore partial;
  partial.put(*full.find({"Iowa", "A", "B", 2024}));
  de::CellRepository repo(partial, config(server.base_url()));
  std::vector<de::CellKey> keys = {{"Iowa", "A", "B", 2024}, {"Iowa", "B", "A", 2024},
                                   {"Ohio", "A", "B", 2024}, {"Ohio", "B", "A", 2024},
                                   {"Ohio", "B", "A", 2024}};
  repo.ensure(keys);
  EXPECT_EQ(repo.fetch_count(), 3u);
  repo.ensure(keys);
  EXPECT_EQ(repo.fetch_count(), 3u);
  EXPECT_EQ(repo.store().size(), 4u);

  de::CellRepository offline(partial);
  try {
    offline.ensure(keys);
    FAIL();
  } catch (const de::Error& e) {
    EXPECT_EQ(e.code(), de::ErrorCode::MissingCell);
    EXPECT_NE(std::string(e.what()).find("Ohio"), std::string::npos);
  }
}
