// SPDX-License-Identifier: Apache-2.0
//
// distelect: fetch share distributions from a logprob endpoint, turn them
// into state win probabilities and Electoral College distributions, and
// report against ground truth.
//
// Exit codes: 0 success, 2 domain or data error, 64 usage error.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <pthread.h>

#include <CLI11.hpp>

#include "distelect/distelect.hpp"

namespace de = distelect;

namespace {

constexpr int kExitData = 2;
constexpr int kExitUsage = 64;

struct EndpointFlags {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4o";
  int top_k = 20;
  double temperature = 1.0;
  int timeout_ms = 30000;
  int retries = 3;
  int backoff_ms = 500;
  int parallel = 4;
};

void add_endpoint_flags(CLI::App* cmd, EndpointFlags& f) {
  cmd->add_option("--base-url", f.base_url, "Chat-completion API base URL")->capture_default_str();
  cmd->add_option("--model", f.model, "Model identifier")->capture_default_str();
  cmd->add_option("--top-k", f.top_k, "Top logprobs requested per call")->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--temperature", f.temperature, "Sampling temperature")->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--timeout-ms", f.timeout_ms, "Per-request timeout")->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--retries", f.retries, "Retries on transport/5xx/429 failures")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  cmd->add_option("--backoff-ms", f.backoff_ms, "Initial retry backoff")->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--parallel", f.parallel, "Requests in flight")->capture_default_str()
      ->check(CLI::PositiveNumber);
}

de::EndpointConfig resolve_endpoint(const EndpointFlags& f) {
  auto key = de::api_key_from_env();
  if (!key)
    throw de::Error(de::ErrorCode::InvalidConfig,
                    std::string("environment variable ") + de::kApiKeyEnv + " is not set");
  de::EndpointConfig cfg;
  cfg.base_url = f.base_url;
  cfg.model = f.model;
  cfg.top_k = f.top_k;
  cfg.temperature = f.temperature;
  cfg.timeout = std::chrono::milliseconds(f.timeout_ms);
  cfg.max_retries = f.retries;
  cfg.retry_backoff = std::chrono::milliseconds(f.backoff_ms);
  cfg.parallel = f.parallel;
  cfg.api_key = *key;
  cfg.validate();
  return cfg;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto t = std::string(de::io::trim(item));
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

void emit(const std::string& content, const std::string& output) {
  if (output.empty() || output == "-")
    std::cout << content << std::flush;
  else
    de::io::write_file_atomic(output, content);
}

struct MatchupFlags {
  std::string c1;
  std::string c2;
  int year = 0;
};

void add_matchup_flags(CLI::App* cmd, MatchupFlags& f) {
  cmd->add_option("--c1", f.c1, "First candidate (inferred when the store holds one matchup)");
  cmd->add_option("--c2", f.c2, "Second candidate");
  cmd->add_option("--year", f.year, "Election year");
}

/// Fills unset matchup fields from the store, which must then hold exactly
/// one matching (pair, year).
MatchupFlags resolve_matchup(const de::CellStore& store, MatchupFlags f) {
  if (!f.c1.empty() && !f.c2.empty() && f.year != 0) return f;
  std::set<std::tuple<std::string, std::string, int>> seen;
  std::optional<MatchupFlags> pick;
  for (const auto& cell : store.cells()) {
    const auto& m = cell.meta();
    if (f.year != 0 && m.year != f.year) continue;
    if (!f.c1.empty() && m.candidate != f.c1 && m.opponent != f.c1) continue;
    if (!f.c2.empty() && m.candidate != f.c2 && m.opponent != f.c2) continue;
    auto lo = std::min(m.candidate, m.opponent), hi = std::max(m.candidate, m.opponent);
    if (seen.emplace(lo, hi, m.year).second && !pick) {
      MatchupFlags p;
      p.year = m.year;
      if (!f.c1.empty()) {
        p.c1 = f.c1;
        p.c2 = m.candidate == f.c1 ? m.opponent : m.candidate;
      } else if (!f.c2.empty()) {
        p.c2 = f.c2;
        p.c1 = m.candidate == f.c2 ? m.opponent : m.candidate;
      } else {
        p.c1 = m.candidate;
        p.c2 = m.opponent;
      }
      pick = p;
    }
  }
  if (seen.empty()) throw de::Error(de::ErrorCode::MissingCell, "store has no cells for the requested matchup");
  if (seen.size() > 1)
    throw de::Error(de::ErrorCode::InvalidConfig,
                    "store holds " + std::to_string(seen.size()) +
                        " matchups; pass --c1, --c2 and --year to choose one");
  return *pick;
}

int infer_year(const de::CellStore& store) {
  std::set<int> years;
  for (const auto& cell : store.cells()) years.insert(cell.meta().year);
  if (years.size() != 1)
    throw de::Error(de::ErrorCode::InvalidConfig,
                    "store holds " + std::to_string(years.size()) + " election years; pass --year");
  return *years.begin();
}

de::EVAllocation resolve_allocation(const std::string& path, int year) {
  return path.empty() ? de::allocation_for_year(year) : de::load_allocation(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distribution-based election forecasting from LLM token probabilities"};
  app.require_subcommand(1);

  // fetch
  auto* fetch = app.add_subcommand("fetch", "Fetch share distributions for one matchup into a cell store");
  EndpointFlags fetch_ep;
  std::string fetch_c1, fetch_c2, fetch_states, fetch_out;
  int fetch_year = 0;
  fetch->add_option("--c1", fetch_c1, "First candidate")->required();
  fetch->add_option("--c2", fetch_c2, "Second candidate")->required();
  fetch->add_option("--year", fetch_year, "Election year")->required();
  fetch->add_option("--states", fetch_states, "Comma-separated state names, or 'all'")->required();
  fetch->add_option("--output,-o", fetch_out, "Cell store to write")->required();
  add_endpoint_flags(fetch, fetch_ep);

  // wins
  auto* wins = app.add_subcommand("wins", "Per-state tie-excluded win probabilities");
  MatchupFlags wins_m;
  std::string wins_store, wins_alloc, wins_format = "csv", wins_out;
  wins->add_option("--store", wins_store, "Cell store")->required();
  add_matchup_flags(wins, wins_m);
  wins->add_option("--allocation", wins_alloc, "CSV state,electoral_votes overriding the bundled table");
  wins->add_option("--format", wins_format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  wins->add_option("--output,-o", wins_out, "Output file (default stdout)");

  // ec
  auto* ec = app.add_subcommand("ec", "Exact Electoral College distribution for one matchup");
  MatchupFlags ec_m;
  std::string ec_store, ec_alloc, ec_pmf = "ec_pmf.csv", ec_out;
  int ec_threshold = 0;
  ec->add_option("--store", ec_store, "Cell store")->required();
  add_matchup_flags(ec, ec_m);
  ec->add_option("--allocation", ec_alloc, "CSV state,electoral_votes overriding the bundled table");
  ec->add_option("--threshold", ec_threshold, "Votes needed to win (default: majority)");
  ec->add_option("--pmf-out", ec_pmf, "Where to write the k,probability CSV")->capture_default_str();
  ec->add_option("--output,-o", ec_out, "Summary JSON (default stdout)");

  // map
  auto* map = app.add_subcommand("map", "Average-case map: each state to the larger mean share");
  MatchupFlags map_m;
  std::string map_store, map_alloc, map_format = "svg", map_out;
  map->add_option("--store", map_store, "Cell store")->required();
  add_matchup_flags(map, map_m);
  map->add_option("--allocation", map_alloc, "CSV state,electoral_votes overriding the bundled table");
  map->add_option("--format", map_format)->check(CLI::IsMember({"svg", "csv", "json"}))->capture_default_str();
  map->add_option("--output,-o", map_out, "Output file (default stdout)");

  // error
  auto* err = app.add_subcommand("error", "Per-state error of mean shares against ground truth");
  std::string err_store, err_truth, err_format = "csv", err_out, err_stddev = "sample";
  int err_year = 0;
  err->add_option("--store", err_store, "Cell store")->required();
  err->add_option("--truth", err_truth, "Ground truth CSV state,candidate,share_percent")->required();
  err->add_option("--year", err_year, "Election year (inferred when the store holds one)");
  err->add_option("--format", err_format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  err->add_option("--stddev", err_stddev, "Standard deviation form")
      ->check(CLI::IsMember({"sample", "population"}))->capture_default_str();
  err->add_option("--output,-o", err_out, "Output file (default stdout)");

  // swing
  auto* swing = app.add_subcommand("swing", "Signed error in swing versus non-swing states");
  std::string sw_store, sw_truth, sw_format = "json", sw_out;
  int sw_year = 0;
  double sw_margin = de::kDefaultSwingMargin;
  swing->add_option("--store", sw_store, "Cell store")->required();
  swing->add_option("--truth", sw_truth, "Ground truth CSV state,candidate,share_percent")->required();
  swing->add_option("--year", sw_year, "Election year (inferred when the store holds one)");
  swing->add_option("--margin", sw_margin, "Swing if the actual margin is below this many points")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  swing->add_option("--format", sw_format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  swing->add_option("--output,-o", sw_out, "Output file (default stdout)");

  // matchup
  auto* mu = app.add_subcommand("matchup", "Grid of hypothetical matchups");
  EndpointFlags mu_ep;
  std::string mu_store, mu_cache, mu_dems, mu_reps, mu_years, mu_alloc, mu_format = "json", mu_out;
  bool mu_live = false;
  int mu_threshold = 0;
  auto* from_store = mu->add_option("--from-store", mu_store, "Answer every cell from this store");
  auto* live = mu->add_flag("--live", mu_live, "Fetch missing cells from the endpoint");
  from_store->excludes(live);
  live->excludes(from_store);
  mu->add_option("--cache", mu_cache, "With --live: cell store read first and updated afterwards");
  mu->add_option("--dems", mu_dems, "Comma-separated row candidates (c1)")->required();
  mu->add_option("--reps", mu_reps, "Comma-separated column candidates")->required();
  mu->add_option("--years", mu_years, "Comma-separated election years")->required();
  mu->add_option("--allocation", mu_alloc, "CSV state,electoral_votes overriding the bundled tables");
  mu->add_option("--threshold", mu_threshold, "Votes needed to win (default: majority)");
  mu->add_option("--format", mu_format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  mu->add_option("--output,-o", mu_out, "Output file (default stdout)");
  add_endpoint_flags(mu, mu_ep);

  // replay-server
  auto* rs = app.add_subcommand("replay-server", "Serve a cell store as a chat-completion endpoint");
  std::string rs_store, rs_host = "127.0.0.1";
  int rs_port = 8089;
  bool rs_no_auth = false;
  rs->add_option("--store", rs_store, "Cell store to replay")->required();
  rs->add_option("--host", rs_host)->capture_default_str();
  rs->add_option("--port", rs_port)->capture_default_str();
  rs->add_flag("--no-auth", rs_no_auth, "Accept requests without a bearer token");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*fetch) {
      const auto cfg = resolve_endpoint(fetch_ep);
      auto states = fetch_states == "all" ? de::allocation_2024().states() : split_list(fetch_states);
      if (states.empty()) throw de::Error(de::ErrorCode::InvalidConfig, "--states is empty");
      std::vector<de::CellKey> keys;
      for (const auto& s : states) {
        keys.push_back({s, fetch_c1, fetch_c2, fetch_year});
        keys.push_back({s, fetch_c2, fetch_c1, fetch_year});
      }
      auto outcomes = de::fetch_cells(cfg, keys);
      std::vector<de::ShareDistribution> cells;
      std::size_t failures = 0;
      for (auto& o : outcomes) {
        if (o.cell) {
          cells.push_back(std::move(*o.cell));
        } else {
          ++failures;
          std::cerr << "failed: " << o.key.describe() << ": " << o.error->what() << "\n";
        }
      }
      if (failures) {
        std::cerr << "error: " << failures << " of " << keys.size() << " cells failed; nothing written\n";
        return kExitData;
      }
      de::save_cells(cells, fetch_out);
      std::cerr << "wrote " << cells.size() << " cells to " << fetch_out << "\n";
    } else if (*wins) {
      const auto store = de::CellStore::load(wins_store);
      const auto m = resolve_matchup(store, wins_m);
      const auto alloc = resolve_allocation(wins_alloc, m.year);
      auto outcome = de::simulate_matchup(de::collect_races(store, m.c1, m.c2, m.year, alloc.states()), alloc);
      emit(wins_format == "json" ? de::report::wins_json(outcome) : de::report::wins_csv(outcome), wins_out);
    } else if (*ec) {
      const auto store = de::CellStore::load(ec_store);
      const auto m = resolve_matchup(store, ec_m);
      const auto alloc = resolve_allocation(ec_alloc, m.year);
      std::optional<int> threshold;
      if (ec_threshold > 0) threshold = ec_threshold;
      auto outcome = de::simulate_matchup(de::collect_races(store, m.c1, m.c2, m.year, alloc.states()),
                                          alloc, threshold);
      de::io::write_file_atomic(ec_pmf, de::pmf_to_csv(outcome.ec));
      emit(de::report::ec_summary_json(outcome), ec_out);
    } else if (*map) {
      const auto store = de::CellStore::load(map_store);
      const auto m = resolve_matchup(store, map_m);
      const auto alloc = resolve_allocation(map_alloc, m.year);
      auto view = de::report::make_map_view(de::collect_races(store, m.c1, m.c2, m.year, alloc.states()), alloc);
      if (map_format == "svg")
        emit(de::report::map_svg(view), map_out);
      else if (map_format == "csv")
        emit(de::report::map_csv(view), map_out);
      else
        emit(de::report::map_json(view), map_out);
    } else if (*err || *swing) {
      const bool is_err = err->parsed();
      const auto store = de::CellStore::load(is_err ? err_store : sw_store);
      int year = is_err ? err_year : sw_year;
      if (year == 0) year = infer_year(store);
      const auto truth = de::load_ground_truth(is_err ? err_truth : sw_truth, year);
      if (is_err) {
        auto form = err_stddev == "population" ? de::StdDevForm::Population : de::StdDevForm::Sample;
        auto rep = de::error_table(store.cells(), truth, form);
        emit(err_format == "json" ? de::report::error_table_json(rep) : de::report::error_table_csv(rep), err_out);
      } else {
        auto rep = de::swing_bias_report(store.cells(), truth, sw_margin);
        emit(sw_format == "csv" ? de::report::swing_csv(rep) : de::report::swing_json(rep), sw_out);
      }
    } else if (*mu) {
      if (!mu_live && mu_store.empty()) {
        std::cerr << "matchup: one of --from-store or --live is required\n";
        return kExitUsage;
      }
      std::vector<int> years;
      for (const auto& y : split_list(mu_years)) years.push_back(de::io::parse_number<int>(y, "--years"));
      de::MatchupOptions opts;
      if (!mu_alloc.empty()) opts.allocation = de::load_allocation(mu_alloc);
      if (mu_threshold > 0) opts.threshold = mu_threshold;

      de::CellStore cache;
      std::optional<de::EndpointConfig> cfg;
      if (mu_live) {
        cfg = resolve_endpoint(mu_ep);
        if (!mu_cache.empty() && std::filesystem::exists(mu_cache)) cache = de::CellStore::load(mu_cache);
      } else {
        cache = de::CellStore::load(mu_store);
      }
      de::CellRepository repo(std::move(cache), cfg);
      std::vector<de::MatchupGrid> grids;
      try {
        grids = de::run_matchups(repo, split_list(mu_reps), split_list(mu_dems), years, opts);
      } catch (...) {
        if (mu_live && !mu_cache.empty() && repo.fetch_count() > 0) repo.store().save(mu_cache);
        throw;
      }
      if (mu_live && !mu_cache.empty() && repo.fetch_count() > 0) repo.store().save(mu_cache);
      std::cerr << "fetches: " << repo.fetch_count() << "\n";
      emit(mu_format == "csv" ? de::report::grids_csv(grids) : de::report::grids_json(grids, repo.fetch_count()),
           mu_out);
    } else if (*rs) {
      const auto store = de::CellStore::load(rs_store);
      // Server threads inherit the blocked mask, so only sigwait sees these.
      sigset_t stop_signals;
      sigemptyset(&stop_signals);
      sigaddset(&stop_signals, SIGINT);
      sigaddset(&stop_signals, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);
      de::ReplayServer server(store, {.require_auth = !rs_no_auth});
      const int port = server.start(rs_host, rs_port);
      std::cerr << "replaying " << store.size() << " cells on http://" << rs_host << ":" << port << "/v1"
                << std::endl;
      int sig = 0;
      sigwait(&stop_signals, &sig);
      server.stop();
      std::cerr << "served " << server.request_count() << " requests\n";
    }
  } catch (const de::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
