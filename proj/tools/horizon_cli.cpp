// Copyright 2026 The Horizon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <chrono>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "horizon/batch.hpp"
#include "horizon/http_api.hpp"
#include "horizon/llm_http.hpp"

using namespace horizon;

namespace {

json read_json_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot read '" + path + "'");
  return json::parse(in);
}

int run_batch_command(BatchConfig config, const std::string& config_path,
                      const CLI::App& cmd)
{
  if (!config_path.empty())
  {
    // File values first, then any flag given on the command line wins.
    BatchConfig from_file = read_json_file(config_path).get<BatchConfig>();
    if (cmd.count("--catalog")) from_file.catalog_path = config.catalog_path;
    if (cmd.count("--n")) from_file.n_values = config.n_values;
    if (cmd.count("--reps")) from_file.reps = config.reps;
    if (cmd.count("--base-seed")) from_file.base_seed = config.base_seed;
    if (cmd.count("--seeds")) from_file.seeds = config.seeds;
    if (cmd.count("--agent")) from_file.agent = config.agent;
    if (cmd.count("--human-policy")) from_file.human_policies = config.human_policies;
    if (cmd.count("--condition")) from_file.condition = config.condition;
    if (cmd.count("--out")) from_file.out_dir = config.out_dir;
    if (cmd.count("--jobs")) from_file.jobs = config.jobs;
    if (cmd.count("--no-logs")) from_file.write_logs = false;
    config = std::move(from_file);
  }
  const auto start = std::chrono::steady_clock::now();
  const BatchResult result = run_batch(config);
  const double seconds =
    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << result.rows.size() << " sessions in " << seconds << " s -> "
            << (config.out_dir / "metrics.csv").string() << "\n"
            << result.summary_csv;
  return 0;
}

int run_serve(const std::string& host, int port, const std::string& catalog_path,
              const std::string& log_dir, const std::string& llm_config_path)
{
  ServiceOptions options;
  if (!log_dir.empty())
    options.log_root = log_dir;
  if (!llm_config_path.empty())
  {
    const auto config = read_json_file(llm_config_path).get<LlmClientConfig>();
    auto agent = std::make_shared<const LlmAgent>(config, http_chat_transport(config));
    options.agents["llm"] = [agent](const std::vector<Issue>&, std::uint64_t) {
      return llm_opponent(agent);
    };
  }
  TaskCatalog catalog = catalog_path.empty() ? default_catalog() : load_catalog(catalog_path);
  require_nontrivial(catalog);
  SessionService service(std::move(catalog), std::move(options));
  httplib::Server server;
  mount_routes(server, service);
  std::cout << "listening on " << host << ":" << port << std::endl;
  if (!server.listen(host, port))
  {
    std::cerr << "cannot listen on " << host << ":" << port << "\n";
    return 1;
  }
  return 0;
}

int run_replay(const std::string& path)
{
  const StoredSession stored = load_session(path);
  const SessionState replayed = replay_session(stored);
  const MetricsReport metrics = compute_metrics(replayed.log);
  bool same_turns = replayed.log.turns == stored.log.turns;
  bool same_outcome = replayed.log.outcome == stored.log.outcome;
  bool same_metrics = metrics == stored.metrics;
  std::cout << "turns:   " << (same_turns ? "identical" : "DIFFER") << "\n"
            << "outcome: " << (same_outcome ? "identical" : "DIFFER") << "\n"
            << "metrics: " << (same_metrics ? "identical" : "DIFFER") << "\n";
  return same_turns && same_outcome && same_metrics ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Negotiation horizon workbench"};
  app.require_subcommand(1);

  BatchConfig batch;
  std::string batch_config_path;
  std::string catalog_path;
  std::string condition = "decision_support";
  auto* batch_cmd = app.add_subcommand("batch", "Dimensionality sweep with simulated tenants");
  batch_cmd->add_option("--config", batch_config_path, "JSON file with the same keys as the flags");
  batch_cmd->add_option("--catalog", catalog_path, "Task catalog JSON (default: built-in)");
  batch_cmd->add_option("--n", batch.n_values, "Dimensionalities")->delimiter(',');
  batch_cmd->add_option("--reps", batch.reps, "Sessions per dimensionality");
  batch_cmd->add_option("--base-seed", batch.base_seed, "First seed when --seeds is absent");
  batch_cmd->add_option("--seeds", batch.seeds, "Explicit seeds")->delimiter(',');
  batch_cmd->add_option("--agent", batch.agent, "Agent kind")->check(CLI::IsMember({"scripted"}));
  batch_cmd->add_option("--human-policy", batch.human_policies, "Simulated tenant policies")
    ->delimiter(',')
    ->check(CLI::IsMember(human_policy_names()));
  batch_cmd->add_option("--condition", condition, "baseline or decision_support")
    ->check(CLI::IsMember({"baseline", "decision_support"}));
  batch_cmd->add_option("--out", batch.out_dir, "Output directory");
  batch_cmd->add_option("--jobs", batch.jobs, "Worker threads (0: all cores)");
  bool no_logs = false;
  batch_cmd->add_flag("--no-logs", no_logs, "Skip per-session logs");

  auto* conformance_cmd =
    app.add_subcommand("conformance", "Check the worked example against its golden values");
  double direct_override = kDirectLikelihood;
  conformance_cmd->add_option("--direct-likelihood", direct_override,
    "Override the direct-proposal likelihood (mutation check)");

  std::string host = "127.0.0.1";
  int port = 8080;
  std::string log_dir;
  std::string llm_config;
  auto* serve_cmd = app.add_subcommand("serve", "Run the session API over HTTP");
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--port", port);
  serve_cmd->add_option("--catalog", catalog_path);
  serve_cmd->add_option("--log-dir", log_dir, "Where finalized sessions are stored");
  serve_cmd->add_option("--llm-config", llm_config,
    "JSON client config enabling agent \"llm\"; key from the env var it names");

  std::string validate_path;
  auto* validate_cmd =
    app.add_subcommand("validate-catalog", "Check a catalog against the anti-triviality rules");
  validate_cmd->add_option("path", validate_path)->required();

  std::string export_path;
  auto* export_cmd = app.add_subcommand("export-catalog", "Write the built-in catalog as JSON");
  export_cmd->add_option("path", export_path)->required();

  std::string replay_path;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run a stored scripted session");
  replay_cmd->add_option("path", replay_path)->required();

  CLI11_PARSE(app, argc, argv);

  try
  {
    if (*batch_cmd)
    {
      if (!catalog_path.empty())
        batch.catalog_path = catalog_path;
      batch.condition = condition_from_string(condition);
      batch.write_logs = !no_logs;
      return run_batch_command(batch, batch_config_path, *batch_cmd);
    }
    if (*conformance_cmd)
    {
      ModelParameters params;
      params.direct_likelihood = direct_override;
      const auto report = conformance_appendix_a(params);
      std::cout << format_conformance(report);
      return report.pass() ? 0 : 1;
    }
    if (*serve_cmd)
      return run_serve(host, port, catalog_path, log_dir, llm_config);
    if (*validate_cmd)
    {
      const auto violations = validate_anti_triviality(load_catalog(validate_path));
      for (const auto& v : violations)
        std::cout << "violation: " << v.detail << "\n";
      std::cout << (violations.empty() ? "catalog ok\n" : "catalog rejected\n");
      return violations.empty() ? 0 : 1;
    }
    if (*export_cmd)
    {
      save_catalog(default_catalog(), export_path);
      return 0;
    }
    if (*replay_cmd)
      return run_replay(replay_path);
  }
  catch (const std::exception& e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
