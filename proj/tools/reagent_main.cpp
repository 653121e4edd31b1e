// Command-line entry point: single questions, benchmarks, log replay and
// inspection, corpus ingestion.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "reagent/evalkit.hpp"

namespace {

using namespace reagent;

struct CommonFlags {
  std::string config_path;
  json overrides = json::object();
};

EngineConfig build_config(const CommonFlags& flags) {
  EngineConfig cfg = flags.config_path.empty()
                         ? EngineConfig::defaults()
                         : EngineConfig::load_file(flags.config_path);
  cfg.apply_patch(flags.overrides);
  return cfg;
}

void add_override_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "engine config JSON file");
  auto opt = [&flags, cmd](const char* flag, const char* key,
                           const char* help) {
    cmd->add_option_function<int>(
        flag,
        [&flags, key](int v) { flags.overrides[key] = v; },
        help);
  };
  opt("--max-subquestions", "max_subquestions", "decomposition cap");
  opt("--local-bt-depth", "local_bt_depth",
      "local backtrack depth in checkpoints (0 disables)");
  opt("--max-global-rollbacks", "max_global_rollbacks", "global rollback cap");
  opt("--max-rounds", "max_rounds", "round budget");
  opt("--top-M", "top_M", "evidence passages per sub-question");
  opt("--k-cand", "k_cand", "candidate depth per retrieval channel");
  opt("--workers", "workers", "parallel sub-question workers");
  cmd->add_option_function<std::string>(
      "--backend",
      [&flags](const std::string& v) { flags.overrides["backend"] = v; },
      "scripted | http");
}

int cmd_ask(const std::string& question_flag, const std::string& scenario_path,
            const std::string& corpus_path, const std::string& predicates_path,
            const std::string& trace_out, const std::string& log_out,
            const CommonFlags& flags) {
  EngineConfig cfg = build_config(flags);

  std::unique_ptr<ScriptedBackend> scripted;
  std::unique_ptr<HttpBackend> http;
  std::unique_ptr<SearchIndex> index;
  ScenarioSet set;
  const Scenario* scenario = nullptr;
  Backend* backend = nullptr;

  PredicateRegistry reg;
  if (!predicates_path.empty())
    reg = PredicateRegistry::load_file(predicates_path);

  if (!scenario_path.empty()) {
    set = ScenarioSet::load_file(scenario_path);
    if (!question_flag.empty()) {
      scenario = set.by_question(question_flag);
      if (!scenario && set.scenarios.size() == 1)
        scenario = &set.scenarios.front();
    } else if (!set.scenarios.empty()) {
      scenario = &set.scenarios.front();
    }
    if (!scenario) raise(Err::ConfigError, "no scenario matches the question");
    scripted = std::make_unique<ScriptedBackend>(
        ScriptedBackend::from_json(scenario->script));
    backend = scripted.get();
  } else if (!corpus_path.empty()) {
    index = std::make_unique<SearchIndex>(
        SearchIndex::ingest(SearchIndex::load_corpus_file(corpus_path)));
    if (cfg.backend != "http" || cfg.http_base_url.empty())
      raise(Err::ConfigError,
            "corpus mode needs backend=http with http.base_url configured");
    http = std::make_unique<HttpBackend>(cfg.http_base_url, cfg.http_model);
    backend = http.get();
  } else {
    raise(Err::ConfigError, "ask needs --scenario or --corpus");
  }

  Engine engine(cfg, *backend, scenario, index.get(), reg);
  RunResult result;
  if (scenario && scenario->is_puzzle()) {
    result = engine.run_puzzle();
  } else {
    const std::string q =
        !question_flag.empty() ? question_flag
                               : (scenario ? scenario->question : "");
    if (q.empty()) raise(Err::ConfigError, "no question given");
    result = engine.run_question(q);
  }

  std::cout << result.answer << "\n";
  const auto& c = result.trace.counters;
  std::cout << "rounds=" << result.trace.rounds
            << " local_backtracks=" << c.local_backtracks
            << " global_rollbacks=" << c.global_rollbacks
            << " challenges=" << c.challenges << " overrides=" << c.overrides
            << " backend_calls=" << c.backend_calls << "\n";
  if (!trace_out.empty()) {
    std::ofstream out(trace_out);
    if (!out) raise(Err::ConfigError, "cannot write trace to " + trace_out);
    out << result.trace.to_json(engine.store().journal()).dump(2) << "\n";
  }
  if (!log_out.empty()) {
    std::ofstream out(log_out);
    if (!out) raise(Err::ConfigError, "cannot write log to " + log_out);
    engine.store().journal().save(out);
  }
  return result.answer == kDisclaimed ? 2 : 0;
}

int cmd_bench(const std::string& dataset_path, const std::string& format_name,
              int n, std::uint64_t seed, const std::string& scenario_path,
              const std::string& out_path, const CommonFlags& flags) {
  EngineConfig cfg = build_config(flags);
  auto examples = load_dataset(dataset_path, dataset_format_from(format_name));
  if (n > 0) examples = sample(examples, static_cast<std::size_t>(n), seed);

  ScenarioSet set;
  const ScenarioSet* scripted = nullptr;
  if (!scenario_path.empty()) {
    set = ScenarioSet::load_file(scenario_path);
    scripted = &set;
  }
  const BenchReport report =
      run_benchmark(examples, cfg, scripted, dataset_path);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) raise(Err::ConfigError, "cannot write report to " + out_path);
    out << report.to_json().dump(2) << "\n";
  }
  std::cout << report.to_text();
  return 0;
}

int cmd_replay(const std::string& log_path) {
  const auto entries = Journal::load_file(log_path);
  const ReplayState st = replay(entries);
  if (st.final_answer) std::cout << "final-answer: " << *st.final_answer << "\n";
  for (const auto& owner : st.base.owners()) {
    const KnowledgeSet* ks = st.base.set_of(owner);
    if (!ks || ks->live.empty()) continue;
    std::cout << owner << " (as_of " << ks->as_of << "):\n";
    for (const auto& id : ks->live) {
      const Assertion* a = st.base.find(id);
      std::cout << "  " << id << "  " << (a ? fact_line(*a) : "?") << "\n";
    }
  }
  return 0;
}

int cmd_inspect(const std::string& log_path, const std::string& filter) {
  const auto entries = Journal::load_file(log_path);
  if (!filter.empty()) entry_kind_from(filter);  // validates
  for (const auto& e : entries) {
    if (!filter.empty() && entry_kind_name(e.kind) != filter) continue;
    std::cout << e.seq << "\t" << e.time << "\t" << entry_kind_name(e.kind)
              << "\t" << e.actor << "\t" << e.payload.dump() << "\n";
  }
  return 0;
}

int cmd_ingest(const std::string& corpus_path) {
  const auto docs = SearchIndex::load_corpus_file(corpus_path);
  const SearchIndex index = SearchIndex::ingest(docs);
  std::cout << "documents: " << index.size() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reversible multi-agent reasoning over multi-hop questions"};
  app.require_subcommand(1);

  std::string question, scenario_path, corpus_path, predicates_path, trace_out,
      log_out;
  CommonFlags ask_flags;
  auto* ask = app.add_subcommand("ask", "answer one question");
  ask->add_option("--question", question, "the question to answer");
  ask->add_option("--scenario", scenario_path, "scripted scenario file");
  ask->add_option("--corpus", corpus_path, "NDJSON corpus file");
  ask->add_option("--predicates", predicates_path, "predicate registry JSON");
  ask->add_option("--trace-out", trace_out, "write the run trace JSON here");
  ask->add_option("--log-out", log_out, "write the journal NDJSON here");
  add_override_flags(ask, ask_flags);

  std::string dataset_path, format_name = "hotpot-style", bench_scenario,
              bench_out;
  int bench_n = 0;
  std::uint64_t bench_seed = 0;
  CommonFlags bench_flags;
  auto* bench = app.add_subcommand("bench", "run an EM/F1 benchmark");
  bench->add_option("--dataset", dataset_path, "dataset file")->required();
  bench->add_option("--format", format_name,
                    "hotpot-style | 2wiki-style | musique-style");
  bench->add_option("--n", bench_n, "sample size (0 = all)");
  bench->add_option("--seed", bench_seed, "sampling seed");
  bench->add_option("--scenario", bench_scenario, "scripted scenario set");
  bench->add_option("--out", bench_out, "report JSON path");
  add_override_flags(bench, bench_flags);

  std::string replay_log;
  auto* replay_cmd = app.add_subcommand("replay", "rebuild state from a log");
  replay_cmd->add_option("--log", replay_log, "journal NDJSON file")
      ->required();

  std::string inspect_log, inspect_filter;
  auto* inspect = app.add_subcommand("inspect", "print journal entries");
  inspect->add_option("--log", inspect_log, "journal NDJSON file")->required();
  inspect->add_option("--filter", inspect_filter, "entry kind to keep");

  std::string ingest_corpus;
  auto* ingest = app.add_subcommand("ingest", "build and validate an index");
  ingest->add_option("--corpus", ingest_corpus, "NDJSON corpus file")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (ask->parsed())
      return cmd_ask(question, scenario_path, corpus_path, predicates_path,
                     trace_out, log_out, ask_flags);
    if (bench->parsed())
      return cmd_bench(dataset_path, format_name, bench_n, bench_seed,
                       bench_scenario, bench_out, bench_flags);
    if (replay_cmd->parsed()) return cmd_replay(replay_log);
    if (inspect->parsed()) return cmd_inspect(inspect_log, inspect_filter);
    if (ingest->parsed()) return cmd_ingest(ingest_corpus);
  } catch (const reagent::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
