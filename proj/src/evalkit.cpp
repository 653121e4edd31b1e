#include "reagent/evalkit.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>

namespace reagent {

std::string normalize_answer(std::string_view s) {
  std::string lowered;
  lowered.reserve(s.size());
  for (char ch : s) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::ispunct(c)) continue;  // removed, not replaced by space
    lowered.push_back(static_cast<char>(std::tolower(c)));
  }
  std::istringstream in(lowered);
  std::string tok, out;
  while (in >> tok) {
    if (tok == "a" || tok == "an" || tok == "the") continue;
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

namespace {

std::vector<std::string> norm_tokens(std::string_view s) {
  std::istringstream in(normalize_answer(s));
  std::vector<std::string> toks;
  std::string t;
  while (in >> t) toks.push_back(t);
  return toks;
}

}  // namespace

int em(std::string_view pred, std::string_view gold) {
  return normalize_answer(pred) == normalize_answer(gold) ? 1 : 0;
}

double f1(std::string_view pred, std::string_view gold) {
  const auto p = norm_tokens(pred);
  const auto g = norm_tokens(gold);
  if (p.empty() && g.empty()) return 1.0;
  if (p.empty() || g.empty()) return 0.0;
  std::map<std::string, int> counts;
  for (const auto& t : g) ++counts[t];
  int overlap = 0;
  for (const auto& t : p) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      ++overlap;
      --it->second;
    }
  }
  if (overlap == 0) return 0.0;
  const double precision = static_cast<double>(overlap) / p.size();
  const double recall = static_cast<double>(overlap) / g.size();
  return 2.0 * precision * recall / (precision + recall);
}

DatasetFormat dataset_format_from(std::string_view s) {
  if (s == "hotpot-style") return DatasetFormat::Hotpot;
  if (s == "2wiki-style") return DatasetFormat::TwoWiki;
  if (s == "musique-style") return DatasetFormat::Musique;
  raise(Err::ParseError,
        "unknown dataset format '" + std::string(s) +
            "' (expect hotpot-style | 2wiki-style | musique-style)");
}

namespace {

QAExample example_from_array_record(const json& rec, std::size_t pos) {
  QAExample ex;
  try {
    ex.id = rec.contains("_id") ? rec["_id"].get<std::string>()
                                : rec.value("id", "r" + std::to_string(pos));
    ex.question = rec.at("question").get<std::string>();
    ex.gold_answer = rec.at("answer").get<std::string>();
    if (rec.contains("context")) {
      for (const auto& c : rec["context"]) {
        const std::string title = c.at(0).get<std::string>();
        std::string passage;
        for (const auto& sent : c.at(1))
          passage += sent.get<std::string>();
        ex.context.emplace_back(title, passage);
      }
    }
  } catch (const json::exception& e) {
    raise(Err::ParseError,
          "record " + std::to_string(pos) + ": " + e.what());
  }
  if (ex.question.empty() || ex.gold_answer.empty())
    raise(Err::ParseError, "record " + std::to_string(pos) +
                               ": question and answer must be non-empty");
  return ex;
}

QAExample example_from_musique_line(const json& rec, std::size_t lineno) {
  QAExample ex;
  try {
    ex.id = rec.value("id", "r" + std::to_string(lineno));
    ex.question = rec.at("question").get<std::string>();
    ex.gold_answer = rec.at("answer").get<std::string>();
    if (rec.contains("paragraphs")) {
      for (const auto& p : rec["paragraphs"])
        ex.context.emplace_back(p.value("title", std::string{}),
                                p.at("paragraph_text").get<std::string>());
    }
  } catch (const json::exception& e) {
    raise(Err::ParseError, "line " + std::to_string(lineno) + ": " + e.what());
  }
  if (ex.question.empty() || ex.gold_answer.empty())
    raise(Err::ParseError, "line " + std::to_string(lineno) +
                               ": question and answer must be non-empty");
  return ex;
}

}  // namespace

std::vector<QAExample> load_dataset(const std::string& path,
                                    DatasetFormat format) {
  std::ifstream in(path);
  if (!in) raise(Err::ParseError, "cannot open dataset file " + path);
  std::vector<QAExample> out;
  if (format == DatasetFormat::Musique) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      json rec;
      try {
        rec = json::parse(line);
      } catch (const json::exception& e) {
        raise(Err::ParseError,
              "line " + std::to_string(lineno) + ": " + e.what());
      }
      out.push_back(example_from_musique_line(rec, lineno));
    }
  } else {
    json arr;
    try {
      in >> arr;
    } catch (const json::exception& e) {
      raise(Err::ParseError, path + ": " + e.what());
    }
    if (!arr.is_array())
      raise(Err::ParseError, path + ": expected a JSON array of records");
    for (std::size_t i = 0; i < arr.size(); ++i)
      out.push_back(example_from_array_record(arr[i], i));
  }
  return out;
}

std::vector<QAExample> sample(const std::vector<QAExample>& examples,
                              std::size_t n, std::uint64_t seed) {
  std::vector<QAExample> pool = examples;
  std::mt19937_64 rng(seed);
  const std::size_t take = std::min(n, pool.size());
  // Hand-rolled Fisher-Yates prefix: std::shuffle is not portable across
  // standard libraries.
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(
                                  rng() % (pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  return pool;
}

std::vector<Document> corpus_from(const QAExample& ex) {
  std::vector<Document> docs;
  for (std::size_t i = 0; i < ex.context.size(); ++i) {
    Document d;
    d.id = "d" + std::to_string(i);
    d.title = ex.context[i].first;
    d.text = ex.context[i].second;
    docs.push_back(std::move(d));
  }
  return docs;
}

json BenchReport::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) {
    json row{{"id", r.id},
             {"prediction", r.prediction},
             {"em", r.em},
             {"f1", r.f1},
             {"counters", r.counters.to_json()}};
    if (!r.error.empty()) row["error"] = r.error;
    rows_json.push_back(std::move(row));
  }
  return json{{"dataset", dataset},
              {"n", n},
              {"em", em},
              {"f1", f1},
              {"rows", rows_json}};
}

std::string BenchReport::to_text() const {
  std::ostringstream os;
  os << "dataset: " << dataset << "  n=" << n << "  EM=" << std::fixed
     << std::setprecision(4) << em << "  F1=" << f1 << "\n";
  os << std::left << std::setw(20) << "id" << std::setw(4) << "EM"
     << std::setw(8) << "F1" << "prediction\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(20) << r.id << std::setw(4) << r.em
       << std::setw(8) << std::setprecision(3) << r.f1
       << (r.error.empty() ? r.prediction : "<error: " + r.error + ">")
       << "\n";
  }
  return os.str();
}

BenchReport run_benchmark(const std::vector<QAExample>& examples,
                          const EngineConfig& cfg, const ScenarioSet* scripted,
                          const std::string& dataset_name) {
  BenchReport report;
  report.dataset = dataset_name;
  report.n = examples.size();
  double em_sum = 0.0, f1_sum = 0.0;

  for (const auto& ex : examples) {
    BenchRow row;
    row.id = ex.id;
    try {
      std::unique_ptr<Backend> http_backend;
      std::unique_ptr<ScriptedBackend> scripted_backend;
      std::unique_ptr<SearchIndex> index;
      const Scenario* scenario = nullptr;
      Backend* backend = nullptr;

      if (scripted) {
        scenario = scripted->by_question(ex.question);
        if (!scenario)
          raise(Err::ConfigError,
                "no scenario matches question \"" + ex.question + "\"");
        scripted_backend =
            std::make_unique<ScriptedBackend>(
                ScriptedBackend::from_json(scenario->script));
        backend = scripted_backend.get();
      } else {
        if (cfg.backend != "http" || cfg.http_base_url.empty())
          raise(Err::ConfigError,
                "live benchmark needs backend=http with a base_url");
        http_backend = std::make_unique<HttpBackend>(cfg.http_base_url,
                                                     cfg.http_model);
        backend = http_backend.get();
        index = std::make_unique<SearchIndex>(
            SearchIndex::ingest(corpus_from(ex)));
      }

      Engine engine(cfg, *backend, scenario, index.get());
      const RunResult result = engine.run_question(ex.question);
      row.prediction = result.answer;
      row.counters = result.trace.counters;
    } catch (const Error& e) {
      row.error = e.what();
      row.prediction = "";
    }
    row.em = em(row.prediction, ex.gold_answer);
    row.f1 = f1(row.prediction, ex.gold_answer);
    em_sum += row.em;
    f1_sum += row.f1;
    report.rows.push_back(std::move(row));
  }
  if (!report.rows.empty()) {
    report.em = em_sum / static_cast<double>(report.rows.size());
    report.f1 = f1_sum / static_cast<double>(report.rows.size());
  }
  return report;
}

}  // namespace reagent
