#pragma once

#include <string>
#include <vector>

#include "reagent/engine.hpp"
#include "reagent/retrieval.hpp"

namespace reagent {

struct QAExample {
  std::string id;
  std::string question;
  std::string gold_answer;
  std::vector<std::pair<std::string, std::string>> context;  // (title, passage)
};

/// Standard extractive-QA normalization: lowercase, strip punctuation,
/// drop the articles a/an/the, collapse whitespace.
std::string normalize_answer(std::string_view s);

/// 1 iff the normalized strings are equal.
int em(std::string_view pred, std::string_view gold);

/// Token-overlap F1 over normalized tokens (multiset overlap); 1 when both
/// sides normalize to empty, 0 when exactly one does.
double f1(std::string_view pred, std::string_view gold);

enum class DatasetFormat { Hotpot, TwoWiki, Musique };
DatasetFormat dataset_format_from(std::string_view s);

/// Loads a benchmark file into QAExamples. hotpot-style and 2wiki-style are
/// JSON arrays with context [[title,[sentences]],...]; musique-style is JSONL
/// with paragraphs [{title,paragraph_text},...].
std::vector<QAExample> load_dataset(const std::string& path,
                                    DatasetFormat format);

/// Deterministic n-element sample (seeded Fisher-Yates prefix).
std::vector<QAExample> sample(const std::vector<QAExample>& examples,
                              std::size_t n, std::uint64_t seed);

/// Context passages mapped into retrieval corpus documents.
std::vector<Document> corpus_from(const QAExample& ex);

struct BenchRow {
  std::string id;
  std::string prediction;
  int em = 0;
  double f1 = 0.0;
  RunCounters counters;
  std::string error;  // non-empty when the engine failed on this row
};

struct BenchReport {
  std::string dataset;
  std::size_t n = 0;
  double em = 0.0;
  double f1 = 0.0;
  std::vector<BenchRow> rows;

  json to_json() const;
  std::string to_text() const;  // aligned columns for humans
};

/// Runs the engine per example and aggregates EM/F1. Scripted mode matches
/// examples to scenarios by question text; live mode builds a per-example
/// corpus from the contexts. Engine failures mark the row, never the batch.
BenchReport run_benchmark(const std::vector<QAExample>& examples,
                          const EngineConfig& cfg,
                          const ScenarioSet* scripted,
                          const std::string& dataset_name);

}  // namespace reagent
