#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lexsub/corpus.hpp"
#include "lexsub/error.hpp"
#include "lexsub/forest.hpp"
#include "lexsub/io.hpp"
#include "lexsub/synthetic.hpp"

namespace lexsub {

struct PerceptionTrainingSource {
  std::string corpus;
  std::string tuples;  // tuples carrying rct_effect
};

// Everything a run needs. Loaded from a JSON document; relative paths are
// resolved against the config file's directory.
struct PipelineConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "lexsub-out";
  Domain domain = Domain::kSynthetic;
  std::map<std::string, std::string> corpora;  // domain name -> corpus path
  // Empty paths fall back to the synth outputs when the domain is synthetic.
  std::string paraphrase_table;
  std::string tag_lexicon;
  std::string stop_list;
  std::string truth;

  double coefficient_threshold = 0.5;
  double min_equivalence = 0.15;
  std::size_t min_doc_count = 8;
  std::size_t min_bigram_count = 1;
  std::optional<double> l2_strength;

  std::vector<std::string> estimators{"knn", "vt_rf", "cf_rf", "csf"};
  int knn_k = 30;
  ForestConfig forest;
  ForestConfig causal_forest;

  SyntheticSpec synthetic;

  int top_pairs = 10;
  int per_pair = 3;
  int batch_size = 10;
  std::string dummies;
  std::string ratings;

  std::string perception_model;
  std::vector<PerceptionTrainingSource> perception_training;

  std::size_t top_k = 1000;

  std::string base_dir = ".";

  static PipelineConfig from_json(const io::Json& j, const std::string& base_dir = ".");
  static PipelineConfig load(const std::string& path);
  // Resolved settings. Excludes output_dir so relocated runs hash equal.
  io::Json to_json() const;
  std::string hash() const;
  std::string resolve(const std::string& path) const;
  void validate() const;
};

struct RunOptions {
  int jobs = 1;
  std::optional<std::vector<std::string>> estimators;  // overrides the config
  std::ostream* log = nullptr;
};

const std::vector<std::string>& pipeline_commands();

// Runs one stage, reading and writing files under config.output_dir.
void run_command(const std::string& command, const PipelineConfig& config, const RunOptions& options = {});

// {"error": {"kind", "exit_code", "message", "command"}}
io::Json error_record(const Error& error, const std::string& command);

}  // namespace lexsub
