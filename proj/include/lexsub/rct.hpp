#pragma once

#include <optional>
#include <tuple>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lexsub/candidates.hpp"
#include "lexsub/corpus.hpp"
#include "lexsub/io.hpp"

namespace lexsub {

enum class Variant { kControl, kTreatment };

std::string_view variant_name(Variant variant);
Variant parse_variant(std::string_view name);

// Identifies one displayed sentence: "<sentence_id>|<w1>|<w2>|<variant>".
struct SentenceKey {
  std::string sentence_id;
  std::string control_word;
  std::string treatment_word;
  Variant variant = Variant::kControl;

  std::string str() const;
  // Fields are split from the right so sentence ids may contain '|'.
  static SentenceKey parse(std::string_view key);
};

// Attention check. High dummies must be rated >= 4, low dummies <= 2.
struct DummySentence {
  std::string key;
  std::string text;
  bool expects_high = true;

  bool accepts(int rating) const { return expects_high ? rating >= 4 : rating <= 2; }
  io::Json to_json() const;
  static DummySentence from_json(const io::Json& j, const std::string& where);
};

// The attention checks used for each domain in the original study.
std::vector<DummySentence> default_dummies(Domain domain);
// JSON-lines {"key", "text", "expects": "high"|"low"}.
std::vector<DummySentence> load_dummies(const std::string& path);

struct RctItem {
  LseTuple tuple;
  std::string estimator;
  std::string role;  // "max", "min" or "median"
  double estimate = 0.0;
  std::string control_text;
  std::string treatment_text;

  SentenceKey key(Variant variant) const;
  const std::string& text(Variant variant) const {
    return variant == Variant::kControl ? control_text : treatment_text;
  }
};

struct RctPlan {
  std::vector<RctItem> items;
  std::vector<DummySentence> dummies;
  std::vector<std::string> flags;

  io::Json to_json() const;
  static RctPlan from_json(const io::Json& j);
};

struct SampleOptions {
  int top_pairs = 10;
  int per_pair = 3;  // 1 = max; 2 = max, min; 3 = max, min, median
};

// Each estimator keeps its top_pairs pairs by best sentence estimate. A pair
// wanted by several estimators goes to the one ranking it highest (ties by
// estimator name); the loser moves on to its next pair.
RctPlan select_rct_sample(const std::vector<LseTuple>& table, const std::vector<std::string>& estimators,
                          const Corpus& corpus, const SampleOptions& options = {},
                          std::vector<DummySentence> dummies = {});

struct BatchEntry {
  std::string sentence_key;
  std::string text;
  bool dummy = false;
};

struct Batch {
  std::string batch_id;
  Variant variant = Variant::kControl;
  std::vector<BatchEntry> entries;

  std::size_t sentence_count() const;
  // One JSON object per entry.
  std::string to_jsonl() const;
};

// Control and treatment sentences are batched separately in sorted-key
// order; every batch also carries all of the plan's dummies.
std::vector<Batch> make_batches(const RctPlan& plan, int batch_size = 10);

struct RatingRecord {
  std::string worker_id;
  std::string batch_id;
  std::string sentence_key;
  int rating = 0;

  auto key() const { return std::tie(batch_id, worker_id, sentence_key, rating); }
  bool operator<(const RatingRecord& o) const { return key() < o.key(); }
  bool operator==(const RatingRecord& o) const { return key() == o.key(); }
};

// CSV with header `worker_id,batch_id,sentence_key,rating`; fields may be
// double-quoted. Ratings must be 1..5, one per (worker, sentence_key).
std::vector<RatingRecord> parse_ratings_csv(const std::string& content, const std::string& where = "ratings");
std::vector<RatingRecord> load_ratings_csv(const std::string& path);
std::string ratings_to_csv(const std::vector<RatingRecord>& ratings);

// Drops every rating of a worker who failed any dummy, then all dummy
// ratings. The result is sorted.
std::vector<RatingRecord> filter_workers(const std::vector<RatingRecord>& ratings,
                                         const std::vector<DummySentence>& dummies);

// Mean of the two middle values for even counts.
double median(std::vector<double> values);
double aggregate_effect(std::span<const int> control, std::span<const int> treatment);

// Plan tuples with rct_effect set from valid ratings. Tuples missing ratings
// for a variant are kept, flagged "rct_uncovered", without an effect.
std::vector<LseTuple> aggregate_plan(const RctPlan& plan, const std::vector<RatingRecord>& valid);

// Mean Pearson correlation between every two workers of a batch over the
// sentences both rated (at least 2); constant pairs are skipped.
double pairwise_agreement(const std::vector<RatingRecord>& ratings);

}  // namespace lexsub
