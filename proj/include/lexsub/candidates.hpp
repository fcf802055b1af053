#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lexsub/corpus.hpp"
#include "lexsub/io.hpp"
#include "lexsub/linear_model.hpp"

namespace lexsub {

struct SubstitutionPair {
  std::string control_word;    // w1
  std::string treatment_word;  // w2
  double equivalence = 0.0;
  std::string pos;

  auto key() const { return std::tie(control_word, treatment_word); }
  std::string label() const { return control_word + "->" + treatment_word; }
  io::Json to_json() const;
  static SubstitutionPair from_json(const io::Json& j, const std::string& where);
};

inline constexpr const char* kEstimatorNames[] = {"knn", "vt_rf", "cf_rf", "csf", "perception_clf"};
bool is_estimator_name(std::string_view name);

struct LseTuple {
  SubstitutionPair pair;
  std::string sentence_id;
  Domain domain = Domain::kOther;
  std::map<std::string, double> estimates;
  std::optional<double> rct_effect;
  std::vector<std::string> flags;

  io::Json to_json() const;
  static LseTuple from_json(const io::Json& j, const std::string& where);
  bool operator<(const LseTuple& other) const {
    return std::tie(pair.control_word, pair.treatment_word, sentence_id) <
           std::tie(other.pair.control_word, other.pair.treatment_word, other.sentence_id);
  }
};

std::vector<LseTuple> load_tuples(const std::string& path);
// First line is a metadata record when `meta` is non-null.
void save_tuples(const std::string& path, const std::vector<LseTuple>& tuples, const io::Json* meta = nullptr);

struct Paraphrase {
  std::string word;
  double equivalence = 0.0;
};

// Directional: rows (w1, w2, score) are neighbors of w1 only.
class ParaphraseTable {
 public:
  void add(const std::string& from, const std::string& to, double equivalence);
  // Neighbors of `word` with equivalence >= min_equivalence, ordered by word.
  std::vector<Paraphrase> candidates(std::string_view word, double min_equivalence) const;
  std::vector<std::string> sources() const;
  std::size_t size() const;
  bool empty() const { return table_.empty(); }

  // TSV lines `w1<TAB>w2<TAB>equivalence`.
  static ParaphraseTable load_tsv(const std::string& path);
  void save_tsv(const std::string& path) const;

 private:
  std::map<std::string, std::map<std::string, double>, std::less<>> table_;
};

inline std::vector<Paraphrase> paraphrase_candidates(std::string_view word, const ParaphraseTable& table,
                                                     double min_equivalence = 0.15) {
  return table.candidates(word, min_equivalence);
}

// Vocabulary, tf-idf weights and a logistic classifier fitted on one domain.
struct SentenceClassifier {
  TfidfModel tfidf;
  LinearModel model;

  static SentenceClassifier fit(const Corpus& corpus, const Vocabulary& vocab, const LogisticOptions& options);
  double coefficient(std::string_view word) const { return word_coefficient(model, tfidf.vocabulary(), word); }
};

// Words whose classifier coefficient magnitude exceeds the threshold.
std::map<std::string, double> representative_words(const SentenceClassifier& classifier, double threshold = 0.5);
std::map<std::string, double> representative_words(const Corpus& corpus, const Vocabulary& vocab,
                                                    const LogisticOptions& options, double threshold = 0.5);

bool pos_compatible(std::string_view w1, std::string_view w2, const PosMap& pos_map);

// Swaps the first occurrence of w1 for w2 and requires every resulting
// bigram that touches w2 to appear at least min_count times.
bool substitutable_in_sentence(const Sentence& sentence, const SubstitutionPair& pair,
                               const BigramVocabulary& bigrams, std::size_t min_count = 1);

struct CandidateOptions {
  double min_equivalence = 0.15;
  std::size_t min_bigram_count = 1;
};

// Admissible (pair, sentence) tuples sorted by (w1, w2, sentence id).
std::vector<LseTuple> generate_tuples(const Corpus& corpus, const std::map<std::string, double>& representative,
                                      const ParaphraseTable& table, const PosMap& pos_map,
                                      const BigramVocabulary& bigrams, const CandidateOptions& options = {});

}  // namespace lexsub
