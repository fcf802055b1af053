#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lexsub/io.hpp"
#include "lexsub/sparse.hpp"

namespace lexsub {

enum class Domain { kYelp, kTwitter, kAirbnb, kSynthetic, kOther };

std::string_view domain_name(Domain domain);
Domain parse_domain(std::string_view name);

// Lowercases, splits on whitespace and strips leading/trailing punctuation.
// Apostrophes inside a word survive ("father's"); a '#' or '@' directly in
// front of the word is kept so hashtags and mentions stay whole.
std::vector<std::string> tokenize(std::string_view text);

struct Sentence {
  std::string id;
  std::string text;
  std::vector<std::string> tokens;
  int label = 0;
  Domain domain = Domain::kOther;

  static Sentence make(std::string id, std::string text, int label, Domain domain);
  bool contains(std::string_view word) const;
  // Position of the first occurrence of `word`, if any.
  std::optional<std::size_t> find(std::string_view word) const;
};

class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(Domain domain) : domain_(domain) {}
  Corpus(Domain domain, std::vector<Sentence> sentences);

  // Throws on duplicate id or a sentence from another domain.
  void add(Sentence sentence);

  Domain domain() const { return domain_; }
  const std::vector<Sentence>& sentences() const { return sentences_; }
  std::size_t size() const { return sentences_.size(); }
  bool empty() const { return sentences_.empty(); }
  const Sentence& operator[](std::size_t i) const { return sentences_[i]; }
  const Sentence* find(std::string_view id) const;
  std::optional<std::size_t> index_of(std::string_view id) const;

  // JSON-lines: {"id", "text", "label", "domain"} per line. A leading
  // {"_meta": ...} record is skipped on load.
  static Corpus load_jsonl(const std::string& path);
  void save_jsonl(const std::string& path, const io::Json* meta = nullptr) const;

 private:
  Domain domain_ = Domain::kOther;
  std::vector<Sentence> sentences_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

using StopList = std::unordered_set<std::string>;
StopList load_stop_list(const std::string& path);

class Vocabulary {
 public:
  Vocabulary() = default;

  // Words with document frequency >= min_doc_count, ordered by descending
  // document frequency and then lexicographically.
  static Vocabulary build(const Corpus& corpus, std::size_t min_doc_count,
                          const StopList* stop_list = nullptr);

  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }
  std::optional<std::uint32_t> index_of(std::string_view word) const;
  const std::string& word(std::uint32_t index) const { return words_[index]; }
  std::size_t doc_frequency(std::uint32_t index) const { return doc_frequency_[index]; }
  std::size_t n_documents() const { return n_documents_; }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::vector<std::size_t> doc_frequency_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::size_t n_documents_ = 0;
};

BinaryRow vectorize_binary(const std::vector<std::string>& tokens, const Vocabulary& vocab);
inline BinaryRow vectorize_binary(const Sentence& sentence, const Vocabulary& vocab) {
  return vectorize_binary(sentence.tokens, vocab);
}

class TfidfModel {
 public:
  TfidfModel() = default;

  // idf = ln((1 + n_documents) / (1 + df)) + 1.
  static TfidfModel fit(const Corpus& corpus, const Vocabulary& vocab);

  const Vocabulary& vocabulary() const { return vocab_; }
  double idf(std::uint32_t index) const { return idf_[index]; }
  std::size_t dimension() const { return vocab_.size(); }

  // term count x idf, L2-normalized; rows without in-vocabulary tokens stay empty.
  SparseVector transform(const std::vector<std::string>& tokens) const;
  SparseVector transform(const Sentence& sentence) const { return transform(sentence.tokens); }

 private:
  Vocabulary vocab_;
  std::vector<double> idf_;
};

inline TfidfModel fit_tfidf(const Corpus& corpus, const Vocabulary& vocab) {
  return TfidfModel::fit(corpus, vocab);
}

class PosMap {
 public:
  PosMap() = default;
  explicit PosMap(std::unordered_map<std::string, std::string> tags) : tags_(std::move(tags)) {}

  std::optional<std::string> tag(std::string_view word) const;
  std::size_t size() const { return tags_.size(); }
  bool empty() const { return tags_.empty(); }

 private:
  std::unordered_map<std::string, std::string> tags_;
};

// Accumulates (word, tag) observations and resolves each word to its modal
// tag, breaking ties with the lexicographically smallest tag.
class PosCounter {
 public:
  void add(const std::string& word, const std::string& tag, std::size_t count = 1);
  PosMap resolve() const;

 private:
  std::unordered_map<std::string, std::map<std::string, std::size_t>> counts_;
};

using TaggedSentence = std::vector<std::pair<std::string, std::string>>;
PosMap most_frequent_pos(const std::vector<TaggedSentence>& tagged_corpus);

// TSV lines `word<TAB>tag<TAB>count`.
PosMap load_tag_lexicon(const std::string& path);

class BigramVocabulary {
 public:
  BigramVocabulary() = default;

  void add(std::string_view first, std::string_view second, std::size_t count = 1);
  void add_sentence(const std::vector<std::string>& tokens);
  void merge(const BigramVocabulary& other);

  std::size_t count(std::string_view first, std::string_view second) const;
  bool contains(std::string_view first, std::string_view second,
                std::size_t min_count = 1) const {
    return count(first, second) >= std::max<std::size_t>(min_count, 1);
  }
  std::size_t size() const { return counts_.size(); }
  bool empty() const { return counts_.empty(); }
  // Sorted (first, second, count) entries.
  std::vector<std::tuple<std::string, std::string, std::size_t>> entries() const;

  bool operator==(const BigramVocabulary& other) const { return counts_ == other.counts_; }

  // TSV lines `first<TAB>second<TAB>count`.
  static BigramVocabulary load_tsv(const std::string& path);
  void save_tsv(const std::string& path) const;

 private:
  static std::string key(std::string_view first, std::string_view second);
  std::unordered_map<std::string, std::size_t> counts_;
};

BigramVocabulary build_bigram_vocabulary(const std::vector<const Corpus*>& corpora);

std::string join_tokens(const std::vector<std::string>& tokens);

// Replaces the first whitespace chunk whose token is `from` with `to`,
// keeping the chunk's surrounding punctuation and a leading capital.
std::string substitute_first_word(std::string_view text, std::string_view from, std::string_view to);

}  // namespace lexsub
