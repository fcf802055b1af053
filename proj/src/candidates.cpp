#include "lexsub/candidates.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "lexsub/error.hpp"

namespace lexsub {

io::Json SubstitutionPair::to_json() const {
  return {{"control", control_word}, {"treatment", treatment_word}, {"equivalence", equivalence}, {"pos", pos}};
}

SubstitutionPair SubstitutionPair::from_json(const io::Json& j, const std::string& where) {
  SubstitutionPair p;
  p.control_word = io::require_string(j, "control", where);
  p.treatment_word = io::require_string(j, "treatment", where);
  p.equivalence = j.contains("equivalence") ? io::require_number(j, "equivalence", where) : 0.0;
  p.pos = j.value("pos", std::string());
  if (p.control_word == p.treatment_word) {
    throw Error(ErrorKind::kSchema, where + ": control and treatment word are identical");
  }
  return p;
}

bool is_estimator_name(std::string_view name) {
  return std::find(std::begin(kEstimatorNames), std::end(kEstimatorNames), name) != std::end(kEstimatorNames);
}

io::Json LseTuple::to_json() const {
  io::Json j = {{"pair", pair.to_json()},
                {"sentence_id", sentence_id},
                {"domain", std::string(domain_name(domain))},
                {"estimates", estimates},
                {"flags", flags}};
  j["rct_effect"] = rct_effect ? io::Json(*rct_effect) : io::Json(nullptr);
  return j;
}

LseTuple LseTuple::from_json(const io::Json& j, const std::string& where) {
  LseTuple t;
  t.pair = SubstitutionPair::from_json(io::require(j, "pair", where), where);
  t.sentence_id = io::require_string(j, "sentence_id", where);
  t.domain = parse_domain(j.value("domain", std::string("other")));
  if (auto it = j.find("estimates"); it != j.end() && !it->is_null()) {
    for (const auto& [name, value] : it->items()) {
      if (!is_estimator_name(name)) throw Error(ErrorKind::kSchema, where + ": unknown estimator '" + name + "'");
      if (!value.is_number()) throw Error(ErrorKind::kSchema, where + ": estimate must be a number");
      t.estimates[name] = value.get<double>();
    }
  }
  if (auto it = j.find("rct_effect"); it != j.end() && !it->is_null()) {
    if (!it->is_number()) throw Error(ErrorKind::kSchema, where + ": rct_effect must be a number");
    t.rct_effect = it->get<double>();
  }
  if (auto it = j.find("flags"); it != j.end() && it->is_array()) t.flags = it->get<std::vector<std::string>>();
  return t;
}

std::vector<LseTuple> load_tuples(const std::string& path) {
  std::vector<LseTuple> tuples;
  io::read_jsonl(path, [&](const io::Json& record, std::size_t line) {
    if (record.contains("_meta")) return;
    tuples.push_back(LseTuple::from_json(record, path + ":" + std::to_string(line)));
  });
  return tuples;
}

void save_tuples(const std::string& path, const std::vector<LseTuple>& tuples, const io::Json* meta) {
  std::vector<io::Json> records;
  records.reserve(tuples.size() + 1);
  if (meta != nullptr) records.push_back({{"_meta", *meta}});
  for (const auto& t : tuples) records.push_back(t.to_json());
  io::write_jsonl(path, records);
}

void ParaphraseTable::add(const std::string& from, const std::string& to, double equivalence) {
  if (!(equivalence >= 0.0 && equivalence <= 1.0)) {
    throw Error(ErrorKind::kSchema, "paraphrase equivalence must be in [0, 1]: " + from + " -> " + to);
  }
  if (from == to) return;
  auto& row = table_[from];
  auto [it, inserted] = row.emplace(to, equivalence);
  if (!inserted) it->second = std::max(it->second, equivalence);
}

std::vector<Paraphrase> ParaphraseTable::candidates(std::string_view word, double min_equivalence) const {
  std::vector<Paraphrase> out;
  auto it = table_.find(word);
  if (it == table_.end()) return out;
  for (const auto& [to, score] : it->second) {
    if (score >= min_equivalence) out.push_back({to, score});
  }
  return out;
}

std::vector<std::string> ParaphraseTable::sources() const {
  std::vector<std::string> out;
  for (const auto& [from, row] : table_) out.push_back(from);
  return out;
}

std::size_t ParaphraseTable::size() const {
  std::size_t n = 0;
  for (const auto& [from, row] : table_) n += row.size();
  return n;
}

ParaphraseTable ParaphraseTable::load_tsv(const std::string& path) {
  ParaphraseTable table;
  io::read_tsv(path, [&](const std::vector<std::string>& f, std::size_t line) {
    const std::string where = path + ":" + std::to_string(line);
    if (f.size() != 3) throw Error(ErrorKind::kSchema, where + ": expected w1<TAB>w2<TAB>equivalence");
    const auto from = tokenize(f[0]);
    const auto to = tokenize(f[1]);
    if (from.size() != 1 || to.size() != 1) return;  // single-word substitutions only
    table.add(from.front(), to.front(), io::parse_double(f[2], where));
  });
  return table;
}

void ParaphraseTable::save_tsv(const std::string& path) const {
  std::string out;
  for (const auto& [from, row] : table_) {
    for (const auto& [to, score] : row) {
      out += from + '\t' + to + '\t' + io::Json(score).dump() + '\n';
    }
  }
  io::write_file(path, out);
}

SentenceClassifier SentenceClassifier::fit(const Corpus& corpus, const Vocabulary& vocab,
                                           const LogisticOptions& options) {
  SentenceClassifier c;
  c.tfidf = TfidfModel::fit(corpus, vocab);
  SparseMatrix x;
  x.n_cols = vocab.size();
  std::vector<int> y;
  for (const auto& s : corpus.sentences()) {
    x.rows.push_back(c.tfidf.transform(s));
    y.push_back(s.label);
  }
  c.model = fit_logistic(x, y, options, std::string(domain_name(corpus.domain())) + ".tfidf");
  return c;
}

std::map<std::string, double> representative_words(const SentenceClassifier& classifier, double threshold) {
  std::map<std::string, double> out;
  const auto& vocab = classifier.tfidf.vocabulary();
  for (std::uint32_t j = 0; j < vocab.size(); ++j) {
    const double w = classifier.model.weights[j];
    if (std::abs(w) > threshold) out.emplace(vocab.word(j), w);
  }
  return out;
}

std::map<std::string, double> representative_words(const Corpus& corpus, const Vocabulary& vocab,
                                                    const LogisticOptions& options, double threshold) {
  return representative_words(SentenceClassifier::fit(corpus, vocab, options), threshold);
}

bool pos_compatible(std::string_view w1, std::string_view w2, const PosMap& pos_map) {
  const auto a = pos_map.tag(w1);
  const auto b = pos_map.tag(w2);
  return a && b && *a == *b;
}

bool substitutable_in_sentence(const Sentence& sentence, const SubstitutionPair& pair,
                               const BigramVocabulary& bigrams, std::size_t min_count) {
  const auto k = sentence.find(pair.control_word);
  if (!k) {
    throw Error(ErrorKind::kInvalidArgument,
                "control word not in sentence: '" + pair.control_word + "' / " + sentence.id);
  }
  const auto& tokens = sentence.tokens;
  const auto& w2 = pair.treatment_word;
  if (*k > 0 && !bigrams.contains(tokens[*k - 1], w2, min_count)) return false;
  if (*k + 1 < tokens.size() && !bigrams.contains(w2, tokens[*k + 1], min_count)) return false;
  return true;
}

std::vector<LseTuple> generate_tuples(const Corpus& corpus, const std::map<std::string, double>& representative,
                                      const ParaphraseTable& table, const PosMap& pos_map,
                                      const BigramVocabulary& bigrams, const CandidateOptions& options) {
  std::unordered_map<std::string, std::vector<std::size_t>> postings;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto tokens = corpus[i].tokens;
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    for (auto& t : tokens) postings[t].push_back(i);
  }

  std::vector<LseTuple> out;
  for (const auto& w1 : table.sources()) {
    auto hit = postings.find(w1);
    if (hit == postings.end()) continue;
    for (const auto& candidate : table.candidates(w1, options.min_equivalence)) {
      const auto& w2 = candidate.word;
      if (representative.count(w1) == 0 && representative.count(w2) == 0) continue;
      if (!pos_compatible(w1, w2, pos_map)) continue;
      SubstitutionPair pair{w1, w2, candidate.equivalence, *pos_map.tag(w1)};
      for (auto i : hit->second) {
        const auto& s = corpus[i];
        if (!substitutable_in_sentence(s, pair, bigrams, options.min_bigram_count)) continue;
        LseTuple t;
        t.pair = pair;
        t.sentence_id = s.id;
        t.domain = s.domain;
        out.push_back(std::move(t));
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace lexsub
