#include "lexsub/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>

#include "lexsub/error.hpp"
#include "lexsub/io.hpp"

namespace lexsub {
namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// ASCII punctuation only; bytes of multi-byte UTF-8 sequences count as word characters.
bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c); }

std::string normalize_chunk(std::string_view chunk) {
  std::size_t begin = 0;
  std::size_t end = chunk.size();
  while (end > begin && is_punct(static_cast<unsigned char>(chunk[end - 1]))) --end;
  while (begin < end && is_punct(static_cast<unsigned char>(chunk[begin]))) ++begin;
  if (begin == end) return {};
  const char marker = begin > 0 ? chunk[begin - 1] : '\0';
  std::string token;
  token.reserve(end - begin + 1);
  if (marker == '#' || marker == '@') token.push_back(marker);
  for (std::size_t i = begin; i < end; ++i) {
    const auto c = static_cast<unsigned char>(chunk[i]);
    token.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
  }
  return token;
}

}  // namespace

std::string_view domain_name(Domain domain) {
  switch (domain) {
    case Domain::kYelp: return "yelp";
    case Domain::kTwitter: return "twitter";
    case Domain::kAirbnb: return "airbnb";
    case Domain::kSynthetic: return "synthetic";
    case Domain::kOther: return "other";
  }
  return "other";
}

Domain parse_domain(std::string_view name) {
  if (name == "yelp") return Domain::kYelp;
  if (name == "twitter") return Domain::kTwitter;
  if (name == "airbnb") return Domain::kAirbnb;
  if (name == "synthetic") return Domain::kSynthetic;
  if (name == "other") return Domain::kOther;
  throw Error(ErrorKind::kSchema, "unknown domain '" + std::string(name) + "'");
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) {
      auto token = normalize_chunk(text.substr(start, i - start));
      if (!token.empty()) tokens.push_back(std::move(token));
    }
  }
  return tokens;
}

std::string substitute_first_word(std::string_view text, std::string_view from, std::string_view to) {
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(static_cast<unsigned char>(text[i]))) ++i;
    if (i == start) continue;
    const auto chunk = text.substr(start, i - start);
    if (normalize_chunk(chunk) != from) continue;
    std::size_t begin = 0;
    std::size_t end = chunk.size();
    while (end > begin && is_punct(static_cast<unsigned char>(chunk[end - 1]))) --end;
    while (begin < end && is_punct(static_cast<unsigned char>(chunk[begin]))) ++begin;
    if (begin > 0 && (chunk[begin - 1] == '#' || chunk[begin - 1] == '@')) --begin;
    std::string replacement(to);
    const auto first = static_cast<unsigned char>(chunk[begin]);
    if (!replacement.empty() && std::isupper(first) && first < 0x80) {
      replacement[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(replacement[0])));
    }
    std::string out(text.substr(0, start + begin));
    out += replacement;
    out += text.substr(start + end);
    return out;
  }
  throw Error(ErrorKind::kInvalidArgument, "word '" + std::string(from) + "' not in text");
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

Sentence Sentence::make(std::string id, std::string text, int label, Domain domain) {
  if (label != 0 && label != 1) {
    throw Error(ErrorKind::kSchema, "sentence '" + id + "': label must be 0 or 1");
  }
  Sentence s;
  s.tokens = tokenize(text);
  s.id = std::move(id);
  s.text = std::move(text);
  s.label = label;
  s.domain = domain;
  return s;
}

bool Sentence::contains(std::string_view word) const { return find(word).has_value(); }

std::optional<std::size_t> Sentence::find(std::string_view word) const {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == word) return i;
  }
  return std::nullopt;
}

Corpus::Corpus(Domain domain, std::vector<Sentence> sentences) : domain_(domain) {
  sentences_.reserve(sentences.size());
  for (auto& s : sentences) add(std::move(s));
}

void Corpus::add(Sentence sentence) {
  if (sentence.domain != domain_) {
    throw Error(ErrorKind::kSchema, "sentence '" + sentence.id + "' has domain " +
                                        std::string(domain_name(sentence.domain)) +
                                        ", corpus is " + std::string(domain_name(domain_)));
  }
  if (by_id_.count(sentence.id) != 0) {
    throw Error(ErrorKind::kSchema, "duplicate sentence id '" + sentence.id + "'");
  }
  by_id_.emplace(sentence.id, sentences_.size());
  sentences_.push_back(std::move(sentence));
}

const Sentence* Corpus::find(std::string_view id) const {
  auto idx = index_of(id);
  return idx ? &sentences_[*idx] : nullptr;
}

std::optional<std::size_t> Corpus::index_of(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

Corpus Corpus::load_jsonl(const std::string& path) {
  std::optional<Corpus> corpus;
  io::read_jsonl(path, [&](const io::Json& record, std::size_t line) {
    if (record.is_object() && record.contains("_meta")) return;
    const std::string where = path + ":" + std::to_string(line);
    const auto domain = parse_domain(io::require_string(record, "domain", where));
    const auto label = io::require_integer(record, "label", where);
    if (label != 0 && label != 1) throw Error(ErrorKind::kSchema, where + ": label must be 0 or 1");
    if (!corpus) corpus.emplace(domain);
    corpus->add(Sentence::make(io::require_string(record, "id", where),
                               io::require_string(record, "text", where),
                               static_cast<int>(label), domain));
  });
  return corpus ? std::move(*corpus) : Corpus();
}

void Corpus::save_jsonl(const std::string& path, const io::Json* meta) const {
  std::vector<io::Json> records;
  records.reserve(sentences_.size() + 1);
  if (meta != nullptr) records.push_back({{"_meta", *meta}});
  for (const auto& s : sentences_) {
    records.push_back({{"id", s.id}, {"text", s.text}, {"label", s.label},
                       {"domain", std::string(domain_name(s.domain))}});
  }
  io::write_jsonl(path, records);
}

StopList load_stop_list(const std::string& path) {
  StopList words;
  io::read_tsv(path, [&](const std::vector<std::string>& fields, std::size_t) {
    for (auto& t : tokenize(fields.front())) words.insert(std::move(t));
  });
  return words;
}

Vocabulary Vocabulary::build(const Corpus& corpus, std::size_t min_doc_count,
                             const StopList* stop_list) {
  if (min_doc_count < 1) throw Error(ErrorKind::kInvalidArgument, "min_doc_count must be >= 1");
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& s : corpus.sentences()) {
    std::vector<std::string_view> distinct(s.tokens.begin(), s.tokens.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (auto w : distinct) ++df[std::string(w)];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [word, count] : df) {
    if (count < min_doc_count) continue;
    if (stop_list != nullptr && stop_list->count(word) != 0) continue;
    kept.emplace_back(word, count);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary vocab;
  vocab.n_documents_ = corpus.size();
  vocab.words_.reserve(kept.size());
  vocab.doc_frequency_.reserve(kept.size());
  for (auto& [word, count] : kept) {
    vocab.index_.emplace(word, static_cast<std::uint32_t>(vocab.words_.size()));
    vocab.words_.push_back(word);
    vocab.doc_frequency_.push_back(count);
  }
  return vocab;
}

std::optional<std::uint32_t> Vocabulary::index_of(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

BinaryRow vectorize_binary(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
  BinaryRow row;
  for (const auto& t : tokens) {
    if (auto idx = vocab.index_of(t)) row.push_back(*idx);
  }
  std::sort(row.begin(), row.end());
  row.erase(std::unique(row.begin(), row.end()), row.end());
  return row;
}

TfidfModel TfidfModel::fit(const Corpus& corpus, const Vocabulary& vocab) {
  if (vocab.n_documents() != corpus.size()) {
    throw Error(ErrorKind::kInvalidArgument, "vocabulary was built from a different corpus");
  }
  TfidfModel model;
  model.vocab_ = vocab;
  model.idf_.resize(vocab.size());
  const double n = static_cast<double>(vocab.n_documents());
  for (std::uint32_t j = 0; j < vocab.size(); ++j) {
    const double df = static_cast<double>(vocab.doc_frequency(j));
    model.idf_[j] = std::log((1.0 + n) / (1.0 + df)) + 1.0;
  }
  return model;
}

SparseVector TfidfModel::transform(const std::vector<std::string>& tokens) const {
  std::vector<std::uint32_t> hits;
  for (const auto& t : tokens) {
    if (auto idx = vocab_.index_of(t)) hits.push_back(*idx);
  }
  std::sort(hits.begin(), hits.end());
  SparseVector v;
  for (std::size_t i = 0; i < hits.size();) {
    std::size_t j = i;
    while (j < hits.size() && hits[j] == hits[i]) ++j;
    v.indices.push_back(hits[i]);
    v.values.push_back(static_cast<double>(j - i) * idf_[hits[i]]);
    i = j;
  }
  const double norm = l2_norm(v);
  if (norm > 0.0) {
    for (auto& x : v.values) x /= norm;
  }
  return v;
}

std::optional<std::string> PosMap::tag(std::string_view word) const {
  auto it = tags_.find(std::string(word));
  if (it == tags_.end()) return std::nullopt;
  return it->second;
}

void PosCounter::add(const std::string& word, const std::string& tag, std::size_t count) {
  counts_[word][tag] += count;
}

PosMap PosCounter::resolve() const {
  std::unordered_map<std::string, std::string> tags;
  for (const auto& [word, by_tag] : counts_) {
    const std::string* best = nullptr;
    std::size_t best_count = 0;
    // std::map iterates tags in lexicographic order, so strict '>' keeps the smallest on ties.
    for (const auto& [tag, count] : by_tag) {
      if (best == nullptr || count > best_count) {
        best = &tag;
        best_count = count;
      }
    }
    if (best != nullptr && best_count > 0) tags.emplace(word, *best);
  }
  return PosMap(std::move(tags));
}

PosMap most_frequent_pos(const std::vector<TaggedSentence>& tagged_corpus) {
  PosCounter counter;
  for (const auto& sentence : tagged_corpus) {
    for (const auto& [word, tag] : sentence) counter.add(word, tag);
  }
  return counter.resolve();
}

PosMap load_tag_lexicon(const std::string& path) {
  PosCounter counter;
  io::read_tsv(path, [&](const std::vector<std::string>& f, std::size_t line) {
    const std::string where = path + ":" + std::to_string(line);
    if (f.size() != 3) throw Error(ErrorKind::kSchema, where + ": expected word<TAB>tag<TAB>count");
    const auto count = io::parse_integer(f[2], where);
    if (count < 0) throw Error(ErrorKind::kSchema, where + ": negative count");
    counter.add(f[0], f[1], static_cast<std::size_t>(count));
  });
  return counter.resolve();
}

std::string BigramVocabulary::key(std::string_view first, std::string_view second) {
  std::string k;
  k.reserve(first.size() + second.size() + 1);
  k.append(first);
  k.push_back('\t');
  k.append(second);
  return k;
}

void BigramVocabulary::add(std::string_view first, std::string_view second, std::size_t count) {
  counts_[key(first, second)] += count;
}

void BigramVocabulary::add_sentence(const std::vector<std::string>& tokens) {
  for (std::size_t i = 1; i < tokens.size(); ++i) add(tokens[i - 1], tokens[i]);
}

void BigramVocabulary::merge(const BigramVocabulary& other) {
  for (const auto& [k, c] : other.counts_) counts_[k] += c;
}

std::size_t BigramVocabulary::count(std::string_view first, std::string_view second) const {
  auto it = counts_.find(key(first, second));
  return it == counts_.end() ? 0 : it->second;
}

std::vector<std::tuple<std::string, std::string, std::size_t>> BigramVocabulary::entries() const {
  std::vector<std::tuple<std::string, std::string, std::size_t>> out;
  out.reserve(counts_.size());
  for (const auto& [k, c] : counts_) {
    const auto tab = k.find('\t');
    out.emplace_back(k.substr(0, tab), k.substr(tab + 1), c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

BigramVocabulary BigramVocabulary::load_tsv(const std::string& path) {
  BigramVocabulary vocab;
  io::read_tsv(path, [&](const std::vector<std::string>& f, std::size_t line) {
    const std::string where = path + ":" + std::to_string(line);
    if (f.size() != 3) throw Error(ErrorKind::kSchema, where + ": expected first<TAB>second<TAB>count");
    const auto count = io::parse_integer(f[2], where);
    if (count < 1) throw Error(ErrorKind::kSchema, where + ": bigram count must be >= 1");
    vocab.add(f[0], f[1], static_cast<std::size_t>(count));
  });
  return vocab;
}

void BigramVocabulary::save_tsv(const std::string& path) const {
  std::string out;
  for (const auto& [a, b, c] : entries()) {
    out += a;
    out += '\t';
    out += b;
    out += '\t';
    out += std::to_string(c);
    out += '\n';
  }
  io::write_file(path, out);
}

BigramVocabulary build_bigram_vocabulary(const std::vector<const Corpus*>& corpora) {
  BigramVocabulary vocab;
  for (const auto* corpus : corpora) {
    for (const auto& s : corpus->sentences()) vocab.add_sentence(s.tokens);
  }
  return vocab;
}

}  // namespace lexsub
