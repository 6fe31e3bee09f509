// SPDX-License-Identifier: Apache-2.0
#include "srnn/text_pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "srnn/errors.hpp"

namespace srnn {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u);
}

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

const std::string kPadWord = "<pad>";
const std::string kUnknownWord = "<unk>";

std::size_t parse_label(std::string_view field, std::size_t line_no) {
  std::size_t label = 0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, label);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("documents: line " + std::to_string(line_no) + ": label '" +
                     std::string(field) + "' is not a class index");
  }
  return label;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    std::size_t b = i;
    std::size_t e = j;
    while (b < e && is_punct(text[b])) ++b;
    while (e > b && is_punct(text[e - 1])) --e;
    if (b < e) {
      std::string tok(text.substr(b, e - b));
      std::transform(tok.begin(), tok.end(), tok.begin(), ascii_lower);
      out.push_back(std::move(tok));
    }
    i = j;
  }
  return out;
}

void Vocabulary::add(std::string word, std::size_t count) {
  const auto id = static_cast<TokenId>(words_.size());
  if (id >= 2) index_.emplace(word, id);
  words_.push_back(std::move(word));
  counts_.push_back(count);
}

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> docs, std::size_t cap) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& doc : docs)
    for (const auto& tok : doc) ++counts[tok];

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (ranked.size() > cap) ranked.resize(cap);

  Vocabulary v;
  v.add(kPadWord, 0);
  v.add(kUnknownWord, 0);
  for (auto& [word, count] : ranked) v.add(std::move(word), count);
  return v;
}

Vocabulary Vocabulary::read(std::istream& in) {
  Vocabulary v;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw ParseError("vocabulary: line " + std::to_string(line_no) +
                       ": expected id<TAB>word<TAB>frequency");
    }
    std::size_t id = 0;
    std::size_t freq = 0;
    auto r1 = std::from_chars(line.data(), line.data() + t1, id);
    auto r2 = std::from_chars(line.data() + t2 + 1, line.data() + line.size(), freq);
    if (r1.ec != std::errc() || r2.ec != std::errc() || id != v.size()) {
      throw ParseError("vocabulary: line " + std::to_string(line_no) +
                       ": malformed or out-of-order entry");
    }
    v.add(line.substr(t1 + 1, t2 - t1 - 1), freq);
  }
  if (v.size() < 2 || v.words_[0] != kPadWord || v.words_[1] != kUnknownWord) {
    throw ParseError("vocabulary: missing reserved <pad>/<unk> entries");
  }
  return v;
}

void Vocabulary::write(std::ostream& out) const {
  for (std::size_t id = 0; id < words_.size(); ++id) {
    out << id << '\t' << words_[id] << '\t' << counts_[id] << '\n';
  }
}

TokenId Vocabulary::id_of(std::string_view word) const {
  const auto it = index_.find(std::string(word));
  return it == index_.end() ? kUnknown : it->second;
}

const std::string& Vocabulary::word_of(TokenId id) const {
  if (id >= words_.size()) {
    throw VocabularyError("vocabulary: id " + std::to_string(id) + " outside " +
                          std::to_string(words_.size()));
  }
  return words_[id];
}

std::vector<TokenId> encode_pad(std::span<const std::string> tokens, const Vocabulary& vocab,
                                std::size_t length) {
  if (length < 1) throw std::invalid_argument("encode_pad: length must be >= 1");
  std::vector<TokenId> ids(length, Vocabulary::kPad);
  const std::size_t kept = std::min(length, tokens.size());
  for (std::size_t i = 0; i < kept; ++i) ids[i] = vocab.id_of(tokens[i]);
  return ids;
}

std::vector<std::string> decode(std::span<const TokenId> ids, const Vocabulary& vocab) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId id : ids) out.push_back(vocab.word_of(id));
  return out;
}

Matrix random_embedding(std::size_t vocab_size, std::size_t dim, SeededRng& rng) {
  Matrix table(vocab_size, dim);
  for (std::size_t r = 1; r < vocab_size; ++r)
    for (double& x : table.row(r)) x = rng.uniform(-0.05, 0.05);
  return table;
}

Matrix load_word_vectors(std::istream& in, const Vocabulary& vocab, std::size_t dim,
                         SeededRng& rng) {
  Matrix table = random_embedding(vocab.size(), dim, rng);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word)) continue;
    std::vector<double> values;
    std::string field;
    while (fields >> field) {
      double v = 0.0;
      const auto* end = field.data() + field.size();
      auto [ptr, ec] = std::from_chars(field.data(), end, v);
      if (ec != std::errc() || ptr != end) {
        throw ParseError("word vectors: line " + std::to_string(line_no) + ": '" + field +
                         "' is not a number");
      }
      values.push_back(v);
    }
    if (values.size() != dim) {
      throw DimensionError("word vectors: line " + std::to_string(line_no) + " has " +
                           std::to_string(values.size()) + " values, expected " +
                           std::to_string(dim));
    }
    const TokenId id = vocab.id_of(word);
    if (id == Vocabulary::kUnknown) continue;
    std::copy(values.begin(), values.end(), table.row(id).begin());
  }
  return table;
}

Matrix load_word_vectors(const std::filesystem::path& path, const Vocabulary& vocab,
                         std::size_t dim, SeededRng& rng) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("word vectors: cannot open " + path.string());
  return load_word_vectors(in, vocab, dim, rng);
}

std::vector<Document> read_documents(std::istream& in) {
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError("documents: line " + std::to_string(line_no) + ": missing TAB");
    }
    docs.push_back({parse_label(std::string_view(line).substr(0, tab), line_no),
                    line.substr(tab + 1)});
  }
  return docs;
}

std::vector<Document> read_documents(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("documents: cannot open " + path.string());
  return read_documents(in);
}

void write_documents(std::ostream& out, std::span<const Document> docs) {
  for (const auto& d : docs) out << d.label << '\t' << d.text << '\n';
}

DocumentSplit split_documents(std::vector<Document> docs, std::uint64_t seed) {
  SeededRng rng = SeededRng::derive(seed, 0x5b1175);
  rng.shuffle(std::span<Document>(docs));
  const std::size_t held = docs.size() / 10;
  DocumentSplit split;
  split.val.assign(std::make_move_iterator(docs.begin()),
                   std::make_move_iterator(docs.begin() + held));
  split.test.assign(std::make_move_iterator(docs.begin() + held),
                    std::make_move_iterator(docs.begin() + 2 * held));
  split.train.assign(std::make_move_iterator(docs.begin() + 2 * held),
                     std::make_move_iterator(docs.end()));
  return split;
}

std::vector<Example> encode_documents(std::span<const Document> docs, const Vocabulary& vocab,
                                      std::size_t length) {
  std::vector<Example> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back({d.label, encode_pad(tokenize(d.text), vocab, length)});
  return out;
}

Corpus build_corpus(std::vector<Document> docs, std::size_t length, std::size_t vocab_cap,
                    std::uint64_t seed, std::size_t classes) {
  std::size_t max_label = 0;
  for (const auto& d : docs) max_label = std::max(max_label, d.label);
  if (classes == 0) classes = max_label + 1;
  if (!docs.empty() && max_label >= classes) {
    throw std::invalid_argument("build_corpus: label " + std::to_string(max_label) +
                                " outside " + std::to_string(classes) + " classes");
  }
  DocumentSplit split = split_documents(std::move(docs), seed);
  if (split.train.empty()) throw std::invalid_argument("build_corpus: empty training split");

  std::vector<std::vector<std::string>> train_tokens;
  train_tokens.reserve(split.train.size());
  for (const auto& d : split.train) train_tokens.push_back(tokenize(d.text));

  Corpus c;
  c.vocab = Vocabulary::build(train_tokens, vocab_cap);
  c.length = length;
  c.classes = classes;
  c.train.reserve(split.train.size());
  for (std::size_t i = 0; i < split.train.size(); ++i) {
    c.train.push_back({split.train[i].label, encode_pad(train_tokens[i], c.vocab, length)});
  }
  c.val = encode_documents(split.val, c.vocab, length);
  c.test = encode_documents(split.test, c.vocab, length);
  return c;
}

const std::vector<std::string>& toy_keywords(std::size_t label, std::size_t classes) {
  static const std::vector<std::string> negative = {"awful",    "terrible", "horrible",
                                                    "disgusting", "rude",   "worst"};
  static const std::vector<std::string> positive = {"delicious", "excellent", "amazing",
                                                    "friendly",  "wonderful", "best"};
  static std::map<std::pair<std::size_t, std::size_t>, std::vector<std::string>> extra;
  if (label >= classes) throw std::invalid_argument("toy_keywords: label outside classes");
  if (classes == 2) return label == 0 ? negative : positive;
  static std::mutex guard;
  std::lock_guard lock(guard);
  auto& words = extra[{label, classes}];
  if (words.empty()) {
    for (int i = 0; i < 6; ++i) {
      words.push_back("class" + std::to_string(label) + "word" + std::to_string(i));
    }
  }
  return words;
}

const std::vector<std::string>& toy_filler_words() {
  static const std::vector<std::string> words = {
      "the",     "a",       "and",    "we",      "ordered", "table",   "menu",    "waiter",
      "came",    "with",    "our",    "food",    "after",   "minutes", "place",   "was",
      "it",      "is",      "on",     "street",  "parking", "lunch",   "dinner",  "night",
      "friday",  "family",  "pasta",  "pizza",   "salad",   "soup",    "coffee",  "tea",
      "dessert", "price",   "bill",   "service", "kitchen", "chef",    "plate",   "portion",
      "seat",    "window",  "music",  "room",    "door",    "busy",    "quiet",   "again",
      "first",   "time",    "visit",  "there",   "they",    "had",     "also",    "then",
      "some",    "other",   "people", "town",    "booth",   "drink",   "water",   "bread",
      "rice",    "chicken", "beef",   "fish",    "sauce",   "side",    "order",   "wait",
      "line",    "counter", "staff",  "owner",   "week",    "day",     "friends", "group"};
  return words;
}

std::vector<Document> make_toy_documents(std::uint64_t seed, std::size_t docs,
                                         std::size_t length, std::size_t classes) {
  if (classes < 2) throw std::invalid_argument("make_toy_documents: need at least 2 classes");
  if (length < 2) throw std::invalid_argument("make_toy_documents: length must be >= 2");
  SeededRng rng = SeededRng::derive(seed, 0x70e);
  const auto& filler = toy_filler_words();
  std::vector<Document> out;
  out.reserve(docs);
  for (std::size_t i = 0; i < docs; ++i) {
    const std::size_t label = static_cast<std::size_t>(rng.below(classes));
    const auto& keywords = toy_keywords(label, classes);
    const std::size_t words =
        length / 2 + static_cast<std::size_t>(rng.below(length - length / 2 + 1));
    std::vector<std::string> tokens(words);
    for (auto& t : tokens) t = filler[rng.below(filler.size())];
    const std::size_t planted = 1 + static_cast<std::size_t>(rng.below(3));
    for (std::size_t p = 0; p < planted; ++p) {
      tokens[rng.below(words)] = keywords[rng.below(keywords.size())];
    }
    std::string text;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      if (t) text += ' ';
      text += tokens[t];
    }
    // Capitalize and punctuate so the tokenizer has something to normalize.
    if (!text.empty()) {
      text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
    }
    text += '.';
    out.push_back({label, std::move(text)});
  }
  return out;
}

Corpus make_toy_corpus(std::uint64_t seed, std::size_t docs, std::size_t length,
                       std::size_t classes) {
  if (docs < 10) throw std::invalid_argument("make_toy_corpus: need at least 10 documents");
  return build_corpus(make_toy_documents(seed, docs, length, classes), length,
                      Vocabulary::kDefaultCap, seed, classes);
}

}  // namespace srnn
