// SPDX-License-Identifier: Apache-2.0
//
// Corpus ingestion: tokenization, vocabulary, fixed-length id sequences,
// embedding initialization and train/validation/test splits.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "srnn/rng.hpp"
#include "srnn/srnn_engine.hpp"
#include "srnn/tensor.hpp"

namespace srnn {

struct Document {
  std::size_t label = 0;
  std::string text;
};

/// ASCII lowercase, split on whitespace, strip leading and trailing ASCII
/// punctuation from each token, drop empty tokens. Bytes >= 0x80 are kept
/// as-is.
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnknown = 1;
  static constexpr std::size_t kDefaultCap = 30000;

  /// Keeps the `cap` most frequent words; equal counts are ordered
  /// lexicographically. Ids 2.. follow rank order.
  static Vocabulary build(std::span<const std::vector<std::string>> docs,
                          std::size_t cap = kDefaultCap);

  /// Reads the `id<TAB>word<TAB>frequency` dump.
  static Vocabulary read(std::istream& in);
  void write(std::ostream& out) const;

  TokenId id_of(std::string_view word) const;
  const std::string& word_of(TokenId id) const;
  std::size_t frequency(TokenId id) const { return counts_.at(id); }
  std::size_t size() const { return words_.size(); }

 private:
  void add(std::string word, std::size_t count);

  std::vector<std::string> words_;
  std::vector<std::size_t> counts_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Known words map to their id, others to kUnknown; short sequences are
/// padded with kPad at the end and long ones keep their first `length` tokens.
std::vector<TokenId> encode_pad(std::span<const std::string> tokens, const Vocabulary& vocab,
                                std::size_t length);

/// Inverse of encode_pad for in-vocabulary ids; pad and unknown come back as
/// "<pad>" and "<unk>".
std::vector<std::string> decode(std::span<const TokenId> ids, const Vocabulary& vocab);

/// V x e table with every non-padding row uniform(-0.05, 0.05) and a zero
/// padding row.
Matrix random_embedding(std::size_t vocab_size, std::size_t dim, SeededRng& rng);

/// Starts from random_embedding and overwrites rows of words present in the
/// `word v_1 ... v_e` text file. Throws ParseError (with line number) for
/// unparsable values and DimensionError for a wrong value count.
Matrix load_word_vectors(std::istream& in, const Vocabulary& vocab, std::size_t dim,
                         SeededRng& rng);
Matrix load_word_vectors(const std::filesystem::path& path, const Vocabulary& vocab,
                         std::size_t dim, SeededRng& rng);

/// `label<TAB>text` per line; blank lines are skipped.
std::vector<Document> read_documents(std::istream& in);
std::vector<Document> read_documents(const std::filesystem::path& path);
void write_documents(std::ostream& out, std::span<const Document> docs);

struct Example {
  std::size_t label = 0;
  std::vector<TokenId> ids;
};

struct Corpus {
  Vocabulary vocab;
  std::vector<Example> train;
  std::vector<Example> val;
  std::vector<Example> test;
  std::size_t length = 0;
  std::size_t classes = 0;
};

struct DocumentSplit {
  std::vector<Document> train;
  std::vector<Document> val;
  std::vector<Document> test;
};

/// Seeded shuffle, then floor(N/10) validation, floor(N/10) test and the
/// remainder for training.
DocumentSplit split_documents(std::vector<Document> docs, std::uint64_t seed);

/// Splits, builds the vocabulary from the training split only, and encodes
/// every split to `length` ids. `classes` = 0 infers max label + 1.
Corpus build_corpus(std::vector<Document> docs, std::size_t length, std::size_t vocab_cap,
                    std::uint64_t seed, std::size_t classes = 0);

/// Encodes documents against an existing vocabulary.
std::vector<Example> encode_documents(std::span<const Document> docs, const Vocabulary& vocab,
                                      std::size_t length);

/// Planted sentiment keywords of a toy class.
const std::vector<std::string>& toy_keywords(std::size_t label, std::size_t classes);
/// Neutral words the toy generator fills documents with.
const std::vector<std::string>& toy_filler_words();

/// Synthetic reviews: each document has between length/2 and length tokens
/// of filler words with one to three keywords of its class planted at
/// random positions. Labels are drawn uniformly from the seeded stream.
std::vector<Document> make_toy_documents(std::uint64_t seed, std::size_t docs,
                                         std::size_t length, std::size_t classes = 2);

/// make_toy_documents followed by build_corpus. Throws std::invalid_argument
/// for fewer than 10 documents.
Corpus make_toy_corpus(std::uint64_t seed, std::size_t docs, std::size_t length,
                       std::size_t classes = 2);

}  // namespace srnn
