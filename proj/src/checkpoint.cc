// SPDX-License-Identifier: Apache-2.0
#include "srnn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "srnn/errors.hpp"

namespace srnn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O writes host byte order and assumes little-endian");

namespace {

constexpr char kCellMagic[8] = {'S', 'R', 'N', 'N', 'G', 'R', 'U', '1'};
constexpr char kModelMagic[8] = {'S', 'R', 'N', 'N', 'C', 'K', 'P', '1'};
// Upper bound on any stored dimension; rejects garbage headers before allocating.
constexpr std::uint64_t kMaxDim = std::uint64_t{1} << 32;

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t read_u64(std::istream& in, const char* what) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw ParseError(std::string("checkpoint: truncated while reading ") + what);
  }
  if (v > kMaxDim) throw ParseError(std::string("checkpoint: implausible ") + what);
  return v;
}

void write_doubles(std::ostream& out, std::span<const double> v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_doubles(std::istream& in, std::span<double> v, const char* what) {
  if (!in.read(reinterpret_cast<char*>(v.data()),
               static_cast<std::streamsize>(v.size() * sizeof(double)))) {
    throw ParseError(std::string("checkpoint: truncated while reading ") + what);
  }
}

void expect_magic(std::istream& in, const char (&magic)[8]) {
  char buf[8] = {};
  if (!in.read(buf, sizeof buf) || std::memcmp(buf, magic, sizeof buf) != 0) {
    throw ParseError("checkpoint: bad magic, expected " + std::string(magic, sizeof magic));
  }
}

}  // namespace

void write_gru_params(std::ostream& out, const GruParams& p) {
  p.validate();
  out.write(kCellMagic, sizeof kCellMagic);
  write_u64(out, p.input_dim);
  write_u64(out, p.hidden_dim);
  for (const auto block : p.blocks()) write_doubles(out, block);
}

GruParams read_gru_params(std::istream& in) {
  expect_magic(in, kCellMagic);
  const auto d = read_u64(in, "cell input dim");
  const auto m = read_u64(in, "cell hidden dim");
  GruParams p = GruParams::zeros(d, m);
  for (auto block : p.blocks()) read_doubles(in, block, "cell block");
  return p;
}

void write_model(std::ostream& out, const SrnnModel& model) {
  model.validate();
  out.write(kModelMagic, sizeof kModelMagic);
  for (std::uint64_t v : {model.vocab_size(), model.embed_dim(), model.hidden_dim(),
                          model.plan.slice_count, model.plan.slice_times, model.plan.length,
                          model.class_count()}) {
    write_u64(out, v);
  }
  write_doubles(out, model.embedding.data());
  for (const auto& cell : model.cells) write_gru_params(out, cell);
  write_doubles(out, model.head.weight.data());
  write_doubles(out, model.head.bias);
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

SrnnModel read_model(std::istream& in) {
  expect_magic(in, kModelMagic);
  const auto vocab = read_u64(in, "vocabulary size");
  const auto embed = read_u64(in, "embedding dim");
  const auto hidden = read_u64(in, "hidden dim");
  const auto n = read_u64(in, "slice count");
  const auto k = read_u64(in, "slice times");
  const auto length = read_u64(in, "sequence length");
  const auto classes = read_u64(in, "class count");

  SrnnModel model;
  model.plan = build_plan({length, n, k});
  model.embedding = Matrix(vocab, embed);
  read_doubles(in, model.embedding.data(), "embedding");
  for (std::size_t p = 0; p < model.plan.layer_count(); ++p) {
    model.cells.push_back(read_gru_params(in));
  }
  model.head = ClassifierHead::zeros(classes, hidden);
  read_doubles(in, model.head.weight.data(), "head weight");
  read_doubles(in, model.head.bias, "head bias");
  model.validate();
  return model;
}

void save_model(const std::filesystem::path& path, const SrnnModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path.string() + " for writing");
  write_model(out, model);
}

SrnnModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  return read_model(in);
}

}  // namespace srnn
