// SPDX-License-Identifier: Apache-2.0
//
// srnn: train, eval, bench, verify, slice-plan, predict-speed, make-toy.
// Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "srnn/benchmark.hpp"
#include "srnn/checkpoint.hpp"
#include "srnn/equivalence.hpp"
#include "srnn/errors.hpp"
#include "srnn/slice_geometry.hpp"
#include "srnn/srnn_engine.hpp"
#include "srnn/text_pipeline.hpp"
#include "srnn/training.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flag validation that delegates to library checks; any failure is a usage
// error rather than a runtime one.
template <typename F>
auto checked(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Manifest {
  std::string command;
  std::string started = utc_now();
  ordered_json extra = ordered_json::object();

  void write(const CLI::App& sub, const fs::path& out_dir, std::uint64_t seed, int exit_code) const {
    ordered_json j;
    j["command"] = command;
    ordered_json flags = ordered_json::object();
    for (const CLI::Option* opt : sub.get_options()) {
      if (opt->get_name() == "--help" || opt->get_name() == "-h") continue;
      const std::string name = opt->get_single_name();
      if (opt->count() > 0) {
        const auto& r = opt->results();
        if (r.size() == 1) {
          flags[name] = r.front();
        } else {
          flags[name] = r;
        }
      } else if (opt->get_default_str().empty()) {
        flags[name] = nullptr;
      } else {
        flags[name] = opt->get_default_str();
      }
    }
    j["flags"] = std::move(flags);
    j["seed"] = seed;
    j["versions"] = {{"srnn", SRNN_VERSION}, {"checkpoint_format", "SRNNCKP1"}};
    j["started_utc"] = started;
    j["finished_utc"] = utc_now();
    j["exit_code"] = exit_code;
    if (!extra.empty()) j["results"] = extra;
    fs::create_directories(out_dir);
    std::ofstream f(out_dir / "manifest.json");
    f << j.dump(2) << '\n';
  }
};

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

std::vector<srnn::Document> read_docs(const fs::path& path) {
  if (!fs::exists(path)) throw std::runtime_error("data file not found: " + path.string());
  return srnn::read_documents(path);
}

// ---- train ------------------------------------------------------------------

struct TrainFlags {
  fs::path data;
  fs::path vectors;
  std::size_t T = 64, n = 4, k = 2;
  std::size_t epochs = 5, batch = 100, hidden = 50, embed = 200;
  std::size_t vocab = srnn::Vocabulary::kDefaultCap;
  std::size_t classes = 0, workers = 1;
  double lr = 0.001, clip = 0.0;
  std::uint64_t seed = 1;
};

void register_train(CLI::App* sub, TrainFlags& f) {
  sub->add_option("--data", f.data, "label<TAB>text corpus")->required();
  sub->add_option("--T", f.T, "sequence length (pad/truncate)")->capture_default_str();
  sub->add_option("--n", f.n, "slices per split")->capture_default_str();
  sub->add_option("--k", f.k, "slicing times (0 = standard GRU)")->capture_default_str();
  sub->add_option("--epochs", f.epochs)->capture_default_str();
  sub->add_option("--batch", f.batch)->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--hidden", f.hidden)->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--embed", f.embed)->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--vocab", f.vocab, "vocabulary cap")->capture_default_str();
  sub->add_option("--classes", f.classes, "0 infers max label + 1")->capture_default_str();
  sub->add_option("--workers", f.workers)->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--lr", f.lr)->capture_default_str();
  sub->add_option("--clip", f.clip, "global gradient norm clip, 0 disables")
      ->capture_default_str();
  sub->add_option("--vectors", f.vectors, "pretrained word vectors (word v1 .. ve)");
  sub->add_option("--seed", f.seed)->capture_default_str();
}

int cmd_train(const TrainFlags& f, const fs::path& out, Manifest& manifest) {
  const srnn::SlicePlan plan = checked([&] { return srnn::build_plan({f.T, f.n, f.k}); });
  auto docs = read_docs(f.data);
  srnn::Corpus corpus = srnn::build_corpus(std::move(docs), f.T, f.vocab, f.seed, f.classes);

  srnn::SeededRng rng(f.seed);
  srnn::ModelDims dims{corpus.vocab.size(), f.embed, f.hidden, corpus.classes};
  srnn::SrnnModel model = srnn::SrnnModel::create(plan, dims, rng);
  if (!f.vectors.empty()) {
    srnn::SeededRng vec_rng = srnn::SeededRng::derive(f.seed, 0x7ec);
    model.embedding = srnn::load_word_vectors(f.vectors, corpus.vocab, f.embed, vec_rng);
  }

  srnn::TrainConfig cfg;
  cfg.batch_size = f.batch;
  cfg.epochs = f.epochs;
  cfg.seed = f.seed;
  cfg.hidden = f.hidden;
  cfg.embed = f.embed;
  cfg.workers = f.workers;
  cfg.clip_norm = f.clip;
  cfg.adam.learning_rate = f.lr;

  fs::create_directories(out);
  {
    auto vf = open_out(out / "vocab.tsv");
    corpus.vocab.write(vf);
  }
  auto log = open_out(out / "epochs.tsv");
  log << "epoch\ttrain_loss\tval_acc\tseconds\n";
  std::cout << "epoch\ttrain_loss\tval_acc\tseconds\n";
  srnn::TrainResult result = srnn::train(model, corpus, cfg, [&](const srnn::EpochRecord& r) {
    const std::string line = srnn::format_epoch(r);
    log << line << '\n' << std::flush;
    std::cout << line << '\n' << std::flush;
  });
  srnn::save_model(out / "best.ckpt", result.best);

  const double test_acc = corpus.test.empty() ? 0.0 : srnn::accuracy(result.best, corpus.test);
  std::printf("best_epoch=%zu val_acc=%.4f test_acc=%.4f\n", result.best_epoch,
              result.best_val_accuracy, test_acc);
  manifest.extra = {{"best_epoch", result.best_epoch},
                    {"best_val_acc", result.best_val_accuracy},
                    {"test_acc", test_acc},
                    {"train_docs", corpus.train.size()},
                    {"val_docs", corpus.val.size()},
                    {"test_docs", corpus.test.size()},
                    {"vocab_size", corpus.vocab.size()}};
  return 0;
}

// ---- eval -------------------------------------------------------------------

struct EvalFlags {
  fs::path checkpoint;
  fs::path data;
  fs::path vocab;
  std::string split = "test";
  std::optional<std::uint64_t> seed;
  std::size_t workers = 1;
};

void register_eval(CLI::App* sub, EvalFlags& f) {
  sub->add_option("--checkpoint", f.checkpoint)->required();
  sub->add_option("--data", f.data, "the corpus the checkpoint was trained on")->required();
  sub->add_option("--vocab", f.vocab, "defaults to vocab.tsv next to the checkpoint");
  sub->add_option("--split", f.split)
      ->capture_default_str()
      ->check(CLI::IsMember({"train", "val", "test"}));
  sub->add_option("--seed", f.seed,
                  "split seed; defaults to the seed in manifest.json next to the checkpoint, "
                  "else 1");
  sub->add_option("--workers", f.workers)->capture_default_str()->check(CLI::PositiveNumber);
}

int cmd_eval(const EvalFlags& f, Manifest& manifest, std::uint64_t& seed_out) {
  if (!fs::exists(f.checkpoint)) {
    throw std::runtime_error("checkpoint not found: " + f.checkpoint.string());
  }
  const fs::path dir = f.checkpoint.parent_path();
  const fs::path vocab_path = f.vocab.empty() ? dir / "vocab.tsv" : f.vocab;
  if (!fs::exists(vocab_path)) throw std::runtime_error("vocabulary not found: " + vocab_path.string());

  std::uint64_t seed = 1;
  if (f.seed) {
    seed = *f.seed;
  } else if (std::ifstream mf(dir / "manifest.json"); mf) {
    const ordered_json j = ordered_json::parse(mf, nullptr, false);
    if (!j.is_discarded() && j.contains("seed") && j["seed"].is_number_unsigned()) {
      seed = j["seed"].get<std::uint64_t>();
    }
  }
  seed_out = seed;

  const srnn::SrnnModel model = srnn::load_model(f.checkpoint);
  std::ifstream vf(vocab_path);
  const srnn::Vocabulary vocab = srnn::Vocabulary::read(vf);
  if (vocab.size() != model.vocab_size()) {
    throw srnn::ConsistencyError("vocabulary has " + std::to_string(vocab.size()) +
                                 " entries, checkpoint embedding has " +
                                 std::to_string(model.vocab_size()));
  }
  srnn::DocumentSplit split = srnn::split_documents(read_docs(f.data), seed);
  const auto& docs = f.split == "train" ? split.train : f.split == "val" ? split.val : split.test;
  const auto examples = srnn::encode_documents(docs, vocab, model.plan.length);
  srnn::ThreadPool pool(f.workers);
  const double acc = srnn::accuracy(model, examples, &pool);
  std::printf("%s_acc=%.4f\n", f.split.c_str(), acc);
  manifest.extra = {{f.split + "_acc", acc}, {"documents", examples.size()}};
  return 0;
}

// ---- bench ------------------------------------------------------------------

struct BenchFlags {
  std::vector<std::size_t> T{512, 4096};
  std::size_t n = 8;
  std::optional<std::size_t> k;
  std::optional<std::size_t> l0;
  std::size_t workers = 0;
  std::size_t trials = 3, warmup = 1, hidden = 50, embed = 0, batch = 32;
  std::uint64_t seed = 1;
  bool json = false;
};

void register_bench(CLI::App* sub, BenchFlags& f) {
  sub->add_option("--T", f.T, "one or more sequence lengths")->capture_default_str();
  sub->add_option("--n", f.n)->capture_default_str();
  auto* k = sub->add_option("--k", f.k, "slicing times for every T");
  sub->add_option("--l0", f.l0, "choose k per T so that T / n^k equals this (default 8)")
      ->excludes(k);
  sub->add_option("--workers", f.workers, "0 = hardware concurrency")->capture_default_str();
  sub->add_option("--trials", f.trials)->capture_default_str();
  sub->add_option("--warmup", f.warmup)->capture_default_str();
  sub->add_option("--hidden", f.hidden)->capture_default_str();
  sub->add_option("--embed", f.embed, "0 = same as hidden")->capture_default_str();
  sub->add_option("--batch", f.batch)->capture_default_str();
  sub->add_option("--seed", f.seed)->capture_default_str();
  sub->add_flag("--json", f.json, "one JSON record per row instead of the table");
}

std::size_t k_for_min_length(std::size_t T, std::size_t n, std::size_t l0) {
  std::size_t k = 0;
  std::size_t len = T;
  while (len > l0 && len % n == 0) {
    len /= n;
    ++k;
  }
  if (len != l0) {
    throw UsageError("no k gives T / n^k = " + std::to_string(l0) + " for T = " +
                     std::to_string(T) + ", n = " + std::to_string(n));
  }
  return k;
}

int cmd_bench(const BenchFlags& f, Manifest& manifest) {
  const std::size_t workers =
      f.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : f.workers;
  std::vector<srnn::BenchConfig> configs;
  for (std::size_t T : f.T) {
    srnn::BenchConfig c;
    c.length = T;
    c.slice_count = f.n;
    c.slice_times = f.k ? *f.k : k_for_min_length(T, f.n, f.l0.value_or(8));
    c.hidden = f.hidden;
    c.embed = f.embed;
    c.batch = f.batch;
    c.workers = workers;
    c.trials = f.trials;
    c.warmup = f.warmup;
    c.seed = f.seed;
    checked([&] { srnn::validate(c); });
    configs.push_back(c);
  }
  std::vector<srnn::BenchReport> reports;
  for (const auto& c : configs) reports.push_back(srnn::run_bench(c));
  std::cout << (f.json ? srnn::emit_jsonl(reports) : srnn::emit_table(reports));
  ordered_json rows = ordered_json::array();
  for (const auto& r : reports) {
    rows.push_back({{"T", r.config.length}, {"k", r.config.slice_times}, {"speedup", r.speedup}});
  }
  manifest.extra = {{"workers", workers}, {"rows", rows}};
  return 0;
}

// ---- verify -----------------------------------------------------------------

struct VerifyFlags {
  std::optional<std::size_t> n, k;
  std::size_t count = 50;
  std::uint64_t seed = 1;
  double tol = 1e-9;
  bool scalar_demo = false;
  std::optional<double> perturb;
};

void register_verify(CLI::App* sub, VerifyFlags& f) {
  sub->add_option("--n", f.n, "restrict the suite to this n (with --k)");
  sub->add_option("--k", f.k, "restrict the suite to this k (with --n)");
  sub->add_option("--count", f.count)->capture_default_str();
  sub->add_option("--seed", f.seed)->capture_default_str();
  sub->add_option("--tol", f.tol)->capture_default_str();
  sub->add_flag("--scalar-demo", f.scalar_demo, "U=1, W=2, x=[1,1,1,1] with n=2, k=1");
  sub->add_option("--perturb", f.perturb,
                  "add this to entry (0,0) of the top layer's recurrent weight");
}

int cmd_verify(const VerifyFlags& f, Manifest& manifest) {
  if (f.n.has_value() != f.k.has_value()) throw UsageError("--n and --k go together");
  std::vector<srnn::EquivalenceCase> cases;
  if (f.scalar_demo) {
    if ((f.n && *f.n != 2) || (f.k && *f.k != 1)) {
      throw UsageError("--scalar-demo is defined for n = 2, k = 1");
    }
    cases.push_back(srnn::scalar_demo_case());
  } else if (f.n) {
    srnn::SeededRng rng(f.seed);
    static constexpr std::size_t kDims[] = {1, 3, 5};
    for (std::size_t i = 0; i < f.count; ++i) {
      cases.push_back(checked([&] { return srnn::random_case(*f.n, *f.k, kDims[i % 3], rng); }));
    }
  } else {
    cases = srnn::default_suite(f.count, f.seed);
  }

  std::cout << "n\tk\tT\tdims\tmax_rel_err\tresult\n";
  std::size_t failed = 0;
  for (const auto& c : cases) {
    std::optional<srnn::Perturbation> p;
    if (f.perturb) p = srnn::Perturbation{c.slice_times, 0, 0, *f.perturb};
    const srnn::EquivalenceReport r = srnn::verify_equivalence(c, f.tol, p);
    std::cout << srnn::format_report(c, r) << '\n';
    if (f.scalar_demo) {
      std::cout << "layer0_last_states";
      for (const auto& s : r.layer0_states) std::printf(" %.17g", s[0]);
      std::printf("\nsequential=%.17g closed_form=%.17g sliced=%.17g\n", r.sequential[0],
                  r.closed_form[0], r.sliced[0]);
      std::printf("%.17g %s %.17g\n", r.sliced[0], r.sliced[0] == r.sequential[0] ? "==" : "!=",
                  r.sequential[0]);
    }
    failed += !r.pass;
  }
  std::printf("cases=%zu failed=%zu\n", cases.size(), failed);
  manifest.extra = {{"cases", cases.size()}, {"failed", failed}};
  return failed == 0 ? 0 : kExitRuntime;
}

// ---- slice-plan / predict-speed / make-toy ----------------------------------

struct PlanFlags {
  std::size_t T = 0, n = 2, k = 0;
};

void register_plan(CLI::App* sub, PlanFlags& f) {
  sub->add_option("--T", f.T)->required();
  sub->add_option("--n", f.n)->capture_default_str();
  sub->add_option("--k", f.k)->capture_default_str();
}

int cmd_slice_plan(const PlanFlags& f) {
  const srnn::SlicePlan plan = checked([&] { return srnn::build_plan({f.T, f.n, f.k}); });
  for (const auto& layer : plan.layers) {
    std::printf("p=%zu\ts_%zu=%zu\tl_%zu=%zu\n", layer.index, layer.index, layer.count,
                layer.index, layer.length);
  }
  std::printf("critical_steps=%zu\n", plan.critical_steps());
  return 0;
}

int cmd_predict_speed(const PlanFlags& f) {
  checked([&] { srnn::build_plan({f.T, f.n, f.k}); });
  const double r = srnn::predict_ratio(f.n, f.k, f.T);
  std::printf("R=%.6g theoretical_speedup=%.2f\n", r, 1.0 / r);
  return 0;
}

struct ToyFlags {
  fs::path output;
  std::size_t docs = 2000, T = 64, classes = 2;
  std::uint64_t seed = 1;
};

void register_toy(CLI::App* sub, ToyFlags& f) {
  sub->add_option("--output", f.output, "TSV file to write")->required();
  sub->add_option("--docs", f.docs)->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--T", f.T, "maximum document length in tokens")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--classes", f.classes)->capture_default_str()->check(CLI::Range(2, 64));
  sub->add_option("--seed", f.seed)->capture_default_str();
}

int cmd_make_toy(const ToyFlags& f) {
  const auto docs = srnn::make_toy_documents(f.seed, f.docs, f.T, f.classes);
  auto out = open_out(f.output);
  srnn::write_documents(out, docs);
  std::printf("documents=%zu\n", docs.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sliced recurrent networks: training, verification and benchmarks", "srnn"};
  app.set_version_flag("--version", std::string(SRNN_VERSION));
  app.set_config("--config", "", "TOML/INI file pre-filling flags; command-line flags win");
  app.require_subcommand(1, 1);
  app.fallthrough();
  fs::path out = ".";
  app.add_option("--out", out, "directory for manifest.json and run artifacts")
      ->capture_default_str();

  TrainFlags train_f;
  EvalFlags eval_f;
  BenchFlags bench_f;
  VerifyFlags verify_f;
  PlanFlags plan_f;
  PlanFlags speed_f;
  ToyFlags toy_f;
  register_train(app.add_subcommand("train", "train a classifier on a TSV corpus"), train_f);
  register_eval(app.add_subcommand("eval", "accuracy of a checkpoint on a held-out split"), eval_f);
  register_bench(app.add_subcommand("bench", "time sequential vs sliced forward"), bench_f);
  register_verify(app.add_subcommand("verify", "linear equivalence suite"), verify_f);
  register_plan(app.add_subcommand("slice-plan", "layer shapes of a slicing"), plan_f);
  register_plan(app.add_subcommand("predict-speed", "analytic speed ratio"), speed_f);
  register_toy(app.add_subcommand("make-toy", "write a synthetic keyword corpus"), toy_f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  Manifest manifest{sub->get_name()};
  std::uint64_t seed = 0;
  const std::string& name = manifest.command;
  if (name == "train") seed = train_f.seed;
  if (name == "bench") seed = bench_f.seed;
  if (name == "verify") seed = verify_f.seed;
  if (name == "make-toy") seed = toy_f.seed;

  int code = 0;
  try {
    if (name == "train") {
      code = cmd_train(train_f, out, manifest);
    } else if (name == "eval") {
      code = cmd_eval(eval_f, manifest, seed);
    } else if (name == "bench") {
      code = cmd_bench(bench_f, manifest);
    } else if (name == "verify") {
      code = cmd_verify(verify_f, manifest);
    } else if (name == "slice-plan") {
      code = cmd_slice_plan(plan_f);
    } else if (name == "predict-speed") {
      code = cmd_predict_speed(speed_f);
    } else {
      code = cmd_make_toy(toy_f);
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "srnn %s: %s\n", name.c_str(), e.what());
    code = kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "srnn %s: error: %s\n", name.c_str(), e.what());
    code = kExitRuntime;
  }
  try {
    manifest.write(*sub, out, seed, code);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "srnn: cannot write manifest: %s\n", e.what());
    if (code == 0) code = kExitRuntime;
  }
  return code;
}
