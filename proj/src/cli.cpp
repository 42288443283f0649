#include "mbrcomb/cli.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <cmath>
#include <sstream>

#include "mbrcomb/bleu.hpp"
#include "mbrcomb/combiner.hpp"
#include "mbrcomb/config.hpp"
#include "mbrcomb/corpus.hpp"
#include "mbrcomb/errors.hpp"
#include "mbrcomb/format.hpp"
#include "mbrcomb/grad_accum.hpp"
#include "mbrcomb/ngram_posterior.hpp"
#include "mbrcomb/tuner.hpp"

namespace mbrcomb::cli {

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

std::string parent_dir(const std::string& path) { return std::filesystem::path(path).parent_path().string(); }

// ---- decode

struct DecodeArgs {
  std::string config, input, output, one_best;
  std::optional<std::size_t> beam;
  std::size_t nbest = 0;
  std::size_t jobs = 1;
};

int do_decode(const DecodeArgs& a, std::ostream& out) {
  PipelineConfig cfg = parse_config_file(a.config);
  Pipeline p = build_pipeline(cfg, parent_dir(a.config));
  if (a.beam) p.combination.beam_size = *a.beam;
  p.combination.validate();
  auto sources = encode_sources(read_lines(a.input), p.vocab);
  auto lists = decode_corpus(p.combination, sources, a.jobs);
  auto f = open_out(a.output);
  write_nbest(f, lists, p.vocab, a.nbest);
  finish(f, a.output);
  if (!a.one_best.empty()) {
    auto g = open_out(a.one_best);
    for (const auto& l : lists) g << p.vocab.decode(l.entries.front().tokens) << '\n';
    finish(g, a.one_best);
  }
  out << "decoded " << lists.size() << " sentences\n";
  return 0;
}

// ---- extract / reverse

struct ExtractArgs {
  std::string nbest, output;
  double epsilon = 0.01;
  int max_order = kMaxNgramOrder;
};

int do_extract(const ExtractArgs& a, std::ostream& out) {
  Vocabulary vocab;
  auto in = open_in(a.nbest);
  std::vector<NbestList> lists;
  try {
    lists = read_nbest(in, vocab, true);
  } catch (const ParseError& e) {
    throw e.in_file(a.nbest);
  }
  std::vector<NgramTable> tables;
  tables.reserve(lists.size());
  for (const auto& l : lists) tables.push_back(smooth(extract_posteriors(l, a.max_order), a.epsilon));
  auto f = open_out(a.output);
  write_ngram_file(f, tables, vocab);
  finish(f, a.output);
  out << "extracted " << tables.size() << " sentences\n";
  return 0;
}

struct ReverseArgs {
  std::string input, output;
};

int do_reverse(const ReverseArgs& a, std::ostream& out) {
  Vocabulary vocab;
  auto in = open_in(a.input);
  NgramFileOptions opt;
  opt.extend_vocabulary = true;
  std::vector<NgramTable> tables;
  try {
    tables = read_ngram_file(in, vocab, opt);
  } catch (const ParseError& e) {
    throw e.in_file(a.input);
  }
  for (auto& t : tables) t = reverse_table(t);
  auto f = open_out(a.output);
  write_ngram_file(f, tables, vocab);
  finish(f, a.output);
  out << "reversed " << tables.size() << " sentences\n";
  return 0;
}

// ---- tune

struct TuneArgs {
  std::string config, dev_src, dev_ref, output, log;
  TuneOptions options;
};

int do_tune(TuneArgs a, std::ostream& out) {
  PipelineConfig cfg = parse_config_file(a.config);
  const std::string base = parent_dir(a.config);
  auto from_config = [&](const std::string& value, const std::string& flag, const std::string& key) {
    if (!value.empty()) return value;
    if (!cfg.has(key)) throw ConfigError("no " + flag + " given and the config has no " + key);
    std::filesystem::path p(cfg.get_string(key));
    return p.is_absolute() || base.empty() ? p.string() : (std::filesystem::path(base) / p).string();
  };
  const std::string src_path = from_config(a.dev_src, "--dev-src", "dev_source");
  const std::string ref_path = from_config(a.dev_ref, "--dev-ref", "dev_reference");
  Pipeline p = build_pipeline(cfg, base);
  auto sources = encode_sources(read_lines(src_path), p.vocab);
  std::vector<std::vector<std::string>> refs;
  for (const auto& line : read_lines(ref_path)) refs.push_back(split_words(line));
  if (refs.size() != sources.size()) throw InputError(src_path + " and " + ref_path + " differ in line count");

  std::ofstream log;
  if (!a.log.empty()) {
    log = open_out(a.log);
    a.options.log = &log;
  }
  TuneResult r = powell_tune(p.combination, sources, refs, p.vocab, a.options);
  apply_weights(cfg, r.config);
  auto f = open_out(a.output);
  write_config(f, cfg);
  finish(f, a.output);
  out << "initial_bleu = " << format_fixed(r.initial_objective, 2) << " tuned_bleu = "
      << format_fixed(r.state.best_objective, 2) << " rounds = " << r.state.rounds
      << " evaluations = " << r.state.evaluations << '\n';
  return 0;
}

// ---- bleu

struct BleuArgs {
  std::string hyp, ref, mode = "pretokenized";
};

int do_bleu(const BleuArgs& a, std::ostream& out) {
  const BleuMode mode = parse_bleu_mode(a.mode);
  auto hyps = read_lines(a.hyp);
  auto refs = read_lines(a.ref);
  if (hyps.size() != refs.size()) throw InputError(a.hyp + " and " + a.ref + " differ in line count");
  out << corpus_bleu(hyps, refs, mode).to_string() << '\n';
  return 0;
}

// ---- filter

struct FilterArgs {
  std::string input, src, tgt, output, stats, src_lang, tgt_lang;
  bool aggressive = false;
  std::size_t jobs = 1;
};

int do_filter(const FilterArgs& a, std::ostream& out) {
  std::vector<SentencePair> pairs;
  if (!a.input.empty()) {
    if (!a.src.empty() || !a.tgt.empty()) throw ConfigError("--input excludes --src/--tgt");
    auto in = open_in(a.input);
    try {
      pairs = read_tsv(in, a.input);
    } catch (const ParseError& e) {
      throw e.in_file(a.input);
    }
  } else {
    if (a.src.empty() || a.tgt.empty()) throw ConfigError("give --input or both --src and --tgt");
    auto s = open_in(a.src);
    auto t = open_in(a.tgt);
    pairs = read_parallel(s, t, a.src);
  }
  FilterOptions opt;
  opt.src_language = a.src_lang;
  opt.tgt_language = a.tgt_lang;
  FilterResult r = filter_corpus(pairs, a.aggressive, opt, a.jobs);
  auto f = open_out(a.output);
  write_tsv(f, r.kept);
  finish(f, a.output);
  if (!a.stats.empty()) {
    auto s = open_out(a.stats);
    r.stats.write(s);
    finish(s, a.stats);
  } else {
    r.stats.write(out);
  }
  return 0;
}

// ---- compose

struct ComposeArgs {
  std::vector<std::string> corpora;
  std::string output;
  std::uint64_t seed = 0;
};

int do_compose(const ComposeArgs& a, std::ostream& out) {
  std::vector<std::vector<SentencePair>> corpora;
  std::vector<std::size_t> factors;
  for (const auto& spec : a.corpora) {
    auto colon = spec.rfind(':');
    long long factor = 1;
    std::string path = spec;
    if (colon != std::string::npos && parse_int(std::string_view(spec).substr(colon + 1), factor)) {
      path = spec.substr(0, colon);
    } else {
      factor = 1;
    }
    if (factor < 0) throw ConfigError("negative factor in --corpus " + spec);
    auto in = open_in(path);
    try {
      corpora.push_back(read_tsv(in, path));
    } catch (const ParseError& e) {
      throw e.in_file(path);
    }
    factors.push_back(static_cast<std::size_t>(factor));
  }
  auto mixed = compose(corpora, factors, a.seed);
  auto f = open_out(a.output);
  write_tsv(f, mixed);
  finish(f, a.output);
  out << "composed " << mixed.size() << " pairs\n";
  return 0;
}

// ---- accum-demo

struct AccumArgs {
  std::uint64_t seed = 0;
  std::size_t batch = 16;
  std::size_t updates = 20;
  std::size_t features = 8;
  double lr = 0.5;
};

// Deterministic uniform in [0, 1) from a 64-bit engine.
double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

accum::Batch synthetic_batch(std::mt19937_64& rng, const std::vector<double>& truth, std::size_t size) {
  accum::Batch batch(size);
  for (auto& ex : batch) {
    ex.features.resize(truth.size());
    double z = 0.0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
      ex.features[k] = 2.0 * uniform(rng) - 1.0;
      z += truth[k] * ex.features[k];
    }
    ex.label = uniform(rng) < 1.0 / (1.0 + std::exp(-z)) ? 1.0 : 0.0;
  }
  return batch;
}

int do_accum_demo(const AccumArgs& a, std::ostream& out) {
  if (a.batch == 0 || a.updates == 0 || a.features == 0) throw ConfigError("--batch, --updates and --features must be positive");
  const accum::LogisticModel model(a.features);
  out << "g\td\tg_eff\tb_eff\tloss\tdistance\n";
  const std::int64_t rows[][2] = {{1, 1}, {4, 1}, {4, 4}, {4, 16}};
  for (const auto& row : rows) {
    const auto eff = accum::effective_batch(row[0], row[1], static_cast<std::int64_t>(a.batch));
    std::mt19937_64 rng(a.seed);
    std::vector<double> truth(a.features);
    for (auto& w : truth) w = 4.0 * uniform(rng) - 2.0;
    std::vector<accum::Batch> batches;
    for (std::size_t i = 0; i < a.updates * static_cast<std::size_t>(eff.devices); ++i)
      batches.push_back(synthetic_batch(rng, truth, a.batch));
    const accum::Params init(model.dimension(), 0.0);
    accum::Sgd sgd_a(a.lr), sgd_b(a.lr);
    auto delayed = accum::train_accumulated(model, init, batches, eff.devices, sgd_a);
    auto large = accum::train_large_batch(model, init, batches, eff.devices, sgd_b);
    accum::Batch all;
    for (const auto& b : batches) all.insert(all.end(), b.begin(), b.end());
    out << row[0] << '\t' << row[1] << '\t' << eff.devices << '\t' << eff.batch << '\t'
        << format_fixed(model.loss(delayed, all), 6) << '\t' << accum::relative_distance(delayed, large) << '\n';
  }
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"System combination of full-posterior and MBR n-gram members"};
  app.name("mbrcomb");
  app.set_version_flag("--version", std::string("mbrcomb ") + kVersion);
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", seed, "Random seed (default 0)"); };

  DecodeArgs decode;
  auto* dec = app.add_subcommand("decode", "Beam-search decode with the combined score");
  dec->add_option("--config", decode.config, "Pipeline config")->required();
  dec->add_option("--input", decode.input, "Source sentences, one per line")->required();
  dec->add_option("--output", decode.output, "N-best output")->required();
  dec->add_option("--one-best", decode.one_best, "Also write 1-best text here");
  dec->add_option("--beam", decode.beam, "Override beam size")->check(CLI::PositiveNumber);
  dec->add_option("--nbest", decode.nbest, "Entries per sentence (0 = whole beam)");
  dec->add_option("--jobs", decode.jobs, "Worker threads")->check(CLI::PositiveNumber);
  add_seed(dec);

  ExtractArgs extract;
  auto* ext = app.add_subcommand("extract", "N-best list to n-gram posterior file");
  ext->add_option("--nbest", extract.nbest, "N-best input")->required();
  ext->add_option("--output", extract.output, "Posterior file")->required();
  ext->add_option("--epsilon", extract.epsilon, "Smoothing floor")->check(CLI::Range(0.0, 1.0));
  ext->add_option("--max-order", extract.max_order, "Longest n-gram")->check(CLI::Range(1, kMaxNgramOrder));
  add_seed(ext);

  ReverseArgs reverse;
  auto* rev = app.add_subcommand("reverse", "Reverse every n-gram of a posterior file");
  rev->add_option("--input", reverse.input, "Posterior file")->required();
  rev->add_option("--output", reverse.output, "Reversed posterior file")->required();
  add_seed(rev);

  TuneArgs tune;
  std::size_t tune_jobs = 1;
  auto* tun = app.add_subcommand("tune", "Powell search of member weights for dev BLEU");
  tun->add_option("--config", tune.config, "Pipeline config")->required();
  tun->add_option("--dev-src", tune.dev_src, "Dev sources (default: config dev_source)");
  tun->add_option("--dev-ref", tune.dev_ref, "Dev references (default: config dev_reference)");
  tun->add_option("--output", tune.output, "Tuned config")->required();
  tun->add_option("--tol", tune.options.tol, "Minimum BLEU gain per round")->check(CLI::NonNegativeNumber);
  tun->add_option("--max-rounds", tune.options.max_rounds, "Powell rounds")->check(CLI::PositiveNumber);
  tun->add_option("--line-tol", tune.options.line_tol, "Line-search bracket width")->check(CLI::PositiveNumber);
  tun->add_option("--alpha-max", tune.options.alpha_max, "Upper bound on alpha")->check(CLI::NonNegativeNumber);
  tun->add_option("--jobs", tune_jobs, "Worker threads")->check(CLI::PositiveNumber);
  tun->add_option("--log", tune.log, "Per-evaluation trace");
  add_seed(tun);

  BleuArgs bleu;
  auto* ble = app.add_subcommand("bleu", "Corpus BLEU of a hypothesis file");
  ble->add_option("--hyp", bleu.hyp, "Hypotheses")->required();
  ble->add_option("--ref", bleu.ref, "References")->required();
  ble->add_option("--mode", bleu.mode, "pretokenized | international")
      ->check(CLI::IsMember({"pretokenized", "international"}));
  add_seed(ble);

  FilterArgs filter;
  auto* fil = app.add_subcommand("filter", "Rule-based parallel corpus filtering");
  fil->add_option("--input", filter.input, "TSV corpus");
  fil->add_option("--src", filter.src, "Source side");
  fil->add_option("--tgt", filter.tgt, "Target side");
  fil->add_option("--output", filter.output, "Kept pairs (TSV)")->required();
  fil->add_option("--stats", filter.stats, "Per-rule rejection counts (default stdout)");
  fil->add_flag("--aggressive", filter.aggressive, "Apply the aggressive rule set too");
  fil->add_option("--src-lang", filter.src_lang, "Expected source language (en, de)");
  fil->add_option("--tgt-lang", filter.tgt_lang, "Expected target language (en, de)");
  fil->add_option("--jobs", filter.jobs, "Worker threads")->check(CLI::PositiveNumber);
  add_seed(fil);

  ComposeArgs comp;
  auto* com = app.add_subcommand("compose", "Mix corpora with upsampling factors");
  com->add_option("--corpus", comp.corpora, "PATH[:FACTOR], repeatable")->required();
  com->add_option("--output", comp.output, "Mixed TSV")->required();
  add_seed(com);

  AccumArgs accum;
  auto* acc = app.add_subcommand("accum-demo", "Delayed-update SGD against large-batch SGD");
  acc->add_option("--batch", accum.batch, "Per-device batch size b");
  acc->add_option("--updates", accum.updates, "Optimizer updates per row");
  acc->add_option("--features", accum.features, "Logistic model features");
  acc->add_option("--lr", accum.lr, "SGD learning rate");
  add_seed(acc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, eo;
    const int code = app.exit(e, o, eo);
    out << o.str();
    err << eo.str();
    return code == 0 ? 0 : 2;
  }

  try {
    if (*dec) return do_decode(decode, out);
    if (*ext) return do_extract(extract, out);
    if (*rev) return do_reverse(reverse, out);
    if (*tun) {
      tune.options.jobs = tune_jobs;
      return do_tune(tune, out);
    }
    if (*ble) return do_bleu(bleu, out);
    if (*fil) return do_filter(filter, out);
    if (*com) {
      comp.seed = seed;
      return do_compose(comp, out);
    }
    if (*acc) {
      accum.seed = seed;
      return do_accum_demo(accum, out);
    }
  } catch (const DecodeError& e) {
    err << "mbrcomb: decode failed: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    err << "mbrcomb: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace mbrcomb::cli
