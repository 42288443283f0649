#include "mbrcomb/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "mbrcomb/errors.hpp"
#include "mbrcomb/format.hpp"
#include "mbrcomb/ngram_lm.hpp"
#include "mbrcomb/ngram_posterior.hpp"

namespace mbrcomb {

namespace {

enum class ValueType { kString, kReal, kInt, kBool };

struct KeySpec {
  const char* name;
  ValueType type;
  double min;
  double max;
  bool min_exclusive = false;
  bool max_exclusive = false;
  std::vector<std::string> choices = {};
};

constexpr double kInf = std::numeric_limits<double>::infinity();

const std::vector<KeySpec>& top_level_keys() {
  static const std::vector<KeySpec> keys = {
      {"alpha", ValueType::kReal, 0.0, kInf},
      {"beam_size", ValueType::kInt, 1, 100000},
      {"length_normalization", ValueType::kBool, 0, 0},
      {"max_target_length", ValueType::kInt, 0, 100000},
      {"vocab", ValueType::kString, 0, 0},
      {"dev_source", ValueType::kString, 0, 0},
      {"dev_reference", ValueType::kString, 0, 0},
      {"test_source", ValueType::kString, 0, 0},
      {"test_reference", ValueType::kString, 0, 0},
  };
  return keys;
}

const std::vector<KeySpec>& member_keys() {
  static const std::vector<KeySpec> keys = {
      {"kind", ValueType::kString, 0, 0, false, false, {"full", "mbr"}},
      {"name", ValueType::kString, 0, 0},
      {"weight", ValueType::kReal, 0.0, kInf},
      {"scorer", ValueType::kString, 0, 0, false, false, {"channel", "lm"}},
      {"train_source", ValueType::kString, 0, 0},
      {"train_target", ValueType::kString, 0, 0},
      {"order", ValueType::kInt, 1, 4},
      {"add_k", ValueType::kReal, 0.0, kInf, true},
      {"lexical_add_k", ValueType::kReal, 0.0, kInf, true},
      {"mix", ValueType::kReal, 0.0, 1.0},
      {"direction", ValueType::kString, 0, 0, false, false, {"l2r", "r2l"}},
      {"posteriors", ValueType::kString, 0, 0},
      {"epsilon", ValueType::kReal, 0.0, 1.0, false, true},
  };
  return keys;
}

const std::vector<std::string> kFullOnly = {"scorer", "train_source", "train_target", "order",
                                            "add_k",  "lexical_add_k", "mix",         "direction"};
const std::vector<std::string> kMbrOnly = {"posteriors", "epsilon"};

const KeySpec* find_key(const std::vector<KeySpec>& keys, const std::string& name) {
  for (const auto& k : keys)
    if (name == k.name) return &k;
  return nullptr;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + '"';
}

std::string unquote(std::string_view text, std::size_t lineno) {
  std::string out;
  for (std::size_t i = 1; i + 1 < text.size(); ++i) {
    char c = text[i];
    if (c == '\\') {
      if (i + 2 >= text.size()) throw ParseError(lineno, "dangling escape in string");
      c = text[++i];
      if (c != '"' && c != '\\') throw ParseError(lineno, "unsupported escape '\\" + std::string(1, c) + "'");
    } else if (c == '"') {
      throw ParseError(lineno, "unescaped quote inside string");
    }
    out += c;
  }
  return out;
}

// Validates a raw value and returns its canonical text.
std::string canonical_value(const KeySpec& spec, std::string_view raw, std::size_t lineno) {
  const std::string key = spec.name;
  switch (spec.type) {
    case ValueType::kString: {
      if (raw.size() < 2 || raw.front() != '"' || raw.back() != '"') {
        throw ParseError(lineno, "'" + key + "' expects a quoted string");
      }
      std::string s = unquote(raw, lineno);
      if (!spec.choices.empty() && std::find(spec.choices.begin(), spec.choices.end(), s) == spec.choices.end()) {
        std::string allowed;
        for (const auto& c : spec.choices) allowed += (allowed.empty() ? "" : " | ") + c;
        throw ParseError(lineno, "'" + key + "' must be one of " + allowed);
      }
      return quote(s);
    }
    case ValueType::kReal: {
      double v = 0.0;
      if (!parse_double(raw, v)) throw ParseError(lineno, "'" + key + "' expects a number");
      const bool ok = std::isfinite(v) && (spec.min_exclusive ? v > spec.min : v >= spec.min) &&
                      (spec.max_exclusive ? v < spec.max : v <= spec.max);
      if (!ok) throw ParseError(lineno, "'" + key + "' = " + std::string(raw) + " is out of range");
      return format_shortest(v);
    }
    case ValueType::kInt: {
      long long v = 0;
      if (!parse_int(raw, v)) throw ParseError(lineno, "'" + key + "' expects an integer");
      if (v < spec.min || v > spec.max) throw ParseError(lineno, "'" + key + "' = " + std::string(raw) + " is out of range");
      return std::to_string(v);
    }
    case ValueType::kBool:
      if (raw == "true" || raw == "false") return std::string(raw);
      throw ParseError(lineno, "'" + key + "' expects true or false");
  }
  return {};
}

std::string string_value(const std::map<std::string, std::string>& values, const std::string& key,
                         const std::string& fallback) {
  auto it = values.find(key);
  if (it == values.end()) return fallback;
  return unquote(it->second, 0);
}

double real_value(const std::map<std::string, std::string>& values, const std::string& key, double fallback) {
  auto it = values.find(key);
  double v = fallback;
  if (it != values.end()) parse_double(it->second, v);
  return v;
}

long long int_value(const std::map<std::string, std::string>& values, const std::string& key, long long fallback) {
  auto it = values.find(key);
  long long v = fallback;
  if (it != values.end()) parse_int(it->second, v);
  return v;
}

void check_member(const MemberSpec& m, std::size_t lineno) {
  if (!m.has("kind")) throw ParseError(lineno, "member block lacks 'kind'");
  const bool full = m.kind() == "full";
  for (const auto& key : full ? kMbrOnly : kFullOnly) {
    if (m.has(key)) throw ParseError(lineno, "'" + key + "' is not valid for a " + m.kind() + " member");
  }
  if (full) {
    if (!m.has("train_target")) throw ParseError(lineno, "full member needs 'train_target'");
    if (m.get_string("scorer", "channel") == "channel" && !m.has("train_source")) {
      throw ParseError(lineno, "channel scorer needs 'train_source'");
    }
  } else if (!m.has("posteriors")) {
    throw ParseError(lineno, "mbr member needs 'posteriors'");
  }
}

}  // namespace

std::string MemberSpec::kind() const { return string_value(values, "kind", ""); }
std::string MemberSpec::get_string(const std::string& key, const std::string& fallback) const {
  return string_value(values, key, fallback);
}
double MemberSpec::get_real(const std::string& key, double fallback) const { return real_value(values, key, fallback); }
long long MemberSpec::get_int(const std::string& key, long long fallback) const {
  return int_value(values, key, fallback);
}
void MemberSpec::set_real(const std::string& key, double value) { values[key] = format_shortest(value); }

std::string PipelineConfig::get_string(const std::string& key, const std::string& fallback) const {
  return string_value(values, key, fallback);
}
double PipelineConfig::get_real(const std::string& key, double fallback) const {
  return real_value(values, key, fallback);
}
long long PipelineConfig::get_int(const std::string& key, long long fallback) const {
  return int_value(values, key, fallback);
}
bool PipelineConfig::get_bool(const std::string& key, bool fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second == "true";
}
void PipelineConfig::set_real(const std::string& key, double value) { values[key] = format_shortest(value); }

std::vector<std::size_t> PipelineConfig::combination_order() const {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < members.size(); ++i)
    if (members[i].kind() == "full") order.push_back(i);
  for (std::size_t i = 0; i < members.size(); ++i)
    if (members[i].kind() == "mbr") order.push_back(i);
  return order;
}

PipelineConfig parse_config(std::istream& in) {
  PipelineConfig config;
  std::string line;
  std::size_t lineno = 0;
  std::size_t member_line = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    if (text == "[[member]]") {
      if (!config.members.empty()) check_member(config.members.back(), member_line);
      config.members.emplace_back();
      member_line = lineno;
      continue;
    }
    if (text.front() == '[') throw ParseError(lineno, "unknown section '" + std::string(text) + "'");
    auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ParseError(lineno, "expected 'key = value'");
    std::string key(trim(text.substr(0, eq)));
    std::string_view raw = trim(text.substr(eq + 1));
    if (key.empty()) throw ParseError(lineno, "missing key");
    if (raw.empty()) throw ParseError(lineno, "missing value for '" + key + "'");
    const bool in_member = !config.members.empty();
    const KeySpec* spec = find_key(in_member ? member_keys() : top_level_keys(), key);
    if (!spec) {
      throw ParseError(lineno, "unknown key '" + key + "'" + (in_member ? " in member block" : ""));
    }
    auto& target = in_member ? config.members.back().values : config.values;
    if (target.count(key)) throw ParseError(lineno, "duplicate key '" + key + "'");
    target[key] = canonical_value(*spec, raw, lineno);
  }
  if (!config.members.empty()) check_member(config.members.back(), member_line);
  if (config.members.empty()) throw ParseError(lineno, "configuration declares no [[member]]");
  return config;
}

PipelineConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  try {
    return parse_config(in);
  } catch (const ParseError& e) {
    throw e.in_file(path);
  }
}

void write_config(std::ostream& out, const PipelineConfig& config) {
  for (const auto& spec : top_level_keys()) {
    auto it = config.values.find(spec.name);
    if (it != config.values.end()) out << spec.name << " = " << it->second << '\n';
  }
  for (const auto& m : config.members) {
    out << "\n[[member]]\n";
    for (const auto& spec : member_keys()) {
      auto it = m.values.find(spec.name);
      if (it != m.values.end()) out << spec.name << " = " << it->second << '\n';
    }
  }
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::vector<Source> encode_sources(const std::vector<std::string>& lines, const Vocabulary& vocab) {
  std::vector<Source> sources;
  sources.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) sources.push_back(Source{i, vocab.encode_line(lines[i])});
  return sources;
}

namespace {

std::string resolve(const std::string& base_dir, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return path;
  return (std::filesystem::path(base_dir) / p).string();
}

std::vector<std::vector<std::string>> read_corpus(const std::string& path) {
  std::vector<std::vector<std::string>> corpus;
  for (const auto& line : read_lines(path)) corpus.push_back(split_words(line));
  return corpus;
}

}  // namespace

Pipeline build_pipeline(const PipelineConfig& config, const std::string& base_dir) {
  Pipeline p;
  if (config.has("vocab")) p.vocab = Vocabulary::load(resolve(base_dir, config.get_string("vocab")));

  struct Corpora {
    std::vector<std::vector<std::string>> source, target;
  };
  std::vector<Corpora> corpora(config.members.size());
  for (std::size_t i = 0; i < config.members.size(); ++i) {
    const MemberSpec& m = config.members[i];
    if (m.kind() != "full") continue;
    if (m.has("train_source")) corpora[i].source = read_corpus(resolve(base_dir, m.get_string("train_source")));
    corpora[i].target = read_corpus(resolve(base_dir, m.get_string("train_target")));
    for (const auto* side : {&corpora[i].source, &corpora[i].target})
      for (const auto& s : *side)
        for (const auto& w : s) p.vocab.add(w);
  }

  CombinationConfig& c = p.combination;
  c.length_norm_alpha = config.get_real("alpha", 0.0);
  c.length_normalization = config.get_bool("length_normalization", true);
  c.beam_size = static_cast<std::size_t>(config.get_int("beam_size", 8));
  c.max_target_length = static_cast<std::size_t>(config.get_int("max_target_length", 0));
  c.vocab_size = p.vocab.size();

  for (std::size_t i : config.combination_order()) {
    const MemberSpec& m = config.members[i];
    const std::string name = m.get_string("name", "member" + std::to_string(i));
    const double weight = m.get_real("weight", 1.0);
    if (m.kind() == "full") {
      const int order = static_cast<int>(m.get_int("order", 2));
      const double add_k = m.get_real("add_k", 0.1);
      if (m.get_string("scorer", "channel") == "lm") {
        auto lm = std::make_shared<NgramLm>(train_ngram_lm(corpora[i].target, order, add_k, p.vocab));
        c.full_members.push_back(FullMember{lm, weight, name});
      } else {
        ChannelLmScorer::Options opt;
        opt.order = order;
        opt.add_k = add_k;
        opt.lexical_add_k = m.get_real("lexical_add_k", opt.lexical_add_k);
        opt.mix = m.get_real("mix", opt.mix);
        opt.direction = m.get_string("direction", "l2r") == "r2l" ? Direction::kRightToLeft : Direction::kLeftToRight;
        auto scorer =
            std::make_shared<ChannelLmScorer>(train_channel_lm(corpora[i].source, corpora[i].target, opt, p.vocab));
        c.full_members.push_back(FullMember{scorer, weight, name});
      }
    } else {
      const std::string path = resolve(base_dir, m.get_string("posteriors"));
      std::ifstream in(path);
      if (!in) throw IoError("cannot open posterior file " + path);
      NgramFileOptions opt;
      opt.epsilon = m.get_real("epsilon", 0.01);
      std::vector<NgramTable> tables;
      try {
        tables = read_ngram_file(in, p.vocab, opt);
      } catch (const ParseError& e) {
        throw e.in_file(path);
      }
      auto set = std::make_shared<PosteriorSet>(std::move(tables), opt.epsilon);
      c.mbr_members.push_back(MbrMember{set, weight, name});
    }
  }
  c.validate();
  return p;
}

void apply_weights(PipelineConfig& config, const CombinationConfig& tuned) {
  const std::vector<double> weights = tuned.weights();
  const std::vector<std::size_t> order = config.combination_order();
  if (weights.size() != order.size()) throw ConfigError("tuned weights do not match the configured members");
  for (std::size_t k = 0; k < order.size(); ++k) config.members[order[k]].set_real("weight", weights[k]);
  if (tuned.length_normalization) config.set_real("alpha", tuned.length_norm_alpha);
}

}  // namespace mbrcomb
