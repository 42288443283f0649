#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mbrcomb/combiner.hpp"
#include "mbrcomb/vocabulary.hpp"

namespace mbrcomb {

// Pipeline configuration file. A TOML subset:
//
//   alpha = 0.6
//   beam_size = 8
//   [[member]]
//   kind = "full"
//   weight = 0.5
//   train_source = "train.src"
//   ...
//
// Strings are double-quoted, numbers and booleans bare, '#' starts a comment
// line. Unknown keys, duplicate keys and out-of-range values are parse errors
// carrying the line number.
struct MemberSpec {
  std::map<std::string, std::string> values;  // key -> canonical value text

  std::string kind() const;  // "full" | "mbr"
  std::string get_string(const std::string& key, const std::string& fallback = "") const;
  double get_real(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool has(const std::string& key) const { return values.count(key) > 0; }
  void set_real(const std::string& key, double value);
};

struct PipelineConfig {
  std::map<std::string, std::string> values;  // top-level keys
  std::vector<MemberSpec> members;

  std::string get_string(const std::string& key, const std::string& fallback = "") const;
  double get_real(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  bool has(const std::string& key) const { return values.count(key) > 0; }
  void set_real(const std::string& key, double value);

  // Members in combination order: every full member, then every MBR member.
  std::vector<std::size_t> combination_order() const;
};

PipelineConfig parse_config(std::istream& in);
PipelineConfig parse_config_file(const std::string& path);
// Keys in a fixed canonical order; parse_config(write_config(c)) == c.
void write_config(std::ostream& out, const PipelineConfig& config);

struct Pipeline {
  Vocabulary vocab;
  CombinationConfig combination;
};

// Trains the full-posterior stand-ins and loads MBR posterior files. The
// vocabulary is the `vocab` file when given, extended with every training
// word. Relative paths resolve against base_dir.
Pipeline build_pipeline(const PipelineConfig& config, const std::string& base_dir);

// Copies tuned weights (combination order) and alpha back into the config.
void apply_weights(PipelineConfig& config, const CombinationConfig& tuned);

std::vector<std::string> read_lines(const std::string& path);
std::vector<Source> encode_sources(const std::vector<std::string>& lines, const Vocabulary& vocab);

}  // namespace mbrcomb
