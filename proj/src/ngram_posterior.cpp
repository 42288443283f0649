#include "mbrcomb/ngram_posterior.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "mbrcomb/errors.hpp"
#include "mbrcomb/format.hpp"

namespace mbrcomb {

Ngram Ngram::of(std::span<const TokenId> seq) {
  if (seq.empty() || seq.size() > kMaxNgramOrder) {
    throw ConfigError("n-gram length " + std::to_string(seq.size()) + " outside 1.." +
                      std::to_string(kMaxNgramOrder));
  }
  Ngram g;
  std::copy(seq.begin(), seq.end(), g.tokens.begin());
  g.length = static_cast<std::uint8_t>(seq.size());
  return g;
}

bool operator<(const Ngram& a, const Ngram& b) {
  if (a.length != b.length) return a.length < b.length;
  auto va = a.view();
  auto vb = b.view();
  return std::lexicographical_compare(va.begin(), va.end(), vb.begin(), vb.end());
}

NgramTable::NgramTable(std::size_t source_id, int max_order, double epsilon)
    : source_id_(source_id), max_order_(max_order), epsilon_(epsilon) {
  if (max_order < 1 || max_order > kMaxNgramOrder) throw ConfigError("max n-gram order must be in 1..4");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ConfigError("smoothing floor must be in [0, 1)");
}

void NgramTable::set(const Ngram& ngram, double posterior) {
  if (ngram.length > max_order_) throw ConfigError("n-gram longer than the table order");
  if (!(posterior > 0.0 && posterior <= 1.0)) {
    throw ConfigError("stored posterior " + format_shortest(posterior) + " outside (0, 1]");
  }
  entries_[ngram] = posterior;
}

std::optional<double> NgramTable::stored(const Ngram& ngram) const {
  auto it = entries_.find(ngram);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

double NgramTable::lookup(const Ngram& ngram) const {
  auto it = entries_.find(ngram);
  return it == entries_.end() ? epsilon_ : it->second;
}

double NgramTable::max_posterior() const {
  double m = epsilon_;
  for (const auto& [g, p] : entries_) m = std::max(m, p);
  return m;
}

std::vector<std::pair<Ngram, double>> NgramTable::sorted_entries() const {
  std::vector<std::pair<Ngram, double>> out(entries_.begin(), entries_.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

bool NgramTable::operator==(const NgramTable& other) const {
  return source_id_ == other.source_id_ && max_order_ == other.max_order_ &&
         epsilon_ == other.epsilon_ && entries_ == other.entries_;
}

std::size_t padding_width(int max_order) {
  return static_cast<std::size_t>(std::max(max_order - 1, 1));
}

TokenSeq pad_hypothesis(const TokenSeq& hypothesis, int max_order) {
  Hypothesis h{hypothesis, 0.0};
  if (!h.complete()) throw InputError("n-gram extraction requires complete hypotheses");
  const std::size_t w = padding_width(max_order);
  TokenSeq padded(w, kBos);
  padded.insert(padded.end(), hypothesis.begin(), hypothesis.end() - 1);
  padded.insert(padded.end(), w, kEos);
  return padded;
}

std::vector<double> hypothesis_weights(const NbestList& nbest) {
  if (nbest.entries.empty()) throw EvidenceError("empty n-best list for sentence " + std::to_string(nbest.source_id));
  double best = nbest.entries.front().logprob;
  for (const auto& h : nbest.entries) {
    if (!std::isfinite(h.logprob)) throw EvidenceError("non-finite hypothesis score");
    best = std::max(best, h.logprob);
  }
  std::vector<double> w;
  w.reserve(nbest.entries.size());
  double z = 0.0;
  for (const auto& h : nbest.entries) {
    w.push_back(std::exp(h.logprob - best));
    z += w.back();
  }
  for (double& x : w) x /= z;
  return w;
}

NgramTable extract_posteriors(const NbestList& nbest, int max_order) {
  const std::vector<double> weights = hypothesis_weights(nbest);
  std::unordered_map<Ngram, double, NgramHash> acc;
  std::unordered_set<Ngram, NgramHash> present;
  for (std::size_t k = 0; k < nbest.entries.size(); ++k) {
    const TokenSeq padded = pad_hypothesis(nbest.entries[k].tokens, max_order);
    present.clear();
    std::span<const TokenId> all(padded);
    for (std::size_t i = 0; i < padded.size(); ++i) {
      for (int n = 1; n <= max_order && i + static_cast<std::size_t>(n) <= padded.size(); ++n) {
        present.insert(Ngram::of(all.subspan(i, static_cast<std::size_t>(n))));
      }
    }
    for (const Ngram& g : present) acc[g] += weights[k];
  }
  NgramTable table(nbest.source_id, max_order, 0.0);
  for (const auto& [g, p] : acc) {
    if (p > 0.0) table.set(g, std::min(p, 1.0));
  }
  return table;
}

NgramTable smooth(const NgramTable& table, double epsilon) {
  NgramTable out(table.source_id(), table.max_order(), epsilon);
  out.entries_ = table.entries_;
  for (auto& [g, p] : out.entries_) p = std::max(p, epsilon);
  return out;
}

NgramTable reverse_table(const NgramTable& table) {
  NgramTable out(table.source_id(), table.max_order(), table.epsilon());
  for (const auto& [g, p] : table.sorted_entries()) {
    Ngram r = g;
    std::reverse(r.tokens.begin(), r.tokens.begin() + r.length);
    for (std::size_t i = 0; i < r.length; ++i) {
      if (r.tokens[i] == kBos) {
        r.tokens[i] = kEos;
      } else if (r.tokens[i] == kEos) {
        r.tokens[i] = kBos;
      }
    }
    out.set(r, p);
  }
  return out;
}

double mbr_step_score(const NgramTable& table, std::span<const TokenId> padded) {
  double total = 0.0;
  for (int n = 1; n <= table.max_order(); ++n) {
    const auto len = static_cast<std::size_t>(n);
    total += len <= padded.size() ? table.lookup(padded.last(len)) : table.epsilon();
  }
  return total;
}

PosteriorSet::PosteriorSet(std::vector<NgramTable> tables, double missing_epsilon)
    : missing_(0, kMaxNgramOrder, missing_epsilon) {
  for (auto& t : tables) {
    std::size_t id = t.source_id();
    if (!tables_.emplace(id, std::move(t)).second) {
      throw InputError("duplicate posterior block for sentence " + std::to_string(id));
    }
  }
}

const NgramTable& PosteriorSet::table_for(std::size_t source_id) const {
  auto it = tables_.find(source_id);
  return it == tables_.end() ? missing_ : it->second;
}

double PosteriorSet::max_posterior() const {
  double m = missing_.epsilon();
  for (const auto& [id, t] : tables_) m = std::max(m, t.max_posterior());
  return m;
}

void write_ngram_file(std::ostream& out, const std::vector<NgramTable>& tables, const Vocabulary& vocab) {
  bool first = true;
  for (const auto& table : tables) {
    if (!first) out << '\n';
    first = false;
    out << "# sent " << table.source_id() << '\n';
    struct Line {
      std::size_t order;
      std::string text;
      double p;
    };
    std::vector<Line> lines;
    for (const auto& [g, p] : table.sorted_entries()) {
      std::string text;
      for (TokenId t : g.view()) {
        if (!text.empty()) text += ' ';
        text += vocab.surface(t);
      }
      lines.push_back({g.length, std::move(text), p});
    }
    // Surface order keeps files independent of id assignment.
    std::sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
      return a.order != b.order ? a.order < b.order : a.text < b.text;
    });
    for (const auto& l : lines) out << l.text << '\t' << format_shortest(l.p) << '\n';
  }
}

std::vector<NgramTable> read_ngram_file(std::istream& in, Vocabulary& vocab, const NgramFileOptions& options) {
  std::vector<NgramTable> tables;
  std::string line;
  std::size_t lineno = 0;
  bool in_block = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) {
      in_block = false;
      continue;
    }
    if (line.rfind("# sent ", 0) == 0) {
      long long id = 0;
      if (!parse_int(trim(std::string_view(line).substr(7)), id) || id < 0) {
        throw ParseError(lineno, "bad sentence id in '" + line + "'");
      }
      for (const auto& t : tables)
        if (t.source_id() == static_cast<std::size_t>(id))
          throw ParseError(lineno, "duplicate block for sentence " + std::to_string(id));
      tables.emplace_back(static_cast<std::size_t>(id), options.max_order, options.epsilon);
      in_block = true;
      continue;
    }
    if (!in_block) throw ParseError(lineno, "n-gram line outside a '# sent' block");
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(lineno, "expected '<ngram>\\t<posterior>'");
    double p = 0.0;
    if (!parse_double(trim(std::string_view(line).substr(tab + 1)), p) || !(p > 0.0 && p <= 1.0)) {
      throw ParseError(lineno, "posterior must be a decimal in (0, 1]");
    }
    auto words = split_words(std::string_view(line).substr(0, tab));
    if (words.empty() || words.size() > static_cast<std::size_t>(options.max_order)) {
      throw ParseError(lineno, "n-gram order must be in 1.." + std::to_string(options.max_order));
    }
    TokenSeq ids;
    bool known = true;
    for (const auto& w : words) {
      if (options.extend_vocabulary) {
        ids.push_back(vocab.add(w));
      } else if (auto id = vocab.find(w)) {
        ids.push_back(*id);
      } else {
        known = false;
      }
    }
    if (!known) continue;
    Ngram g = Ngram::of(ids);
    if (tables.back().stored(g)) throw ParseError(lineno, "duplicate n-gram in block");
    tables.back().set(g, std::max(p, options.epsilon));
  }
  return tables;
}

}  // namespace mbrcomb
