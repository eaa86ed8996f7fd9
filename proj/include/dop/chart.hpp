#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dop/acnf.hpp"

namespace dop {

struct Transition {
  int from = 0;
  int to = 0;
  std::string word;
  double log_prob = 0.0;
};

struct WordGraph {
  int num_states = 1;
  std::vector<Transition> transitions;
};

WordGraph linear_graph(const std::vector<std::string>& words);
void check_word_graph(const WordGraph& wg);
// States whose outgoing probabilities do not sum to one.
std::vector<int> unnormalized_states(const WordGraph& wg, double tolerance = 1e-9);
std::vector<WordGraph> read_word_graphs(std::istream& in);
void write_word_graph(std::ostream& out, const WordGraph& wg);

// Items are encoded as 2 * rule + final.
inline int item_code(int rule, bool final) { return 2 * rule + (final ? 1 : 0); }

struct ChartEntry {
  std::vector<int> finals;
  std::vector<int> partials;
  std::unordered_map<int, int> final_pos;
  std::unordered_map<int, int> partial_pos;
  // Per final item: split points for binary rules, transition indices for
  // terminal rules.
  std::vector<std::vector<int>> added_by;
  std::unordered_map<Symbol, std::vector<int>> final_by_lhs;

  bool has_final(int rule) const { return final_pos.count(rule) > 0; }
  bool has_partial(int rule) const { return partial_pos.count(rule) > 0; }
  bool add_final(int rule, Symbol lhs, Symbol category);
  bool add_partial(int rule);
  std::size_t size() const { return finals.size() + partials.size(); }
};

struct Chart {
  int n = 0;  // final state
  std::vector<ChartEntry> entries;
  std::vector<Transition> transitions;
  std::vector<Symbol> transition_symbol;

  ChartEntry& at(int i, int j) { return entries[static_cast<std::size_t>(i) * (n + 1) + j]; }
  const ChartEntry& at(int i, int j) const {
    return entries[static_cast<std::size_t>(i) * (n + 1) + j];
  }
  // Phase-one items only; they over-approximate the language, so a true result
  // still needs a successful mpd.
  bool recognized(const AcnfGrammar& g) const;
  std::size_t num_items() const;
};

// Decides whether a final item with the given lhs may enter entry [i,j].
using ItemFilter = std::function<bool(int i, int j, Symbol lhs)>;

Chart cky_sentence(const AcnfGrammar& g, const std::vector<std::string>& words);
Chart cky_wordgraph(const AcnfGrammar& g, const WordGraph& wg, const ItemFilter& filter = {});
Chart tree_to_chart(const AcnfGrammar& g, const Tree& parse);

struct ViterbiResult {
  Tree parse;
  double log_prob = 0.0;
  std::vector<int> rules;
  std::vector<std::string> sentence;
};

std::optional<ViterbiResult> scfg_viterbi(const Scfg& g, const WordGraph& wg);
std::optional<ViterbiResult> scfg_viterbi(const Scfg& g, const std::vector<std::string>& words);

}  // namespace dop
