#include "dop/chart.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace dop {

WordGraph linear_graph(const std::vector<std::string>& words) {
  WordGraph wg;
  wg.num_states = static_cast<int>(words.size()) + 1;
  for (std::size_t i = 0; i < words.size(); ++i)
    wg.transitions.push_back({static_cast<int>(i), static_cast<int>(i) + 1, words[i], 0.0});
  return wg;
}

void check_word_graph(const WordGraph& wg) {
  if (wg.num_states < 1) throw Error("word-graph needs at least one state");
  for (const Transition& t : wg.transitions) {
    if (t.from < 0 || t.to >= wg.num_states || t.from >= t.to)
      throw Error("transition " + std::to_string(t.from) + "->" + std::to_string(t.to) +
                  " violates 0 <= from < to < states");
    if (std::isnan(t.log_prob) || t.log_prob > 1e-12 || std::isinf(t.log_prob))
      throw Error("transition probability outside (0,1]");
    if (t.word.empty()) throw Error("empty transition word");
  }
}

std::vector<int> unnormalized_states(const WordGraph& wg, double tolerance) {
  std::map<int, double> sums;
  for (const Transition& t : wg.transitions) sums[t.from] += std::exp(t.log_prob);
  std::vector<int> out;
  for (const auto& [s, p] : sums)
    if (std::fabs(p - 1.0) > tolerance) out.push_back(s);
  return out;
}

std::vector<WordGraph> read_word_graphs(std::istream& in) {
  std::vector<WordGraph> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "WG") {
      WordGraph wg;
      if (!(ls >> wg.num_states)) throw Error("line " + std::to_string(lineno) + ": bad WG header");
      wg.transitions.clear();
      out.push_back(std::move(wg));
    } else if (tag == "TRANS") {
      if (out.empty()) throw Error("line " + std::to_string(lineno) + ": TRANS before WG");
      Transition t;
      double p = 0;
      if (!(ls >> t.from >> t.to >> t.word >> p))
        throw Error("line " + std::to_string(lineno) + ": bad TRANS line");
      if (!(p > 0.0) || p > 1.0 + 1e-12)
        throw Error("line " + std::to_string(lineno) + ": probability outside (0,1]");
      t.log_prob = std::log(p);
      out.back().transitions.push_back(std::move(t));
    } else {
      throw Error("line " + std::to_string(lineno) + ": unknown record '" + tag + "'");
    }
  }
  for (const WordGraph& wg : out) check_word_graph(wg);
  return out;
}

void write_word_graph(std::ostream& out, const WordGraph& wg) {
  out << "WG " << wg.num_states << '\n';
  char buf[64];
  for (const Transition& t : wg.transitions) {
    std::snprintf(buf, sizeof buf, "%.17g", std::exp(t.log_prob));
    out << "TRANS " << t.from << ' ' << t.to << ' ' << t.word << ' ' << buf << '\n';
  }
}

bool ChartEntry::add_final(int rule, Symbol lhs, Symbol category) {
  auto [it, fresh] = final_pos.emplace(rule, static_cast<int>(finals.size()));
  if (!fresh) return false;
  finals.push_back(rule);
  added_by.emplace_back();
  final_by_lhs[lhs].push_back(rule);
  if (category != lhs) final_by_lhs[category].push_back(rule);
  return true;
}

bool ChartEntry::add_partial(int rule) {
  auto [it, fresh] = partial_pos.emplace(rule, static_cast<int>(partials.size()));
  if (!fresh) return false;
  partials.push_back(rule);
  return true;
}

bool Chart::recognized(const AcnfGrammar& g) const {
  if (n < 1) return false;
  return at(0, n).final_by_lhs.count(g.start) > 0;
}

std::size_t Chart::num_items() const {
  std::size_t s = 0;
  for (const ChartEntry& e : entries) s += e.size();
  return s;
}

namespace {

Chart empty_chart(const AcnfGrammar& g, const WordGraph& wg) {
  Chart c;
  c.n = wg.num_states - 1;
  c.entries.resize(static_cast<std::size_t>(wg.num_states) * wg.num_states);
  c.transitions = wg.transitions;
  for (const Transition& t : wg.transitions) c.transition_symbol.push_back(g.word_symbol(t.word));
  return c;
}

}  // namespace

Chart cky_wordgraph(const AcnfGrammar& g, const WordGraph& wg, const ItemFilter& filter) {
  check_word_graph(wg);
  Chart c = empty_chart(g, wg);
  const int M = c.n;
  std::vector<std::vector<int>> by_span(c.entries.size());
  for (std::size_t t = 0; t < wg.transitions.size(); ++t)
    by_span[static_cast<std::size_t>(wg.transitions[t].from) * (M + 1) + wg.transitions[t].to]
        .push_back(static_cast<int>(t));
  for (int span = 1; span <= M; ++span) {
    for (int i = 0; i + span <= M; ++i) {
      int j = i + span;
      ChartEntry& e = c.at(i, j);
      for (int t : by_span[static_cast<std::size_t>(i) * (M + 1) + j]) {
        Symbol w = c.transition_symbol[t];
        if (w == kNoSymbol) continue;
        for (int r : g.terminal_by_word[w]) {
          Symbol lhs = g.rules[r].lhs;
          if (filter && !filter(i, j, lhs)) continue;
          e.add_final(r, lhs, g.category[lhs]);
          e.added_by[e.final_pos[r]].push_back(t);
        }
      }
      for (int k = i + 1; k < j; ++k) {
        const ChartEntry& left = c.at(i, k);
        const ChartEntry& right = c.at(k, j);
        if (left.partials.empty() || right.finals.empty()) continue;
        for (int r : left.partials) {
          const CnfRule& rule = g.rules[r];
          if (!right.final_by_lhs.count(rule.right)) continue;
          if (filter && !filter(i, j, rule.lhs)) continue;
          e.add_final(r, rule.lhs, g.category[rule.lhs]);
          e.added_by[e.final_pos[r]].push_back(k);
        }
      }
      for (std::size_t f = 0; f < e.finals.size(); ++f) {
        Symbol b = g.rules[e.finals[f]].lhs;
        for (int r : g.binary_by_left[b]) e.add_partial(r);
      }
    }
  }
  return c;
}

Chart cky_sentence(const AcnfGrammar& g, const std::vector<std::string>& words) {
  if (words.empty()) throw Error("empty sentence");
  for (const std::string& w : words)
    if (g.word_symbol(w) == kNoSymbol) throw Error("unknown word '" + w + "'");
  return cky_wordgraph(g, linear_graph(words));
}

namespace {

// Places one parse into a chart. A unary chain may be realized under several
// labels depending on where elementary trees meet inside it, so every label
// the compiled grammar can use for the chain is added.
class ParsePlacer {
 public:
  ParsePlacer(const AcnfGrammar& g, const Tree& parse, Chart& c) : g_(g), t_(parse), c_(c) {}

  std::vector<Symbol> place(NodeId n, bool is_root, int& pos) {
    std::vector<std::string> chain{t_[n].label};
    NodeId bottom = n;
    while (t_[bottom].children.size() == 1 && t_.is_internal(t_[bottom].children[0])) {
      bottom = t_[bottom].children[0];
      chain.push_back(t_[bottom].label);
    }
    std::vector<std::string> labels;
    std::string suffix;
    for (std::size_t r = chain.size(); r-- > 0;) {
      suffix = suffix.empty() ? chain[r] : chain[r] + kChainSeparator + suffix;
      if (!is_root || r == 0) labels.push_back(suffix);
    }
    const auto& kids = t_[bottom].children;
    std::vector<Symbol> out;
    int i = pos;
    if (kids.size() == 1) {
      Symbol w = c_.transition_symbol[pos];
      for (const auto& lab : labels) {
        Symbol s = g_.symbols.find(lab);
        int r = (s == kNoSymbol || w == kNoSymbol) ? -1 : g_.find_rule(s, w, kNoSymbol);
        if (r < 0) continue;
        ChartEntry& e = c_.at(pos, pos + 1);
        if (e.add_final(r, s, g_.category[s])) e.added_by[e.final_pos[r]].push_back(pos);
        usable(s, out);
      }
      ++pos;
      return out;
    }
    std::vector<std::vector<Symbol>> opts;
    std::vector<std::pair<int, int>> spans;
    for (NodeId k : kids) {
      int start = pos;
      if (t_.is_leaf(k)) {
        Symbol w = c_.transition_symbol[pos];
        Symbol s = g_.symbols.find(wrapper_symbol(t_[k].label));
        std::vector<Symbol> o;
        int r = (s == kNoSymbol || w == kNoSymbol) ? -1 : g_.find_rule(s, w, kNoSymbol);
        if (r >= 0) {
          ChartEntry& e = c_.at(pos, pos + 1);
          if (e.add_final(r, s, g_.category[s])) e.added_by[e.final_pos[r]].push_back(pos);
          o.push_back(s);
        }
        ++pos;
        opts.push_back(std::move(o));
      } else {
        opts.push_back(place(k, false, pos));
      }
      spans.emplace_back(start, pos);
    }
    int j = pos;
    std::size_t m = kids.size();
    for (const auto& lab : labels) {
      Symbol s = g_.symbols.find(lab);
      if (s == kNoSymbol) continue;
      std::vector<Symbol> right = opts[m - 1];
      std::size_t first = m - 2;
      if (m > 2) {
        auto f = g_.fresh_names.find(lab);
        if (f == g_.fresh_names.end()) continue;
        Symbol fs = g_.symbols.find(f->second);
        if (fs == kNoSymbol) continue;
        for (std::size_t idx = m - 2; idx >= 1; --idx) {
          if (!link(fs, opts[idx], right, spans[idx].first, spans[idx].second, j)) {
            right.clear();
            break;
          }
          right = {fs};
        }
        first = 0;
      }
      if (right.empty()) continue;
      if (link(s, opts[first], right, spans[first].first, spans[first].second, j)) usable(s, out);
      (void)i;
    }
    return out;
  }

 private:
  void usable(Symbol s, std::vector<Symbol>& out) const {
    out.push_back(s);
    if (g_.category[s] != s) out.push_back(g_.category[s]);
  }

  bool link(Symbol lhs, const std::vector<Symbol>& left, const std::vector<Symbol>& right, int i, int k,
            int j) {
    bool any = false;
    for (Symbol x : left)
      for (Symbol y : right) {
        int r = g_.find_rule(lhs, x, y);
        if (r < 0) continue;
        c_.at(i, k).add_partial(r);
        ChartEntry& e = c_.at(i, j);
        if (e.add_final(r, lhs, g_.category[lhs])) e.added_by[e.final_pos[r]].push_back(k);
        any = true;
      }
    return any;
  }

  const AcnfGrammar& g_;
  const Tree& t_;
  Chart& c_;
};

}  // namespace

Chart tree_to_chart(const AcnfGrammar& g, const Tree& parse) {
  if (parse.empty()) throw Error("empty parse");
  for (NodeId n : parse.leaves())
    if (!parse.is_terminal(n)) throw Error("parse has a nonterminal leaf");
  std::vector<std::string> words = parse.words();
  Chart c = empty_chart(g, linear_graph(words));
  int pos = 0;
  std::vector<Symbol> top = ParsePlacer(g, parse, c).place(parse.root(), true, pos);
  if (top.empty()) throw Error("parse uses a rule that is not in the grammar");
  return c;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct VCell {
  double score = kNegInf;
  int rule = -1;
  int split = -1;
};

bool better(double s, int rule, int split, const VCell& old) {
  if (old.rule < 0) return true;
  if (s != old.score) return s > old.score;
  if (rule != old.rule) return rule < old.rule;
  return split < old.split;
}

class Viterbi {
 public:
  Viterbi(const Scfg& g, const WordGraph& wg) : g_(g), wg_(wg) {
    M_ = wg.num_states - 1;
    for (const auto& r : g.rules) {
      std::vector<int> rhs;
      for (const auto& s : r.rhs) rhs.push_back(intern(s));
      rhs_.push_back(std::move(rhs));
      lhs_.push_back(intern(r.lhs));
    }
    start_ = intern(g.start);
    bool unk = g.terminals.count(kUnknownWord) > 0;
    for (const Transition& t : wg.transitions) {
      int s = -1;
      if (g.terminals.count(t.word)) s = intern(t.word);
      else if (unk) s = intern(kUnknownWord);
      trans_sym_.push_back(s);
    }
    complete_.resize(static_cast<std::size_t>(M_ + 1) * (M_ + 1));
    suffix_.resize(complete_.size());
  }

  std::optional<ViterbiResult> run() {
    for (int span = 1; span <= M_; ++span)
      for (int i = 0; i + span <= M_; ++i) fill(i, i + span);
    if (M_ < 1) return std::nullopt;
    auto it = cell(0, M_).find(start_);
    if (it == cell(0, M_).end()) return std::nullopt;
    ViterbiResult res;
    res.log_prob = it->second.score;
    NodeId root = build(start_, 0, M_, res);
    res.parse.set_root(root);
    return res;
  }

 private:
  int intern(const std::string& s) {
    auto [it, fresh] = ids_.emplace(s, static_cast<int>(names_.size()));
    if (fresh) {
      names_.push_back(s);
      terminal_.push_back(g_.terminals.count(s) > 0 && !g_.nonterminals.count(s));
    }
    return it->second;
  }

  std::unordered_map<int, VCell>& cell(int i, int j) {
    return complete_[static_cast<std::size_t>(i) * (M_ + 1) + j];
  }
  std::unordered_map<long, VCell>& suffix(int i, int j) {
    return suffix_[static_cast<std::size_t>(i) * (M_ + 1) + j];
  }

  // Best transition for a terminal symbol, or -1.
  int best_transition(int sym, int i, int j, double& score) const {
    int best = -1;
    score = kNegInf;
    for (std::size_t t = 0; t < wg_.transitions.size(); ++t) {
      const Transition& tr = wg_.transitions[t];
      if (tr.from != i || tr.to != j || trans_sym_[t] != sym) continue;
      if (tr.log_prob > score) {
        score = tr.log_prob;
        best = static_cast<int>(t);
      }
    }
    return best;
  }

  double symscore(int sym, int i, int j) {
    if (terminal_[sym]) {
      double s;
      best_transition(sym, i, j, s);
      return s;
    }
    auto& c = cell(i, j);
    auto it = c.find(sym);
    return it == c.end() ? kNegInf : it->second.score;
  }

  double suffix_score(int r, int d, int i, int j) {
    if (d == static_cast<int>(rhs_[r].size()) - 1) return symscore(rhs_[r][d], i, j);
    auto& s = suffix(i, j);
    auto it = s.find(key(r, d));
    return it == s.end() ? kNegInf : it->second.score;
  }

  static long key(int r, int d) { return static_cast<long>(r) * 4096 + d; }

  void offer(int i, int j, int lhs, double s, int r, int k) {
    if (s == kNegInf) return;
    VCell& c = cell(i, j)[lhs];
    if (better(s, r, k, c)) c = VCell{s, r, k};
  }

  void fill(int i, int j) {
    for (std::size_t r = 0; r < rhs_.size(); ++r) {
      const auto& rhs = rhs_[r];
      double lp = g_.rules[r].log_prob;
      if (rhs.size() == 1) {
        if (terminal_[rhs[0]]) offer(i, j, lhs_[r], symscore(rhs[0], i, j) + lp, static_cast<int>(r), -1);
        continue;
      }
      for (int k = i + 1; k < j; ++k) {
        double left = symscore(rhs[0], i, k);
        if (left == kNegInf) continue;
        double rest = suffix_score(static_cast<int>(r), 1, k, j);
        if (rest == kNegInf) continue;
        offer(i, j, lhs_[r], left + (lp + rest), static_cast<int>(r), k);
      }
    }
    for (std::size_t round = 0; round <= rhs_.size(); ++round) {
      bool changed = false;
      for (std::size_t r = 0; r < rhs_.size(); ++r) {
        const auto& rhs = rhs_[r];
        if (rhs.size() != 1 || terminal_[rhs[0]]) continue;
        double below = symscore(rhs[0], i, j);
        if (below == kNegInf) continue;
        double s = below + g_.rules[r].log_prob;
        VCell& c = cell(i, j)[lhs_[r]];
        if (better(s, static_cast<int>(r), -1, c)) {
          c = VCell{s, static_cast<int>(r), -1};
          changed = true;
        }
      }
      if (!changed) break;
    }
    for (auto it = cell(i, j).begin(); it != cell(i, j).end();) {
      if (it->second.rule < 0) it = cell(i, j).erase(it);
      else ++it;
    }
    for (std::size_t r = 0; r < rhs_.size(); ++r) {
      const auto& rhs = rhs_[r];
      int len = static_cast<int>(rhs.size());
      for (int d = len - 2; d >= 1; --d) {
        VCell best;
        for (int m = i + 1; m < j; ++m) {
          double a = symscore(rhs[d], i, m);
          if (a == kNegInf) continue;
          double b = suffix_score(static_cast<int>(r), d + 1, m, j);
          if (b == kNegInf) continue;
          double s = a + b;
          if (s > best.score) best = VCell{s, static_cast<int>(r), m};
        }
        if (best.rule >= 0) suffix(i, j)[key(static_cast<int>(r), d)] = best;
      }
    }
  }

  NodeId build(int sym, int i, int j, ViterbiResult& res) {
    Tree& t = res.parse;
    if (terminal_[sym]) {
      double s;
      int tr = best_transition(sym, i, j, s);
      res.sentence.push_back(wg_.transitions[tr].word);
      return t.add(wg_.transitions[tr].word, SymbolKind::terminal);
    }
    const VCell& c = cell(i, j).at(sym);
    int r = c.rule;
    res.rules.push_back(g_.rules[r].id);
    NodeId me = t.add(names_[sym], SymbolKind::nonterminal);
    const auto& rhs = rhs_[r];
    if (rhs.size() == 1) {
      NodeId ch = build(rhs[0], i, j, res);
      t.attach(me, ch);
      return me;
    }
    int k = c.split;
    NodeId first = build(rhs[0], i, k, res);
    t.attach(me, first);
    int d = 1;
    int pos = k;
    while (d < static_cast<int>(rhs.size()) - 1) {
      int m = suffix(pos, j).at(key(r, d)).split;
      NodeId ch = build(rhs[d], pos, m, res);
      t.attach(me, ch);
      pos = m;
      ++d;
    }
    NodeId last = build(rhs[d], pos, j, res);
    t.attach(me, last);
    return me;
  }

  const Scfg& g_;
  const WordGraph& wg_;
  int M_ = 0;
  int start_ = 0;
  std::unordered_map<std::string, int> ids_;
  std::vector<std::string> names_;
  std::vector<bool> terminal_;
  std::vector<std::vector<int>> rhs_;
  std::vector<int> lhs_;
  std::vector<int> trans_sym_;
  std::vector<std::unordered_map<int, VCell>> complete_;
  std::vector<std::unordered_map<long, VCell>> suffix_;
};

}  // namespace

std::optional<ViterbiResult> scfg_viterbi(const Scfg& g, const WordGraph& wg) {
  check_word_graph(wg);
  return Viterbi(g, wg).run();
}

std::optional<ViterbiResult> scfg_viterbi(const Scfg& g, const std::vector<std::string>& words) {
  return scfg_viterbi(g, linear_graph(words));
}

}  // namespace dop
