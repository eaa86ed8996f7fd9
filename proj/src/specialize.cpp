#include "dop/specialize.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace dop {

void check_config(const LearnerConfig& cfg) {
  if (!(cfg.delta > 0.0 && cfg.delta <= 1.0)) throw Error("delta must lie in (0, 1]");
  if (cfg.phi < 1) throw Error("phi must be at least 1");
  if (cfg.max_ssf_len < 1) throw Error("max SSF length must be at least 1");
  if (cfg.coverage_upper_bound &&
      !(*cfg.coverage_upper_bound >= 0.0 && *cfg.coverage_upper_bound <= 1.0))
    throw Error("coverage upper bound must lie in [0, 1]");
}

std::string to_string(const SsfKey& k) {
  std::string out;
  for (const std::string& s : k.symbols) {
    if (!out.empty()) out += ' ';
    out += s;
  }
  if (!k.eq_class.empty()) out += " " + k.eq_class;
  return out;
}

double SsfStats::asd(const std::string& fragment) const {
  auto it = ambiguity_set.find(fragment);
  if (it == ambiguity_set.end() || freq_c == 0) return 0.0;
  return static_cast<double>(it->second) / static_cast<double>(freq_c);
}

namespace {

WordGraph span_graph(const WordGraph& wg, int i, int j) {
  WordGraph out;
  out.num_states = j - i + 1;
  for (const Transition& t : wg.transitions)
    if (t.from >= i && t.to <= j) out.transitions.push_back({t.from - i, t.to - i, t.word, t.log_prob});
  return out;
}

std::vector<std::string> remove_repetitions(const std::vector<std::string>& in) {
  std::vector<std::string> out;
  for (const std::string& s : in)
    if (out.empty() || out.back() != s) out.push_back(s);
  return out;
}

// Frontier of the current partial tree of one marked tree.
struct View {
  std::vector<NodeId> leaves;
  std::vector<bool> leaf_terminal;
  std::vector<NodeId> open;  // unmarked visible internal nodes, pre-order
  std::vector<std::pair<int, int>> range;
  std::vector<bool> is_leaf;  // per node: acts as a frontier leaf

  bool has_terminal(int a, int b) const {
    for (int k = a; k < b; ++k)
      if (leaf_terminal[k]) return true;
    return false;
  }
};

View make_view(const MarkedTree& m) {
  const Tree& t = m.tree;
  View v;
  v.range.assign(t.size(), {-1, -1});
  v.is_leaf.assign(t.size(), false);
  if (t.empty() || m.marked[t.root()]) return v;
  auto visit = [&](auto&& self, NodeId n) -> void {
    int a = static_cast<int>(v.leaves.size());
    if ((n != t.root() && m.marked[n]) || t.is_leaf(n)) {
      v.leaves.push_back(n);
      v.leaf_terminal.push_back(t.is_terminal(n));
      v.is_leaf[n] = true;
      v.range[n] = {a, a + 1};
      return;
    }
    v.open.push_back(n);
    for (NodeId c : t[n].children) self(self, c);
    v.range[n] = {a, static_cast<int>(v.leaves.size())};
  };
  visit(visit, t.root());
  return v;
}

std::vector<std::string> labels(const Tree& t, const View& v, int a, int b) {
  std::vector<std::string> out;
  for (int k = a; k < b; ++k) out.push_back(t[v.leaves[k]].label);
  return out;
}

// Initial bracketed SSF with repetitions removed inside each bracket.
std::string bracket_key(const Tree& t, const View& v, NodeId n) {
  std::string out;
  auto emit = [&](const std::vector<std::string>& syms) {
    out += '(';
    std::vector<std::string> rp = remove_repetitions(syms);
    for (std::size_t k = 0; k < rp.size(); ++k) {
      if (k) out += ' ';
      out += rp[k];
    }
    out += ')';
  };
  auto visit = [&](auto&& self, NodeId x) -> void {
    if (v.is_leaf[x]) {
      emit({t[x].label});
      return;
    }
    bool flat = true;
    for (NodeId c : t[x].children) flat = flat && v.is_leaf[c];
    if (flat) {
      std::vector<std::string> syms;
      for (NodeId c : t[x].children) syms.push_back(t[c].label);
      emit(syms);
      return;
    }
    for (NodeId c : t[x].children) self(self, c);
  };
  visit(visit, n);
  return out;
}

Context context_of(const Tree& t, const View& v, int a, int b) {
  auto at = [&](int k) {
    return (k < 0 || k >= static_cast<int>(v.leaves.size())) ? kPad : t[v.leaves[k]].label;
  };
  return {at(a - 2), at(a - 1), at(b), at(b + 1)};
}

struct Candidate {
  NodeId node;
  SsfKey key;
};

// Topmost open node for every constituent range that may be an SSF.
std::vector<Candidate> candidates(const MarkedTree& m, const View& v, const LearnerConfig& cfg) {
  std::vector<Candidate> out;
  std::set<std::pair<int, int>> seen;
  for (NodeId n : v.open) {
    auto [a, b] = v.range[n];
    if (b - a > cfg.max_ssf_len || v.has_terminal(a, b)) continue;
    if (!seen.insert({a, b}).second) continue;
    SsfKey key;
    key.symbols = labels(m.tree, v, a, b);
    if (cfg.use_eq_class) {
      key.symbols = remove_repetitions(key.symbols);
      key.eq_class = bracket_key(m.tree, v, n);
    }
    out.push_back({n, std::move(key)});
  }
  return out;
}

int count_internal(const Tree& t) {
  int k = 0;
  for (std::size_t n = 0; n < t.size(); ++n)
    if (t.is_internal(static_cast<NodeId>(n))) ++k;
  return k;
}

// Internal nodes that are marked or hidden under a mark.
int count_reduced(const MarkedTree& m) {
  const Tree& t = m.tree;
  int k = 0;
  auto visit = [&](auto&& self, NodeId n, bool hidden) -> void {
    if (!t.is_internal(n)) return;
    bool gone = hidden || m.marked[n];
    if (gone) ++k;
    for (NodeId c : t[n].children) self(self, c, gone);
  };
  visit(visit, t.root(), false);
  return k;
}

bool is_mark_leaf(const MarkedTree& m, NodeId n) { return m.marked[n] && m.tree.is_internal(n); }

// A fragment whose frontier is one substitution site cannot be compiled, so
// the mark below it is dropped and the two fragments merge.
void merge_lone_subsites(MarkedTree& m) {
  const Tree& t = m.tree;
  for (NodeId n : t.preorder()) {
    if (!m.marked[n]) continue;
    for (;;) {
      std::vector<NodeId> front;
      auto visit = [&](auto&& self, NodeId x) -> void {
        if (x != n && (is_mark_leaf(m, x) || t.is_leaf(x))) {
          front.push_back(x);
          return;
        }
        for (NodeId c : t[x].children) self(self, c);
      };
      visit(visit, n);
      if (front.size() == 1 && is_mark_leaf(m, front[0])) m.marked[front[0]] = false;
      else break;
    }
  }
}

void append_unique(std::vector<Tree>& out, std::set<std::string>& seen, Tree t) {
  if (seen.insert(write_bracketed(t)).second) out.push_back(std::move(t));
}

}  // namespace

SsfTable ssf_pass(const std::vector<MarkedTree>& current, const LearnerConfig& cfg) {
  SsfTable table;
  std::map<std::vector<std::string>, long> windows;
  std::map<std::vector<std::string>, std::map<Context, long>> window_contexts;
  for (const MarkedTree& m : current) {
    View v = make_view(m);
    int len = static_cast<int>(v.leaves.size());
    for (int a = 0; a < len; ++a) {
      for (int b = a + 1; b <= len && b - a <= cfg.max_ssf_len; ++b) {
        if (v.leaf_terminal[b - 1]) break;
        std::vector<std::string> syms = labels(m.tree, v, a, b);
        if (cfg.use_eq_class) syms = remove_repetitions(syms);
        ++windows[syms];
        if (cfg.use_backoff) ++window_contexts[syms][context_of(m.tree, v, a, b)];
      }
    }
    for (Candidate& c : candidates(m, v, cfg)) {
      SsfStats& s = table[c.key];
      ++s.freq_c;
      ++s.ambiguity_set[write_bracketed(cut_fragment(m, c.node))];
      if (cfg.use_backoff) {
        auto [a, b] = v.range[c.node];
        ++s.contexts[context_of(m.tree, v, a, b)].freq_c;
      }
    }
  }
  for (auto& [key, s] : table) {
    s.freq_total = windows[key.symbols];
    if (cfg.use_backoff)
      for (const auto& [ctx, n] : window_contexts[key.symbols]) s.contexts[ctx].freq_total = n;
  }
  return table;
}

double grf_measure(const SsfKey& key, const SsfStats& stats, const LearnerConfig& cfg) {
  if (stats.freq_c < cfg.phi || stats.cp() <= cfg.delta) return 0.0;
  return static_cast<double>(key.symbols.size() - 1) * static_cast<double>(stats.freq_c);
}

double backoff_measure(const SsfKey& key, const ContextStats& contexts, const LearnerConfig& cfg) {
  if (key.symbols.size() < 2) return 0.0;
  ContextStats general;
  for (const auto& [ctx, n] : contexts) {
    for (int mask = 0; mask < 16; ++mask) {
      Context g = ctx;
      for (int p = 0; p < 4; ++p)
        if (mask & (1 << p)) g[p] = kWildcard;
      general[g].freq_c += n.freq_c;
      general[g].freq_total += n.freq_total;
    }
  }
  std::vector<std::pair<Context, long>> viable;
  for (const auto& [g, n] : general) {
    if (n.freq_c < cfg.phi || n.freq_total == 0) continue;
    double cp = static_cast<double>(n.freq_c) / static_cast<double>(n.freq_total);
    if (cp > cfg.delta) viable.emplace_back(g, n.freq_c);
  }
  auto generalizes = [](const Context& g, const Context& i) {
    if (g == i) return false;
    for (int p = 0; p < 4; ++p)
      if (g[p] != kWildcard && g[p] != i[p]) return false;
    return true;
  };
  double score = 0.0;
  for (const auto& [g, fc] : viable) {
    bool most_general = std::none_of(viable.begin(), viable.end(),
                                     [&](const auto& o) { return generalizes(o.first, g); });
    if (most_general) score += static_cast<double>(key.symbols.size() - 1) * static_cast<double>(fc);
  }
  return score;
}

double measure(const SsfKey& key, const SsfStats& stats, const LearnerConfig& cfg) {
  return cfg.use_backoff ? backoff_measure(key, stats.contexts, cfg) : grf_measure(key, stats, cfg);
}

Tree cut_fragment(const MarkedTree& m, NodeId node) {
  const Tree& t = m.tree;
  Tree out;
  auto copy = [&](auto&& self, NodeId x, bool top) -> NodeId {
    NodeId y = out.add(t[x].label, t[x].kind);
    if (!top && m.marked[x]) return y;
    for (NodeId c : t[x].children) out.attach(y, self(self, c, false));
    return y;
  };
  out.set_root(copy(copy, node, true));
  return out;
}

std::vector<Tree> cut_at_marks(const MarkedTree& m) {
  std::vector<Tree> out;
  for (NodeId n : m.tree.preorder())
    if (n == m.tree.root() || is_mark_leaf(m, n)) out.push_back(cut_fragment(m, n));
  return out;
}

Specialization sequential_cover(const Treebank& tb, const LearnerConfig& cfg) {
  check_config(cfg);
  if (tb.trees.empty()) throw Error("empty tree-bank");
  Specialization sp;
  sp.start = tb.start;
  int total = 0;
  for (const Tree& t : tb.trees) {
    sp.marked.push_back({t, std::vector<bool>(t.size(), false)});
    total += count_internal(t);
  }
  auto coverage = [&] {
    int k = 0;
    for (const MarkedTree& m : sp.marked) k += count_reduced(m);
    return total == 0 ? 1.0 : static_cast<double>(k) / static_cast<double>(total);
  };
  auto bound_reached = [&] {
    return cfg.coverage_upper_bound && coverage() >= *cfg.coverage_upper_bound;
  };

  if (!bound_reached()) {
    for (MarkedTree& m : sp.marked)
      for (std::size_t n = 0; n < m.tree.size(); ++n)
        if (m.tree.is_preterminal(static_cast<NodeId>(n))) m.marked[n] = true;

    for (int iteration = 1; !bound_reached(); ++iteration) {
      SsfTable table = ssf_pass(sp.marked, cfg);
      std::map<SsfKey, double> score;
      for (const auto& [key, s] : table) score[key] = measure(key, s, cfg);

      std::vector<View> views;
      std::vector<std::vector<Candidate>> cands;
      std::map<SsfKey, double> best_rival;
      for (const MarkedTree& m : sp.marked) {
        views.push_back(make_view(m));
        cands.push_back(candidates(m, views.back(), cfg));
        const View& v = views.back();
        const std::vector<Candidate>& cs = cands.back();
        for (std::size_t x = 0; x < cs.size(); ++x) {
          auto [a, b] = v.range[cs[x].node];
          for (std::size_t y = x + 1; y < cs.size(); ++y) {
            auto [c, d] = v.range[cs[y].node];
            if (!(a <= c && d <= b) || cs[x].key == cs[y].key) continue;
            double& rx = best_rival[cs[x].key];
            double& ry = best_rival[cs[y].key];
            rx = std::max(rx, score[cs[y].key]);
            ry = std::max(ry, score[cs[x].key]);
          }
        }
      }
      auto wins = [&](const SsfKey& k) {
        double s = score[k];
        return s > 0.0 && s > best_rival[k];
      };

      std::map<SsfKey, bool> learned;
      for (std::size_t i = 0; i < sp.marked.size(); ++i) {
        MarkedTree& m = sp.marked[i];
        std::map<NodeId, const SsfKey*> key_of;
        for (const Candidate& c : cands[i]) key_of[c.node] = &c.key;
        auto visit = [&](auto&& self, NodeId n) -> void {
          if (views[i].is_leaf[n]) return;
          auto it = key_of.find(n);
          if (it != key_of.end() && wins(*it->second)) {
            m.marked[n] = true;
            learned[*it->second] = true;
            return;
          }
          for (NodeId c : m.tree[n].children) self(self, c);
        };
        if (!views[i].open.empty()) visit(visit, m.tree.root());
      }
      if (learned.empty()) break;
      for (const auto& [key, _] : learned) {
        const SsfStats& s = table.at(key);
        sp.learned.push_back({iteration, key, s.freq_c, s.freq_total, s.cp(), score[key]});
      }
      sp.iterations = iteration;
    }
  }
  sp.coverage = coverage();

  std::vector<Tree> frags;
  std::set<std::string> seen;
  for (MarkedTree& m : sp.marked) {
    m.marked[m.tree.root()] = true;
    merge_lone_subsites(m);
    for (Tree& f : cut_at_marks(m)) append_unique(frags, seen, std::move(f));
  }
  for (const MarkedTree& m : sp.marked)
    for (NodeId n : m.tree.preorder())
      if (m.tree.is_preterminal(n)) append_unique(frags, seen, m.tree.subtree(n));
  sp.tsg = std::move(frags);
  return sp;
}

std::vector<Tree> complete_ambiguity_sets(const std::vector<MarkedTree>& mtb) {
  struct Site {
    std::size_t tree;
    NodeId node;
  };
  struct Entry {
    bool marked = false;
    bool unmarked = false;
    std::vector<Site> open;
  };
  std::map<std::vector<std::string>, Entry> sets;
  std::vector<std::vector<std::string>> order;
  for (std::size_t i = 0; i < mtb.size(); ++i) {
    const MarkedTree& m = mtb[i];
    const Tree& t = m.tree;
    for (NodeId n : t.preorder()) {
      if (!t.is_internal(n) || t.is_preterminal(n)) continue;
      std::vector<std::string> ssf;
      bool lexical = false;
      auto visit = [&](auto&& self, NodeId x) -> void {
        if (t.is_preterminal(x) || t.is_leaf(x)) {
          lexical = lexical || t.is_terminal(x);
          ssf.push_back(t[x].label);
          return;
        }
        for (NodeId c : t[x].children) self(self, c);
      };
      visit(visit, n);
      if (lexical || ssf.size() < 2) continue;
      auto [it, fresh] = sets.try_emplace(ssf);
      if (fresh) order.push_back(ssf);
      if (m.marked[n]) it->second.marked = true;
      else {
        it->second.unmarked = true;
        it->second.open.push_back({i, n});
      }
    }
  }
  std::vector<Tree> out;
  std::set<std::string> seen;
  for (const auto& ssf : order) {
    const Entry& e = sets[ssf];
    if (!(e.marked && e.unmarked)) continue;
    for (const Site& s : e.open) {
      const Tree& t = mtb[s.tree].tree;
      MarkedTree lex{t, std::vector<bool>(t.size(), false)};
      for (std::size_t k = 0; k < t.size(); ++k)
        lex.marked[k] = t.is_preterminal(static_cast<NodeId>(k));
      append_unique(out, seen, cut_fragment(lex, s.node));
    }
  }
  return out;
}

void add_unique(std::vector<Tree>& to, const std::vector<Tree>& from) {
  std::set<std::string> seen;
  for (const Tree& t : to) seen.insert(write_bracketed(t));
  for (const Tree& t : from) append_unique(to, seen, t);
}

Stsg tsg_as_stsg(const std::string& start, const std::vector<Tree>& tsg) {
  std::map<std::string, int> per_root;
  for (const Tree& t : tsg) ++per_root[t[t.root()].label];
  std::vector<std::pair<Tree, double>> trees;
  for (const Tree& t : tsg) trees.emplace_back(t, 1.0 / per_root[t[t.root()].label]);
  return make_stsg(start, trees);
}

std::string dispatch_name(Dispatch d) {
  switch (d) {
    case Dispatch::sdop: return "SDOP";
    case Dispatch::dop: return "DOP";
    case Dispatch::dop_unrestricted: return "DOP-FULL";
    case Dispatch::none: return "NOPARSE";
  }
  return "";
}

IntegratedParser::IntegratedParser(const Stsg& tsg, const Stsg& sdop, const Stsg& dop)
    : tsg_(to_acnf(tsg)), sdop_(to_acnf(sdop)), dop_(to_acnf(dop)) {
  for (const AddressInfo& a : tsg_.addresses) {
    if (!a.root) continue;
    Symbol x = tsg_.category[tsg_.rules[a.rule].lhs];
    if (rooted_.count(x)) continue;
    AcnfGrammar g = tsg_;
    g.start = x;
    rooted_.emplace(x, std::move(g));
  }
}

IntegratedResult IntegratedParser::parse(const std::vector<std::string>& words) const {
  if (words.empty()) throw Error("empty sentence");
  return parse(linear_graph(words));
}

IntegratedResult IntegratedParser::parse(const WordGraph& wg) const {
  IntegratedResult res;
  res.tsg_chart = cky_wordgraph(tsg_, wg);
  const Chart& tc = res.tsg_chart;
  int n = tc.n;
  res.complete.assign(n + 1, std::vector<bool>(n + 1, false));
  std::vector<std::vector<std::set<std::string>>> cats(n + 1,
                                                       std::vector<std::set<std::string>>(n + 1));
  auto split = [](const std::string& name) {
    std::vector<std::string> parts;
    std::size_t from = 0;
    for (;;) {
      std::size_t at = name.find(kChainSeparator, from);
      parts.push_back(name.substr(from, at - from));
      if (at == std::string::npos) break;
      from = at + kChainSeparator.size();
    }
    return parts;
  };
  for (int i = 0; i <= n; ++i) {
    for (int j = i + 1; j <= n; ++j) {
      const ChartEntry& e = tc.at(i, j);
      for (int r : e.finals)
        for (std::string& p : split(tsg_.symbols.name(tsg_.rules[r].lhs))) cats[i][j].insert(p);
      // Phase-1 items come from the underlying CFG, so a root item only
      // counts once a derivation over the span passes phase 2.
      for (const auto& [x, g] : rooted_) {
        if (!e.final_by_lhs.count(x)) continue;
        WordGraph sub = span_graph(wg, i, j);
        if (mpd(g, cky_wordgraph(g, sub))) {
          res.complete[i][j] = true;
          break;
        }
      }
    }
  }
  res.complete_whole = n > 0 && res.complete[0][n];

  if (res.complete_whole) {
    Chart sc = cky_wordgraph(sdop_, wg);
    if (sc.recognized(sdop_)) {
      res.best = mpd(sdop_, sc);
      if (res.best) {
        res.used = Dispatch::sdop;
        return res;
      }
    }
  }

  ItemFilter filter = [&](int i, int j, Symbol lhs) {
    if (!res.complete[i][j]) return true;
    const std::string& name = dop_.symbols.name(lhs);
    if (!dop_.user_symbol[lhs] && name.find(kChainSeparator) == std::string::npos) return true;
    for (const std::string& p : split(name))
      if (!cats[i][j].count(p)) return false;
    return true;
  };
  Chart dc = cky_wordgraph(dop_, wg, filter);
  if (dc.recognized(dop_)) res.best = mpd(dop_, dc);
  if (res.best) {
    res.used = Dispatch::dop;
    return res;
  }
  Chart fc = cky_wordgraph(dop_, wg);
  if (fc.recognized(dop_)) res.best = mpd(dop_, fc);
  res.used = res.best ? Dispatch::dop_unrestricted : Dispatch::none;
  return res;
}

void write_marked_treebank(std::ostream& out, const std::vector<MarkedTree>& mtb) {
  for (const MarkedTree& m : mtb) {
    Tree t = m.tree;
    for (std::size_t n = 0; n < t.size(); ++n) {
      std::string& label = t[static_cast<NodeId>(n)].label;
      if (!label.empty() && label.back() == '@') throw Error("label '" + label + "' ends in '@'");
      if (m.marked[n]) label += '@';
    }
    out << write_bracketed(t) << '\n';
  }
}

std::vector<MarkedTree> read_marked_treebank(std::istream& in) {
  std::vector<MarkedTree> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    MarkedTree m;
    try {
      m.tree = parse_bracketed(line);
    } catch (const ParseError& e) {
      throw Error("line " + std::to_string(lineno) + ": " + e.what());
    }
    m.marked.assign(m.tree.size(), false);
    for (std::size_t n = 0; n < m.tree.size(); ++n) {
      NodeId id = static_cast<NodeId>(n);
      std::string& label = m.tree[id].label;
      if (m.tree.is_internal(id) && label.size() > 1 && label.back() == '@') {
        label.pop_back();
        m.marked[n] = true;
      }
    }
    out.push_back(std::move(m));
  }
  std::vector<const Tree*> ptrs;
  for (const MarkedTree& m : out) ptrs.push_back(&m.tree);
  check_symbol_kinds(ptrs);
  return out;
}

void write_tsg(std::ostream& out, const std::string& start, const std::vector<Tree>& tsg) {
  out << "STSG " << start << '\n';
  for (const Tree& t : tsg) out << "1.0\t" << write_bracketed(t) << '\n';
}

std::vector<Tree> read_tsg(std::istream& in, std::string* start) {
  Stsg g = read_stsg(in);
  if (start) *start = g.start;
  std::vector<Tree> out;
  for (ElementaryTree& e : g.elems) out.push_back(std::move(e.tree));
  return out;
}

}  // namespace dop
