#include "dop/disambig.hpp"

#include <cmath>
#include <cstdio>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <set>

namespace dop {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

bool recognize_derivation_tree(const Stsg& g, const DecoratedTree& dt) {
  const Tree& t = dt.tree;
  if (t.empty() || dt.address.size() != t.size()) return false;
  NodeId root = t.root();
  if (t[root].label != g.start) return false;
  Address ra = dt.address[root];
  if (!g.is_address(ra)) return false;
  const ElementaryTree& re = g.elems[g.elem_of_address(ra)];
  if (ra - re.address_base != re.tree.root()) return false;
  for (NodeId x : t.preorder()) {
    if (t.is_leaf(x)) continue;
    Address a = dt.address[x];
    if (!g.is_address(a)) return false;
    const ElementaryTree& e = g.elems[g.elem_of_address(a)];
    NodeId v = a - e.address_base;
    if (e.tree[v].label != t[x].label) return false;
    const auto& want = e.tree[v].children;
    const auto& have = t[x].children;
    if (want.size() != have.size()) return false;
    for (std::size_t j = 0; j < want.size(); ++j) {
      NodeId w = want[j];
      NodeId y = have[j];
      if (e.tree.is_leaf(w) && e.tree.is_terminal(w)) {
        if (!t.is_leaf(y) || !t.is_terminal(y)) return false;
        if (e.tree[w].label != t[y].label &&
            !(e.tree[w].label == kUnknownWord && !g.terminals.count(t[y].label)))
          return false;
      } else if (e.tree.is_internal(w)) {
        if (t.is_leaf(y) || dt.address[y] != e.address_base + w) return false;
      } else {
        if (t[y].label != e.tree[w].label) return false;
        if (t.is_leaf(y)) continue;
        Address b = dt.address[y];
        if (!g.is_address(b)) return false;
        const ElementaryTree& f = g.elems[g.elem_of_address(b)];
        if (b - f.address_base != f.tree.root()) return false;
      }
    }
  }
  return true;
}

namespace {

struct Cell {
  double score = kNegInf;
  int back = -1;
};

struct RootCell {
  double score = kNegInf;
  Address addr = kNoAddress;
};

struct ForestEntry {
  std::unordered_map<Address, Cell> fin;
  std::unordered_map<Address, double> part;
  std::unordered_map<Symbol, RootCell> roots;
};

class Phase2 {
 public:
  Phase2(const AcnfGrammar& g, const Chart& c, bool max, bool naive, ParseStats* stats)
      : g_(g), c_(c), max_(max), naive_(naive), stats_(stats) {
    forest_.resize(c.entries.size());
  }

  void run() {
    const int M = c_.n;
    for (int span = 1; span <= M; ++span)
      for (int i = 0; i + span <= M; ++i) fill(i, i + span);
  }

  ForestEntry& at(int i, int j) { return forest_[static_cast<std::size_t>(i) * (c_.n + 1) + j]; }

  const RootCell* top() {
    if (c_.n < 1) return nullptr;
    auto& roots = at(0, c_.n).roots;
    auto it = roots.find(g_.start);
    return it == roots.end() ? nullptr : &it->second;
  }

  Derivation unfold(const RootCell& top) {
    Derivation d;
    d.log_prob = top.score;
    DecoratedTree& t = d.cnf_tree;
    NodeId root = build(top.addr, 0, c_.n, t, d.sentence);
    t.tree.set_root(root);
    ReversedParse rp = reverse_parse(g_, t);
    d.parse = std::move(rp.parse);
    d.trees = std::move(rp.derivation);
    d.derivation_tree = std::move(rp.derivation_tree);
    return d;
  }

 private:
  void count(std::uint64_t n = 1) {
    if (stats_) stats_->viability_checks += n;
  }

  void combine(double& acc, double s) { acc = max_ ? std::max(acc, s) : log_add(acc, s); }

  // Best root for symbol s over the entry, in max mode ties go to the
  // smaller address.
  void offer_root(RootCell& rc, Address c, double s) {
    if (max_) {
      if (s > rc.score || (s == rc.score && c < rc.addr)) rc = RootCell{s, c};
    } else {
      rc.score = log_add(rc.score, s);
      if (rc.addr == kNoAddress) rc.addr = c;
    }
  }

  // Score of the child at position j of c over entry e, or -inf.
  double child_score(Address c, int j, Symbol sym, const ChartEntry& ce, ForestEntry& fe) {
    const AddressInfo& info = g_.addresses[c];
    if (!naive_) {
      count();
      if (info.subsite[j]) {
        auto it = fe.roots.find(sym);
        return it == fe.roots.end() ? kNegInf : it->second.score;
      }
      auto it = fe.fin.find(info.child[j]);
      return it == fe.fin.end() ? kNegInf : it->second.score;
    }
    double acc = kNegInf;
    auto lhs = ce.final_by_lhs.find(sym);
    if (lhs == ce.final_by_lhs.end()) return acc;
    for (int r : lhs->second) {
      for (Address c2 : g_.occurrences[r]) {
        count();
        if (!g_.viable(c, c2, j)) continue;
        auto it = fe.fin.find(c2);
        if (it == fe.fin.end()) continue;
        combine(acc, it->second.score);
      }
    }
    return acc;
  }

  void fill(int i, int j) {
    const ChartEntry& ce = c_.at(i, j);
    ForestEntry& fe = at(i, j);
    for (std::size_t idx = 0; idx < ce.finals.size(); ++idx) {
      int r = ce.finals[idx];
      const CnfRule& rule = g_.rules[r];
      const auto& added = ce.added_by[idx];
      for (Address c : g_.occurrences[r]) {
        const AddressInfo& info = g_.addresses[c];
        Cell cell;
        if (rule.terminal()) {
          for (int t : added) {
            double s = c_.transitions[t].log_prob + info.pf;
            if (max_) {
              if (s > cell.score) cell = Cell{s, t};
            } else {
              cell.score = log_add(cell.score, s);
            }
          }
        } else {
          for (int k : added) {
            ForestEntry& lf = at(i, k);
            auto lit = lf.part.find(c);
            if (lit == lf.part.end()) continue;
            double right = child_score(c, 1, rule.right, c_.at(k, j), at(k, j));
            if (right == kNegInf) continue;
            double s = lit->second + (g_.link(c, 1) + right);
            if (max_) {
              if (s > cell.score) cell = Cell{s, k};
            } else {
              cell.score = log_add(cell.score, s);
            }
          }
        }
        if (cell.score == kNegInf) continue;
        fe.fin.emplace(c, cell);
        if (info.root) offer_root(fe.roots[g_.category[rule.lhs]], c, cell.score);
      }
    }
    for (int r : ce.partials) {
      const CnfRule& rule = g_.rules[r];
      for (Address c : g_.occurrences[r]) {
        double left = child_score(c, 0, rule.left, ce, fe);
        if (left == kNegInf) continue;
        fe.part.emplace(c, g_.link(c, 0) + left);
      }
    }
  }

  NodeId build(Address c, int i, int j, DecoratedTree& t, std::vector<std::string>& sentence) {
    const AddressInfo& info = g_.addresses[c];
    const CnfRule& rule = g_.rules[info.rule];
    const Cell& cell = at(i, j).fin.at(c);
    NodeId me = t.tree.add(g_.symbols.name(rule.lhs), SymbolKind::nonterminal);
    t.address.push_back(c);
    if (rule.terminal()) {
      const std::string& w = c_.transitions[cell.back].word;
      sentence.push_back(w);
      t.tree.attach(me, t.tree.add(w, SymbolKind::terminal));
      t.address.push_back(kNoAddress);
      return me;
    }
    int k = cell.back;
    Address a0 = info.subsite[0] ? at(i, k).roots.at(rule.left).addr : info.child[0];
    Address a1 = info.subsite[1] ? at(k, j).roots.at(rule.right).addr : info.child[1];
    NodeId l = build(a0, i, k, t, sentence);
    NodeId r = build(a1, k, j, t, sentence);
    t.tree.attach(me, l);
    t.tree.attach(me, r);
    return me;
  }

  const AcnfGrammar& g_;
  const Chart& c_;
  bool max_;
  bool naive_;
  ParseStats* stats_;
  std::vector<ForestEntry> forest_;
};

std::optional<Derivation> run_max(const AcnfGrammar& g, const Chart& chart, bool naive,
                                  ParseStats* stats) {
  Phase2 p(g, chart, true, naive, stats);
  p.run();
  const RootCell* top = p.top();
  if (!top) return std::nullopt;
  return p.unfold(*top);
}

}  // namespace

std::optional<Derivation> mpd(const AcnfGrammar& g, const Chart& chart, ParseStats* stats) {
  return run_max(g, chart, false, stats);
}

std::optional<Derivation> mpd_naive(const AcnfGrammar& g, const Chart& chart, ParseStats* stats) {
  return run_max(g, chart, true, stats);
}

std::optional<Derivation> mpid(const AcnfGrammar& g, const WordGraph& wg, ParseStats* stats) {
  Chart c = cky_wordgraph(g, wg);
  return mpd(g, c, stats);
}

double input_probability(const AcnfGrammar& g, const Chart& chart, ParseStats* stats) {
  Phase2 p(g, chart, false, false, stats);
  p.run();
  const RootCell* top = p.top();
  return top ? top->score : kNegInf;
}

double parse_probability(const AcnfGrammar& g, const Tree& parse) {
  Chart c;
  try {
    c = tree_to_chart(g, parse);
  } catch (const Error&) {
    return kNegInf;
  }
  return input_probability(g, c);
}

double derivation_log_prob(const Stsg& g, const std::vector<int>& trees) {
  double s = 0.0;
  for (int e : trees) s += g.elems[e].log_prob;
  return s;
}

namespace {

struct Piece {
  int elem = 0;
  std::vector<const Piece*> fillers;
  std::vector<int> path;
  double log_prob = 0.0;
};

class Enumerator {
 public:
  Enumerator(const Stsg& g, const WordGraph& wg, const EnumerationLimits& limits)
      : g_(g), wg_(wg), limits_(limits) {
    for (const ElementaryTree& e : g.elems) {
      by_root_[e.tree[e.tree.root()].label].push_back(e.id);
      std::vector<NodeId> leaves = e.tree.leaves();
      frontier_.push_back(leaves);
    }
    out_.resize(wg.num_states);
    for (std::size_t t = 0; t < wg.transitions.size(); ++t)
      out_[wg.transitions[t].from].push_back(static_cast<int>(t));
  }

  const std::vector<const Piece*>& derive(const std::string& sym, int i, int j) {
    auto key = std::make_tuple(sym, i, j);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    if (!active_.insert(key).second) throw Error("unary cycle while enumerating derivations");
    std::vector<const Piece*> result;
    auto roots = by_root_.find(sym);
    if (roots != by_root_.end()) {
      for (int e : roots->second) {
        Piece proto;
        proto.elem = e;
        proto.log_prob = g_.elems[e].log_prob;
        match(e, 0, i, j, proto, result);
      }
    }
    active_.erase(key);
    return memo_.emplace(key, std::move(result)).first->second;
  }

  DecoratedTree materialize(const Piece* p, std::vector<int>& trees, std::vector<std::string>& sentence) {
    DecoratedTree dt;
    std::size_t word = 0;
    NodeId root = emit(p, dt, trees, sentence, word);
    dt.tree.set_root(root);
    return dt;
  }

 private:
  bool word_matches(const std::string& leaf, const std::string& word) const {
    if (leaf == word) return true;
    return leaf == kUnknownWord && !g_.terminals.count(word);
  }

  void match(int e, std::size_t pos, int state, int j, Piece& cur, std::vector<const Piece*>& result) {
    const Tree& t = g_.elems[e].tree;
    const auto& fr = frontier_[e];
    if (pos == fr.size()) {
      if (state != j) return;
      if (++created_ > limits_.max_derivations) throw DerivationOverflow("derivation cap exceeded");
      store_.push_back(std::make_unique<Piece>(cur));
      result.push_back(store_.back().get());
      return;
    }
    if (state >= j) return;
    NodeId leaf = fr[pos];
    if (t.is_terminal(leaf)) {
      for (int tr : out_[state]) {
        const Transition& x = wg_.transitions[tr];
        if (x.to > j || !word_matches(t[leaf].label, x.word)) continue;
        cur.path.push_back(tr);
        double saved = cur.log_prob;
        cur.log_prob += x.log_prob;
        match(e, pos + 1, x.to, j, cur, result);
        cur.log_prob = saved;
        cur.path.pop_back();
      }
      return;
    }
    int last = j - static_cast<int>(fr.size() - pos - 1);
    for (int s2 = state + 1; s2 <= last; ++s2) {
      const auto& subs = derive(t[leaf].label, state, s2);
      for (const Piece* p : subs) {
        cur.fillers.push_back(p);
        std::size_t plen = cur.path.size();
        cur.path.insert(cur.path.end(), p->path.begin(), p->path.end());
        double saved = cur.log_prob;
        cur.log_prob += p->log_prob;
        match(e, pos + 1, s2, j, cur, result);
        cur.log_prob = saved;
        cur.path.resize(plen);
        cur.fillers.pop_back();
      }
    }
  }

  NodeId emit(const Piece* p, DecoratedTree& dt, std::vector<int>& trees,
              std::vector<std::string>& sentence, std::size_t& word) {
    trees.push_back(p->elem);
    const ElementaryTree& e = g_.elems[p->elem];
    std::size_t filler = 0;
    std::function<NodeId(NodeId)> copy = [&](NodeId n) -> NodeId {
      if (e.tree.is_subsite(n)) return emit(p->fillers[filler++], dt, trees, sentence, word);
      if (e.tree.is_leaf(n)) {
        const std::string& w = wg_.transitions[path_of_word(word++)].word;
        sentence.push_back(w);
        dt.address.push_back(kNoAddress);
        return dt.tree.add(w, SymbolKind::terminal);
      }
      NodeId me = dt.tree.add(e.tree[n].label, SymbolKind::nonterminal);
      dt.address.push_back(e.address_base + n);
      for (NodeId c : e.tree[n].children) {
        NodeId cc = copy(c);
        dt.tree.attach(me, cc);
      }
      return me;
    };
    return copy(e.tree.root());
  }

  int path_of_word(std::size_t k) const { return (*top_path_)[k]; }

 public:
  const std::vector<int>* top_path_ = nullptr;

 private:
  const Stsg& g_;
  const WordGraph& wg_;
  EnumerationLimits limits_;
  std::map<std::string, std::vector<int>> by_root_;
  std::vector<std::vector<NodeId>> frontier_;
  std::vector<std::vector<int>> out_;
  std::map<std::tuple<std::string, int, int>, std::vector<const Piece*>> memo_;
  std::set<std::tuple<std::string, int, int>> active_;
  std::deque<std::unique_ptr<Piece>> store_;
  std::size_t created_ = 0;
};

}  // namespace

std::vector<EnumeratedDerivation> enumerate_derivations(const Stsg& g, const WordGraph& wg,
                                                        const EnumerationLimits& limits) {
  check_word_graph(wg);
  if (wg.num_states - 1 > limits.max_length)
    throw DerivationOverflow("input of length " + std::to_string(wg.num_states - 1) +
                             " exceeds the enumeration limit " + std::to_string(limits.max_length));
  std::vector<EnumeratedDerivation> out;
  if (wg.num_states < 2) return out;
  Enumerator en(g, wg, limits);
  const auto& tops = en.derive(g.start, 0, wg.num_states - 1);
  if (tops.size() > limits.max_derivations) throw DerivationOverflow("derivation cap exceeded");
  for (const Piece* p : tops) {
    EnumeratedDerivation d;
    en.top_path_ = &p->path;
    d.tree = en.materialize(p, d.trees, d.sentence);
    d.parse = d.tree.tree.subtree(d.tree.tree.root());
    d.path = p->path;
    d.log_prob = p->log_prob;
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<EnumeratedDerivation> enumerate_derivations(const Stsg& g,
                                                        const std::vector<std::string>& words,
                                                        const EnumerationLimits& limits) {
  return enumerate_derivations(g, linear_graph(words), limits);
}

std::optional<BruteResult> brute_mpp_mps(const Stsg& g, const WordGraph& wg,
                                         const EnumerationLimits& limits) {
  auto ds = enumerate_derivations(g, wg, limits);
  if (ds.empty()) return std::nullopt;
  std::map<std::string, double> parses;
  std::map<std::string, double> sentences;
  std::map<std::string, std::vector<std::string>> words;
  for (const auto& d : ds) {
    std::string p = write_bracketed(d.parse);
    auto [pi, pf] = parses.emplace(p, kNegInf);
    pi->second = log_add(pi->second, d.log_prob);
    std::string s;
    for (const auto& w : d.sentence) s += (s.empty() ? "" : " ") + w;
    auto [si, sf] = sentences.emplace(s, kNegInf);
    si->second = log_add(si->second, d.log_prob);
    words[s] = d.sentence;
  }
  BruteResult r;
  r.mpp_log_prob = kNegInf;
  std::string best_p;
  for (const auto& [p, s] : parses)
    if (s > r.mpp_log_prob) {
      r.mpp_log_prob = s;
      best_p = p;
    }
  r.mpp = parse_bracketed(best_p);
  r.mps_log_prob = kNegInf;
  std::string best_s;
  for (const auto& [s, v] : sentences)
    if (v > r.mps_log_prob) {
      r.mps_log_prob = v;
      best_s = s;
    }
  r.mps = words[best_s];
  return r;
}

std::string format_derivation(const std::optional<Derivation>& d, bool with_sentence) {
  if (!d) return "NOPARSE";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", d->log_prob);
  std::string out = buf;
  out += '\t';
  out += write_bracketed(d->parse);
  out += '\t';
  for (std::size_t i = 0; i < d->trees.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(d->trees[i]);
  }
  if (with_sentence) {
    out += '\t';
    for (std::size_t i = 0; i < d->sentence.size(); ++i) {
      if (i) out += ' ';
      out += d->sentence[i];
    }
  }
  return out;
}

}  // namespace dop
