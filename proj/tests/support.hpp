#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dop/grammar.hpp"

namespace dop::testing {

using Rng = std::mt19937_64;

inline int uniform(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double unit(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// Random full parse tree over nonterminals N0..N{k-1} and terminals t0..
inline Tree random_tree(Rng& rng, int max_nodes, int labels = 3) {
  Tree t;
  int budget = max_nodes;
  std::function<NodeId(int)> grow = [&](int depth) -> NodeId {
    NodeId me = t.add("N" + std::to_string(uniform(rng, 0, labels - 1)), SymbolKind::nonterminal);
    --budget;
    int kids = uniform(rng, 1, 3);
    for (int k = 0; k < kids; ++k) {
      if (budget <= 0) break;
      if (depth < 3 && budget >= 2 && unit(rng) < 0.5) {
        NodeId c = grow(depth + 1);
        t.attach(me, c);
      } else {
        NodeId c = t.add("t" + std::to_string(uniform(rng, 0, labels - 1)), SymbolKind::terminal);
        --budget;
        t.attach(me, c);
      }
    }
    if (t[me].children.empty()) {
      NodeId c = t.add("t0", SymbolKind::terminal);
      --budget;
      t.attach(me, c);
    }
    return me;
  };
  NodeId root = grow(0);
  t.set_root(root);
  return t;
}

// All subtree keys of t found by testing every node subset.
inline std::vector<std::string> brute_subtrees(const Tree& t) {
  std::vector<std::string> out;
  int n = static_cast<int>(t.size());
  auto parent = t.parents();
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    auto in = [&](NodeId x) { return (mask >> x) & 1u; };
    NodeId top = kNoNode;
    bool ok = true;
    for (NodeId x = 0; x < n && ok; ++x) {
      if (!in(x)) continue;
      if (parent[x] == kNoNode || !in(parent[x])) {
        if (top != kNoNode) ok = false;
        top = x;
      }
      int inc = 0;
      for (NodeId c : t[x].children) inc += in(c) ? 1 : 0;
      if (inc != 0 && inc != static_cast<int>(t[x].children.size())) ok = false;
    }
    if (!ok || top == kNoNode || t.is_leaf(top)) continue;
    bool expanded = true;
    for (NodeId c : t[top].children) expanded = expanded && in(c);
    if (!expanded) continue;
    std::function<std::string(NodeId)> key = [&](NodeId x) -> std::string {
      if (t.is_leaf(x) && t.is_terminal(x)) return t[x].label;
      bool open = false;
      for (NodeId c : t[x].children) open = open || in(c);
      if (!open) return "(" + t[x].label + ")";
      std::string s = "(" + t[x].label;
      for (NodeId c : t[x].children) s += " " + key(c);
      return s + ")";
    };
    out.push_back(key(top));
  }
  return out;
}

struct StsgShape {
  int max_trees = 8;
  int max_depth = 3;
  bool unary_chains = false;
  int nonterminals = 3;
  int terminals = 3;
};

// Random grammar over S, A, B and a, b, c with per-root normalized weights.
inline Stsg random_stsg(Rng& rng, const StsgShape& shape = {}) {
  static const char* kN[] = {"S", "A", "B"};
  static const char* kT[] = {"a", "b", "c"};
  for (;;) {
    int count = uniform(rng, 2, shape.max_trees);
    std::vector<Tree> trees;
    for (int i = 0; i < count; ++i) {
      Tree t;
      int depth_limit = uniform(rng, 1, shape.max_depth);
      std::function<NodeId(const std::string&, int)> grow = [&](const std::string& label, int depth) {
        NodeId me = t.add(label, SymbolKind::nonterminal);
        int kids = uniform(rng, 1, 3);
        for (int k = 0; k < kids; ++k) {
          double u = unit(rng);
          NodeId c;
          std::string sym = kN[uniform(rng, 0, shape.nonterminals - 1)];
          if (u < 0.4) {
            c = t.add(kT[uniform(rng, 0, shape.terminals - 1)], SymbolKind::terminal);
          } else if (u < 0.7 || depth + 1 >= depth_limit) {
            c = t.add(sym, SymbolKind::nonterminal);
          } else {
            c = grow(sym, depth + 1);
          }
          t.attach(me, c);
        }
        return me;
      };
      std::string root = i == 0 ? "S" : kN[uniform(rng, 0, shape.nonterminals - 1)];
      grow(root, 0);
      if (!admissible_elementary(t)) {
        --i;
        continue;
      }
      if (!shape.unary_chains) {
        bool chain = false;
        for (NodeId n : t.preorder())
          if (t[n].children.size() == 1 && !t.is_terminal(t[n].children[0])) chain = true;
        if (chain) {
          --i;
          continue;
        }
      }
      trees.push_back(std::move(t));
    }
    std::map<std::string, double> total;
    std::vector<double> w;
    for (const Tree& t : trees) {
      w.push_back(0.05 + unit(rng));
      total[t[t.root()].label] += w.back();
    }
    std::vector<std::pair<Tree, double>> pairs;
    for (std::size_t i = 0; i < trees.size(); ++i)
      pairs.emplace_back(trees[i], w[i] / total[trees[i][trees[i].root()].label]);
    Stsg g = make_stsg("S", pairs);
    if (has_unary_cycle(underlying_cfg(g))) continue;
    return g;
  }
}

// Every string over the grammar terminals with length in [1, max_len].
inline std::vector<std::vector<std::string>> all_strings(const std::vector<std::string>& alphabet,
                                                         int max_len) {
  std::vector<std::vector<std::string>> out;
  std::vector<std::vector<std::string>> layer{{}};
  for (int len = 1; len <= max_len; ++len) {
    std::vector<std::vector<std::string>> next;
    for (const auto& s : layer)
      for (const auto& a : alphabet) {
        auto x = s;
        x.push_back(a);
        next.push_back(x);
      }
    out.insert(out.end(), next.begin(), next.end());
    layer = std::move(next);
  }
  return out;
}

inline bool close(double a, double b, double tol = 1e-9) {
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::fabs(a - b) <= tol;
}

}  // namespace dop::testing

namespace dop::testing {

// Trees from a small recursive grammar so that phrase patterns recur.
inline Tree random_grammar_tree(Rng& rng, int max_depth = 4) {
  Tree t;
  std::function<NodeId(const std::string&, int)> grow = [&](const std::string& sym, int depth) {
    NodeId me = t.add(sym, SymbolKind::nonterminal);
    auto lex = [&](const char* pos, int words) {
      NodeId p = t.add(pos, SymbolKind::nonterminal);
      std::string w = std::string(1, static_cast<char>(std::tolower(pos[0]))) +
                      std::to_string(uniform(rng, 0, words - 1));
      t.attach(p, t.add(w, SymbolKind::terminal));
      t.attach(me, p);
    };
    bool deep = depth < max_depth;
    if (sym == "S") {
      t.attach(me, grow("NP", depth + 1));
      t.attach(me, grow("VP", depth + 1));
    } else if (sym == "NP") {
      double u = unit(rng);
      if (u < 0.5 || !deep) {
        lex("D", 2);
        lex("N", 3);
      } else if (u < 0.75) {
        lex("N", 3);
      } else {
        t.attach(me, grow("NP", depth + 1));
        t.attach(me, grow("PP", depth + 1));
      }
    } else if (sym == "VP") {
      double u = unit(rng);
      if (u < 0.6 || !deep) {
        lex("V", 2);
        t.attach(me, grow("NP", depth + 1));
      } else if (u < 0.8) {
        lex("V", 2);
      } else {
        t.attach(me, grow("VP", depth + 1));
        t.attach(me, grow("PP", depth + 1));
      }
    } else {
      lex("P", 2);
      t.attach(me, grow("NP", depth + 1));
    }
    return me;
  };
  t.set_root(grow("S", 0));
  return t;
}

inline Treebank random_grammar_bank(Rng& rng, int count, int max_depth = 4) {
  Treebank tb;
  tb.start = "S";
  for (int i = 0; i < count; ++i) tb.trees.push_back(random_grammar_tree(rng, max_depth));
  return tb;
}

}  // namespace dop::testing
