#include "dop/tree.hpp"

#include <algorithm>
#include <climits>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace dop {

ParseError::ParseError(const std::string& what, std::size_t offset)
    : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}

NodeId Tree::add(std::string label, SymbolKind kind) {
  nodes_.push_back(TreeNode{std::move(label), kind, {}});
  NodeId id = static_cast<NodeId>(nodes_.size() - 1);
  if (root_ == kNoNode) root_ = id;
  return id;
}

void Tree::attach(NodeId parent, NodeId child) { nodes_[parent].children.push_back(child); }

bool Tree::is_preterminal(NodeId n) const {
  if (!is_internal(n)) return false;
  for (NodeId c : nodes_[n].children)
    if (!(is_leaf(c) && is_terminal(c))) return false;
  return true;
}

int Tree::depth() const { return empty() ? 0 : depth(root_); }

int Tree::depth(NodeId n) const {
  int best = 0;
  for (NodeId c : nodes_[n].children) best = std::max(best, 1 + depth(c));
  return best;
}

std::vector<NodeId> Tree::preorder() const {
  if (empty()) return {};
  return preorder(root_);
}

std::vector<NodeId> Tree::preorder(NodeId from) const {
  std::vector<NodeId> out;
  std::vector<NodeId> stack{from};
  while (!stack.empty()) {
    NodeId n = stack.back();
    stack.pop_back();
    out.push_back(n);
    const auto& ch = nodes_[n].children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

std::vector<NodeId> Tree::leaves() const {
  if (empty()) return {};
  return leaves(root_);
}

std::vector<NodeId> Tree::leaves(NodeId from) const {
  std::vector<NodeId> out;
  for (NodeId n : preorder(from))
    if (is_leaf(n)) out.push_back(n);
  return out;
}

std::vector<std::string> Tree::frontier() const {
  std::vector<std::string> out;
  for (NodeId n : leaves()) out.push_back(nodes_[n].label);
  return out;
}

std::vector<std::string> Tree::words() const {
  std::vector<std::string> out;
  for (NodeId n : leaves())
    if (is_terminal(n)) out.push_back(nodes_[n].label);
  return out;
}

std::vector<NodeId> Tree::parents() const {
  std::vector<NodeId> out(nodes_.size(), kNoNode);
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    for (NodeId c : nodes_[i].children) out[c] = static_cast<NodeId>(i);
  return out;
}

NodeId Tree::graft(const Tree& other, NodeId node) {
  NodeId me = add(other[node].label, other[node].kind);
  for (NodeId c : other[node].children) {
    NodeId cc = graft(other, c);
    attach(me, cc);
  }
  return me;
}

Tree Tree::subtree(NodeId n) const {
  Tree t;
  t.graft(*this, n);
  return t;
}

bool same_tree(const Tree& a, NodeId na, const Tree& b, NodeId nb) {
  const TreeNode& x = a[na];
  const TreeNode& y = b[nb];
  if (x.label != y.label || x.kind != y.kind || x.children.size() != y.children.size())
    return false;
  for (std::size_t i = 0; i < x.children.size(); ++i)
    if (!same_tree(a, x.children[i], b, y.children[i])) return false;
  return true;
}

bool operator==(const Tree& a, const Tree& b) {
  if (a.empty() || b.empty()) return a.empty() == b.empty();
  return same_tree(a, a.root(), b, b.root());
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

class BracketReader {
 public:
  explicit BracketReader(std::string_view s) : s_(s) {}

  Tree read() {
    skip();
    if (pos_ >= s_.size()) throw ParseError("empty input", pos_);
    Tree t;
    if (s_[pos_] != '(') throw ParseError("expected '('", pos_);
    NodeId root = node(t);
    t.set_root(root);
    skip();
    if (pos_ < s_.size()) throw ParseError("trailing characters", pos_);
    return t;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && is_space(s_[pos_])) ++pos_;
  }

  std::string atom() {
    std::size_t start = pos_;
    while (pos_ < s_.size() && !is_space(s_[pos_]) && s_[pos_] != '(' && s_[pos_] != ')') ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }

  NodeId node(Tree& t) {
    std::size_t open = pos_;
    ++pos_;
    skip();
    std::string label = atom();
    if (label.empty()) throw ParseError("empty label", pos_);
    NodeId me = t.add(label, SymbolKind::nonterminal);
    for (;;) {
      skip();
      if (pos_ >= s_.size()) throw ParseError("unbalanced brackets", open);
      char c = s_[pos_];
      if (c == ')') {
        ++pos_;
        return me;
      }
      if (c == '(') {
        NodeId child = node(t);
        t.attach(me, child);
      } else {
        NodeId leaf = t.add(atom(), SymbolKind::terminal);
        t.attach(me, leaf);
      }
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

void write_node(const Tree& t, NodeId n, std::string& out) {
  const TreeNode& x = t[n];
  if (x.kind == SymbolKind::terminal && x.children.empty()) {
    out += x.label;
    return;
  }
  out += '(';
  out += x.label;
  for (NodeId c : x.children) {
    out += ' ';
    write_node(t, c, out);
  }
  out += ')';
}

}  // namespace

Tree parse_bracketed(std::string_view text) { return BracketReader(text).read(); }

std::string write_bracketed(const Tree& t) {
  if (t.empty()) return "";
  return write_bracketed(t, t.root());
}

std::string write_bracketed(const Tree& t, NodeId from) {
  std::string out;
  write_node(t, from, out);
  return out;
}

void check_symbol_kinds(const std::vector<const Tree*>& trees) {
  std::map<std::string, SymbolKind> kinds;
  for (const Tree* t : trees) {
    for (std::size_t i = 0; i < t->size(); ++i) {
      const TreeNode& n = (*t)[static_cast<NodeId>(i)];
      auto [it, fresh] = kinds.emplace(n.label, n.kind);
      if (!fresh && it->second != n.kind)
        throw Error("symbol '" + n.label + "' used both as terminal and nonterminal");
    }
  }
}

Treebank read_treebank(std::istream& in) {
  Treebank tb;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    try {
      tb.trees.push_back(parse_bracketed(line));
    } catch (const ParseError& e) {
      throw Error("line " + std::to_string(lineno) + ": " + e.what());
    }
    const std::string& root = tb.trees.back()[tb.trees.back().root()].label;
    if (tb.start.empty()) tb.start = root;
    else if (root != tb.start)
      throw Error("line " + std::to_string(lineno) + ": root '" + root +
                  "' differs from start symbol '" + tb.start + "'");
  }
  std::vector<const Tree*> ptrs;
  for (const Tree& t : tb.trees) ptrs.push_back(&t);
  check_symbol_kinds(ptrs);
  return tb;
}

void write_treebank(std::ostream& out, const Treebank& tb) {
  for (const Tree& t : tb.trees) out << write_bracketed(t) << '\n';
}

Cfg underlying_cfg(const std::vector<const Tree*>& trees, const std::string& start) {
  if (trees.empty()) throw Error("empty tree-bank");
  check_symbol_kinds(trees);
  Cfg g;
  g.start = start;
  for (const Tree* t : trees) {
    for (std::size_t i = 0; i < t->size(); ++i) {
      NodeId n = static_cast<NodeId>(i);
      const TreeNode& x = (*t)[n];
      if (x.kind == SymbolKind::terminal) g.terminals.insert(x.label);
      else g.nonterminals.insert(x.label);
      if (x.children.empty()) continue;
      Rule r{x.label, {}};
      for (NodeId c : x.children) r.rhs.push_back((*t)[c].label);
      g.rules.insert(std::move(r));
    }
  }
  return g;
}

Cfg underlying_cfg(const Treebank& tb) {
  std::vector<const Tree*> ptrs;
  for (const Tree& t : tb.trees) ptrs.push_back(&t);
  return underlying_cfg(ptrs, tb.start);
}

bool has_unary_cycle(const Cfg& g) {
  std::map<std::string, std::vector<std::string>> edges;
  for (const Rule& r : g.rules)
    if (r.rhs.size() == 1 && g.nonterminals.count(r.rhs[0])) edges[r.lhs].push_back(r.rhs[0]);
  std::map<std::string, int> state;
  std::function<bool(const std::string&)> visit = [&](const std::string& a) {
    int& s = state[a];
    if (s == 1) return true;
    if (s == 2) return false;
    s = 1;
    for (const auto& b : edges[a])
      if (visit(b)) return true;
    state[a] = 2;
    return false;
  };
  for (const auto& [a, _] : edges)
    if (visit(a)) return true;
  return false;
}

bool cfg_derives(const Cfg& g, const Tree& t) {
  if (t.empty() || t[t.root()].label != g.start) return false;
  for (NodeId n : t.preorder()) {
    if (t.is_leaf(n)) continue;
    Rule r{t[n].label, {}};
    for (NodeId c : t[n].children) r.rhs.push_back(t[c].label);
    if (!g.rules.count(r)) return false;
  }
  return true;
}

namespace {

NodeId collapse_into(const Tree& t, NodeId n, Tree& out) {
  NodeId me = out.add(t[n].label, t[n].kind);
  NodeId bottom = n;
  while (t[bottom].children.size() == 1 && t.is_internal(t[bottom].children[0]) &&
         !t.is_preterminal(t[bottom].children[0]))
    bottom = t[bottom].children[0];
  for (NodeId c : t[bottom].children) {
    NodeId cc = collapse_into(t, c, out);
    out.attach(me, cc);
  }
  return me;
}

constexpr int kUnbounded = INT_MAX / 4;

struct Frag {
  std::string key;
  int dm = 0;
  int nsub = 0;
  int nterm = 0;
  bool allterm = true;
  int lead = 0;
  int trail = 0;
  int run = 0;
};

void append(Frag& a, const Frag& b) {
  a.key += ' ';
  a.key += b.key;
  int lead = a.allterm ? a.lead + b.lead : a.lead;
  int trail = b.allterm ? a.trail + b.trail : b.trail;
  a.run = std::max({a.run, b.run, a.trail + b.lead});
  a.lead = lead;
  a.trail = trail;
  a.allterm = a.allterm && b.allterm;
  a.nsub += b.nsub;
  a.nterm += b.nterm;
}

class SubtreeEnumerator {
 public:
  SubtreeEnumerator(const Tree& t, const ProjectionParams& p, const std::vector<bool>* marked)
      : t_(t), marked_(marked) {
    l_ = p.max_terminals.value_or(kUnbounded);
    L_ = p.max_terminal_run.value_or(kUnbounded);
  }

  const std::vector<Frag>& frags(NodeId n, int budget) {
    auto key = std::make_pair(n, budget);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    int own = counts(n) ? 1 : 0;
    int child_budget = budget - own;
    std::vector<Frag> partial(1);
    partial[0].key = "(" + t_[n].label;
    partial[0].dm = 0;
    for (NodeId c : t_[n].children) {
      std::vector<Frag> options;
      if (t_.is_leaf(c)) {
        Frag f;
        if (t_.is_terminal(c)) {
          f.key = t_[c].label;
          f.nterm = 1;
          f.lead = f.trail = f.run = 1;
        } else {
          f.key = "(" + t_[c].label + ")";
          f.nsub = 1;
          f.allterm = false;
        }
        options.push_back(std::move(f));
      } else {
        if (cuttable(c)) {
          Frag f;
          f.key = "(" + t_[c].label + ")";
          f.nsub = 1;
          f.allterm = false;
          options.push_back(std::move(f));
        }
        if (child_budget >= 0) {
          for (const Frag& f : frags(c, child_budget)) {
            if (f.dm >= 1 && (f.nterm > l_ || f.run > L_)) continue;
            options.push_back(f);
          }
        }
      }
      if (options.empty()) {
        partial.clear();
        break;
      }
      std::vector<Frag> next;
      next.reserve(partial.size() * options.size());
      for (const Frag& a : partial) {
        for (const Frag& b : options) {
          Frag x = a;
          append(x, b);
          x.dm = std::max(a.dm, b.dm);
          if (x.dm >= 1 && (x.nterm > l_ || x.run > L_)) continue;
          next.push_back(std::move(x));
        }
      }
      partial = std::move(next);
    }
    for (Frag& f : partial) {
      f.key += ')';
      f.dm += own;
    }
    std::vector<Frag> result;
    for (Frag& f : partial)
      if (f.dm <= budget) result.push_back(std::move(f));
    return memo_.emplace(key, std::move(result)).first->second;
  }

  bool root_allowed(NodeId n) const { return t_.is_internal(n) && cuttable(n); }

 private:
  bool counts(NodeId n) const { return marked_ == nullptr || (*marked_)[n]; }
  bool cuttable(NodeId n) const { return marked_ == nullptr || (*marked_)[n]; }

  const Tree& t_;
  const std::vector<bool>* marked_;
  int l_;
  int L_;
  std::map<std::pair<NodeId, int>, std::vector<Frag>> memo_;
};

}  // namespace

Tree bamboo_collapse(const Tree& t) {
  Tree out;
  if (t.empty()) return out;
  collapse_into(t, t.root(), out);
  return out;
}

std::vector<std::string> enumerate_subtree_keys(const Tree& t, const ProjectionParams& p,
                                                const std::vector<bool>* marked) {
  std::vector<std::string> out;
  if (t.empty()) return out;
  int d = p.max_depth.value_or(kUnbounded);
  int n = p.max_subsites.value_or(kUnbounded);
  int l = p.max_terminals.value_or(kUnbounded);
  int L = p.max_terminal_run.value_or(kUnbounded);
  SubtreeEnumerator en(t, p, marked);
  for (NodeId node : t.preorder()) {
    if (!en.root_allowed(node)) continue;
    for (const Frag& f : en.frags(node, d)) {
      if (f.dm < 1) continue;
      if (f.dm == 1 || (f.nsub <= n && f.nterm <= l && f.run <= L)) out.push_back(f.key);
    }
  }
  return out;
}

std::vector<Tree> enumerate_subtrees(const Tree& t, const ProjectionParams& p) {
  std::vector<Tree> out;
  for (const std::string& k : enumerate_subtree_keys(t, p)) out.push_back(parse_bracketed(k));
  return out;
}

}  // namespace dop
