#include "dop/acnf.hpp"

#include <ostream>

namespace dop {

Symbol SymbolTable::intern(const std::string& name, SymbolKind kind) {
  auto it = index_.find(name);
  if (it != index_.end()) {
    if (kinds_[it->second] != kind) throw Error("symbol '" + name + "' has conflicting kinds");
    return it->second;
  }
  Symbol s = static_cast<Symbol>(names_.size());
  names_.push_back(name);
  kinds_.push_back(kind);
  index_.emplace(name, s);
  return s;
}

Symbol SymbolTable::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? kNoSymbol : it->second;
}

int AcnfGrammar::find_rule(Symbol lhs, Symbol left, Symbol right) const {
  auto it = rule_index.find({lhs, left, right});
  return it == rule_index.end() ? -1 : it->second;
}

bool AcnfGrammar::viable(Address c, Address child, int j) const {
  const AddressInfo& info = addresses[c];
  if (info.child[j] != kNoAddress) return info.child[j] == child;
  if (!info.subsite[j] || !addresses[child].root) return false;
  const CnfRule& r = rules[info.rule];
  Symbol want = j == 0 ? r.left : r.right;
  return category[rules[addresses[child].rule].lhs] == want;
}

Symbol AcnfGrammar::word_symbol(const std::string& word) const {
  Symbol s = symbols.find(word);
  if (s != kNoSymbol && symbols.kind(s) == SymbolKind::terminal && user_symbol[s]) return s;
  return unknown;
}

std::string wrapper_symbol(const std::string& word) { return "X_" + word; }

namespace {

class Shaper {
 public:
  explicit Shaper(const std::set<std::string>& user) : user_(user) {}

  std::string fresh(const std::string& label) {
    auto it = fresh_.find(label);
    if (it != fresh_.end()) return it->second;
    std::string name = label + kFreshMark;
    for (int k = 1; user_.count(name); ++k) name = label + kFreshMark + std::to_string(k);
    return fresh_.emplace(label, name).first->second;
  }

  std::string wrapper(const std::string& word) {
    std::string name = wrapper_symbol(word);
    if (user_.count(name)) throw Error("wrapper symbol '" + name + "' collides with a grammar symbol");
    return name;
  }

  // Returns the id of the shaped node in `out`.
  NodeId shape(const Tree& in, NodeId n, bool is_root, Tree& out) {
    if (in.is_leaf(n)) return out.add(in[n].label, in[n].kind);
    NodeId bottom = n;
    std::string label = in[n].label;
    while (in[bottom].children.size() == 1 && in.is_internal(in[bottom].children[0])) {
      bottom = in[bottom].children[0];
      label += kChainSeparator + in[bottom].label;
    }
    const auto& kids = in[bottom].children;
    if (kids.size() == 1 && in.is_subsite(kids[0])) {
      if (is_root) throw Error("elementary tree is a unary chain onto a substitution site");
      return out.add(in[kids[0]].label, SymbolKind::nonterminal);
    }
    NodeId me = out.add(label, SymbolKind::nonterminal);
    if (kids.size() == 1) {
      out.attach(me, out.add(in[kids[0]].label, SymbolKind::terminal));
      return me;
    }
    std::vector<NodeId> shaped;
    for (NodeId c : kids) {
      if (in.is_leaf(c) && in.is_terminal(c)) {
        NodeId w = out.add(wrapper(in[c].label), SymbolKind::nonterminal);
        out.attach(w, out.add(in[c].label, SymbolKind::terminal));
        shaped.push_back(w);
      } else {
        shaped.push_back(shape(in, c, false, out));
      }
    }
    NodeId cur = me;
    std::string f;
    if (shaped.size() > 2) f = fresh(label);
    for (std::size_t i = 0; i + 2 < shaped.size(); ++i) {
      out.attach(cur, shaped[i]);
      NodeId next = out.add(f, SymbolKind::nonterminal);
      ++fresh_nodes;
      out.attach(cur, next);
      cur = next;
    }
    out.attach(cur, shaped[shaped.size() - 2]);
    out.attach(cur, shaped[shaped.size() - 1]);
    return me;
  }

  int fresh_nodes = 0;
  std::map<std::string, std::string> fresh_;

 private:
  const std::set<std::string>& user_;
};

}  // namespace

AcnfGrammar to_acnf(const Stsg& stsg) {
  AcnfGrammar g;
  std::set<std::string> user;
  for (const auto& s : stsg.nonterminals) {
    if (s.find(kChainSeparator) != std::string::npos)
      throw Error("symbol '" + s + "' contains the reserved separator " + kChainSeparator);
    g.symbols.intern(s, SymbolKind::nonterminal);
    user.insert(s);
  }
  for (const auto& s : stsg.terminals) {
    g.symbols.intern(s, SymbolKind::terminal);
    user.insert(s);
  }
  g.user_symbol.assign(g.symbols.size(), true);
  g.start = g.symbols.intern(stsg.start, SymbolKind::nonterminal);
  if (g.user_symbol.size() < g.symbols.size()) g.user_symbol.push_back(true);
  g.unknown = stsg.has_unknown ? g.symbols.find(kUnknownWord) : kNoSymbol;

  Shaper shaper(user);
  std::map<Symbol, Symbol> roots;
  for (const ElementaryTree& e : stsg.elems) {
    Tree shaped;
    shaper.shape(e.tree, e.tree.root(), true, shaped);
    std::vector<Address> addr(shaped.size(), kNoAddress);
    for (NodeId n : shaped.preorder())
      if (shaped.is_internal(n)) {
        addr[n] = static_cast<Address>(g.addresses.size());
        g.addresses.emplace_back();
      }
    for (NodeId n : shaped.preorder()) {
      if (!shaped.is_internal(n)) continue;
      AddressInfo& info = g.addresses[addr[n]];
      const auto& kids = shaped[n].children;
      Symbol lhs = g.symbols.intern(shaped[n].label, SymbolKind::nonterminal);
      Symbol left = g.symbols.intern(shaped[kids[0]].label, shaped[kids[0]].kind);
      Symbol right = kNoSymbol;
      if (kids.size() == 2) right = g.symbols.intern(shaped[kids[1]].label, shaped[kids[1]].kind);
      g.user_symbol.resize(g.symbols.size(), false);
      auto key = std::make_tuple(lhs, left, right);
      auto it = g.rule_index.find(key);
      if (it == g.rule_index.end()) {
        it = g.rule_index.emplace(key, static_cast<int>(g.rules.size())).first;
        g.rules.push_back(CnfRule{lhs, left, right});
        g.occurrences.emplace_back();
      }
      info.rule = it->second;
      info.tree = e.id;
      info.root = n == shaped.root();
      info.pf = info.root ? e.log_prob : 0.0;
      if (info.root) roots.emplace(lhs, g.symbols.find(e.tree[e.tree.root()].label));
      if (kids.size() == 2) {
        for (int j = 0; j < 2; ++j) {
          if (shaped.is_internal(kids[j])) info.child[j] = addr[kids[j]];
          else if (shaped.is_subsite(kids[j])) info.subsite[j] = true;
          else throw Error("internal error: terminal under a binary node");
        }
      }
      g.occurrences[info.rule].push_back(addr[n]);
    }
    g.tree_log_prob.push_back(e.log_prob);
    g.original.push_back(e.tree);
    g.original_address_base.push_back(e.address_base);
    g.shaped.push_back(std::move(shaped));
    g.shaped_address.push_back(std::move(addr));
  }
  g.fresh_nodes = shaper.fresh_nodes;
  g.fresh_names = shaper.fresh_;
  g.user_symbol.resize(g.symbols.size(), false);
  g.category.resize(g.symbols.size());
  for (std::size_t s = 0; s < g.category.size(); ++s) g.category[s] = static_cast<Symbol>(s);
  for (const auto& [merged, top] : roots) g.category[merged] = top;
  g.binary_by_left.assign(g.symbols.size(), {});
  g.terminal_by_word.assign(g.symbols.size(), {});
  for (std::size_t r = 0; r < g.rules.size(); ++r) {
    const CnfRule& rule = g.rules[r];
    if (rule.terminal()) g.terminal_by_word[rule.left].push_back(static_cast<int>(r));
    else g.binary_by_left[rule.left].push_back(static_cast<int>(r));
  }
  for (std::size_t s = 0; s < g.category.size(); ++s)
    if (g.category[s] != static_cast<Symbol>(s)) {
      const auto& extra = g.binary_by_left[g.category[s]];
      g.binary_by_left[s].insert(g.binary_by_left[s].end(), extra.begin(), extra.end());
    }
  return g;
}

void dump_acnf(std::ostream& out, const AcnfGrammar& g) {
  for (std::size_t r = 0; r < g.rules.size(); ++r) {
    const CnfRule& rule = g.rules[r];
    out << g.symbols.name(rule.lhs) << " -> " << g.symbols.name(rule.left);
    if (!rule.terminal()) out << ' ' << g.symbols.name(rule.right);
    out << "\t" << g.occurrences[r].size() << '\n';
  }
}

namespace {

class Composer {
 public:
  Composer(const AcnfGrammar& g, const DecoratedTree& in, ReversedParse& out)
      : g_(g), in_(in), out_(out) {}

  NodeId compose(NodeId x) {
    Address a = address(x);
    if (!g_.is_root(a)) throw Error("derivation does not start at an elementary-tree root");
    int e = g_.tree_of(a);
    out_.derivation.push_back(e);
    std::vector<NodeId> fillers;
    std::vector<std::string> words;
    walk(x, a, fillers, words);
    const Tree& orig = g_.original[e];
    std::size_t fi = 0, wi = 0;
    NodeId root = build(orig, orig.root(), e, fillers, fi, words, wi);
    if (fi != fillers.size() || wi != words.size())
      throw Error("derivation does not match elementary tree " + std::to_string(e));
    return root;
  }

 private:
  Address address(NodeId x) const {
    Address a = x < static_cast<NodeId>(in_.address.size()) ? in_.address[x] : kNoAddress;
    if (a < 0 || a >= static_cast<Address>(g_.addresses.size()))
      throw Error("node carries an unknown address");
    return a;
  }

  void walk(NodeId x, Address a, std::vector<NodeId>& fillers, std::vector<std::string>& words) {
    const AddressInfo& info = g_.addresses[a];
    const CnfRule& rule = g_.rules[info.rule];
    const Tree& t = in_.tree;
    if (t[x].label != g_.symbols.name(rule.lhs)) throw Error("node label does not match its address");
    const auto& kids = t[x].children;
    if (rule.terminal()) {
      if (kids.size() != 1 || !t.is_terminal(kids[0])) throw Error("terminal rule mismatch");
      words.push_back(t[kids[0]].label);
      return;
    }
    if (kids.size() != 2) throw Error("binary rule mismatch");
    for (int j = 0; j < 2; ++j) {
      NodeId y = kids[j];
      if (info.subsite[j]) {
        if (t.is_leaf(y)) {
          NodeId leaf = out_.derivation_tree.tree.add(t[y].label, SymbolKind::nonterminal);
          out_.derivation_tree.address.push_back(kNoAddress);
          fillers.push_back(leaf);
        } else {
          Address b = address(y);
          if (!g_.viable(a, b, j)) throw Error("substitution is not viable");
          fillers.push_back(compose(y));
        }
      } else {
        if (t.is_leaf(y) || address(y) != info.child[j]) throw Error("parent relation is not viable");
        walk(y, info.child[j], fillers, words);
      }
    }
  }

  NodeId build(const Tree& orig, NodeId n, int e, const std::vector<NodeId>& fillers,
               std::size_t& fi, const std::vector<std::string>& words, std::size_t& wi) {
    Tree& t = out_.derivation_tree.tree;
    auto& addr = out_.derivation_tree.address;
    if (orig.is_subsite(n)) {
      if (fi >= fillers.size()) throw Error("missing substitution");
      return fillers[fi++];
    }
    if (orig.is_leaf(n)) {
      if (wi >= words.size()) throw Error("missing word");
      NodeId w = t.add(words[wi++], SymbolKind::terminal);
      addr.push_back(kNoAddress);
      return w;
    }
    NodeId me = t.add(orig[n].label, SymbolKind::nonterminal);
    addr.push_back(g_.original_address_base[e] + n);
    for (NodeId c : orig[n].children) {
      NodeId cc = build(orig, c, e, fillers, fi, words, wi);
      t.attach(me, cc);
    }
    return me;
  }

  const AcnfGrammar& g_;
  const DecoratedTree& in_;
  ReversedParse& out_;
};

}  // namespace

ReversedParse reverse_parse(const AcnfGrammar& g, const DecoratedTree& parse) {
  ReversedParse out;
  if (parse.tree.empty()) throw Error("empty parse");
  Composer c(g, parse, out);
  NodeId root = c.compose(parse.tree.root());
  out.derivation_tree.tree.set_root(root);
  Tree& t = out.derivation_tree.tree;
  out.parse = t.subtree(root);
  return out;
}

}  // namespace dop
