#include "dop/grammar.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace dop {

void Stsg::finalize() {
  nonterminals.clear();
  terminals.clear();
  int base = 0;
  for (std::size_t i = 0; i < elems.size(); ++i) {
    ElementaryTree& e = elems[i];
    e.id = static_cast<int>(i);
    e.address_base = base;
    base += static_cast<int>(e.tree.size());
    for (std::size_t k = 0; k < e.tree.size(); ++k) {
      const TreeNode& n = e.tree[static_cast<NodeId>(k)];
      if (n.kind == SymbolKind::terminal) terminals.insert(n.label);
      else nonterminals.insert(n.label);
    }
  }
  num_addresses = base;
  has_unknown = terminals.count(kUnknownWord) > 0;
}

int Stsg::elem_of_address(int a) const {
  auto it = std::upper_bound(elems.begin(), elems.end(), a,
                             [](int x, const ElementaryTree& e) { return x < e.address_base; });
  if (it == elems.begin()) throw Error("unknown address " + std::to_string(a));
  return static_cast<int>(std::prev(it) - elems.begin());
}

bool Stsg::is_address(int a) const {
  if (a < 0 || a >= num_addresses) return false;
  const ElementaryTree& e = elems[elem_of_address(a)];
  return e.tree.is_internal(a - e.address_base);
}

Stsg make_stsg(const std::string& start, const std::vector<std::pair<Tree, double>>& trees) {
  Stsg g;
  g.start = start;
  std::vector<const Tree*> ptrs;
  for (const auto& [t, p] : trees) {
    if (!(p > 0.0) || p > 1.0 + 1e-12) throw Error("probability outside (0,1]");
    ElementaryTree e;
    e.tree = t;
    e.log_prob = std::log(p);
    e.count = p;
    g.elems.push_back(std::move(e));
  }
  for (const auto& e : g.elems) ptrs.push_back(&e.tree);
  check_symbol_kinds(ptrs);
  g.finalize();
  return g;
}

bool admissible_elementary(const Tree& t) {
  if (t.empty() || !t.is_internal(t.root())) return false;
  auto leaves = t.leaves();
  return !(leaves.size() == 1 && t.is_subsite(leaves[0]));
}

namespace {

Stsg from_counts(const std::string& start, const std::map<std::string, double>& counts) {
  std::map<std::string, double> totals;
  std::vector<std::pair<Tree, double>> parsed;
  for (const auto& [key, c] : counts) {
    Tree t = parse_bracketed(key);
    if (!admissible_elementary(t)) continue;
    totals[t[t.root()].label] += c;
    parsed.emplace_back(std::move(t), c);
  }
  Stsg g;
  g.start = start;
  for (auto& [t, c] : parsed) {
    ElementaryTree e;
    e.log_prob = std::log(c / totals[t[t.root()].label]);
    e.count = c;
    e.tree = std::move(t);
    g.elems.push_back(std::move(e));
  }
  g.finalize();
  return g;
}

}  // namespace

Stsg project_dop(const Treebank& tb, const ProjectionParams& p, bool add_one_unknowns) {
  Cfg cfg = underlying_cfg(tb);
  if (has_unary_cycle(cfg)) throw Error("tree-bank CFG has a unary cycle");
  std::map<std::string, double> counts;
  std::set<std::string> preterminals;
  for (const Tree& t : tb.trees) {
    for (std::string& k : enumerate_subtree_keys(t, p)) counts[std::move(k)] += 1.0;
    for (NodeId n : t.preorder())
      if (t.is_preterminal(n)) preterminals.insert(t[n].label);
  }
  if (add_one_unknowns) {
    for (auto& [_, c] : counts) c += 1.0;
    for (const std::string& pos : preterminals) counts.emplace("(" + pos + " " + kUnknownWord + ")", 1.0);
  }
  return from_counts(tb.start, counts);
}

Stsg project_sdop(const std::vector<MarkedTree>& mtb, const ProjectionParams& p) {
  if (mtb.empty()) throw Error("empty tree-bank");
  std::vector<const Tree*> ptrs;
  for (const MarkedTree& m : mtb) ptrs.push_back(&m.tree);
  check_symbol_kinds(ptrs);
  std::string start = mtb[0].tree[mtb[0].tree.root()].label;
  std::map<std::string, double> counts;
  for (std::size_t i = 0; i < mtb.size(); ++i) {
    const MarkedTree& m = mtb[i];
    if (m.marked.size() != m.tree.size()) throw Error("mark vector size mismatch");
    if (!m.marked[m.tree.root()]) throw Error("tree " + std::to_string(i) + ": root is not marked");
    for (std::size_t k = 0; k < m.tree.size(); ++k)
      if (m.marked[k] && !m.tree.is_internal(static_cast<NodeId>(k)))
        throw Error("tree " + std::to_string(i) + ": a leaf is marked");
    auto keys = enumerate_subtree_keys(m.tree, p, &m.marked);
    if (keys.empty()) throw Error("tree " + std::to_string(i) + ": no extractable subtree");
    for (std::string& k : keys) counts[std::move(k)] += 1.0;
  }
  return from_counts(start, counts);
}

Scfg scfg_of(const Stsg& g) {
  Scfg s;
  s.start = g.start;
  s.nonterminals = g.nonterminals;
  s.terminals = g.terminals;
  for (const ElementaryTree& e : g.elems) {
    if (e.tree.depth() != 1)
      throw Error("elementary tree " + std::to_string(e.id) + " has depth " +
                  std::to_string(e.tree.depth()) + "; only depth-1 trees form an SCFG");
    ScfgRule r;
    r.id = e.id;
    r.lhs = e.tree[e.tree.root()].label;
    for (NodeId c : e.tree[e.tree.root()].children) r.rhs.push_back(e.tree[c].label);
    r.log_prob = e.log_prob;
    s.rules.push_back(std::move(r));
  }
  return s;
}

Cfg underlying_cfg(const Stsg& g) {
  std::vector<const Tree*> ptrs;
  for (const auto& e : g.elems) ptrs.push_back(&e.tree);
  if (ptrs.empty()) throw Error("empty grammar");
  return underlying_cfg(ptrs, g.start);
}

std::vector<Diagnostic> validate_stsg(const Stsg& g, double tolerance) {
  std::vector<Diagnostic> out;
  std::map<std::string, double> sums;
  for (const ElementaryTree& e : g.elems) {
    if (std::isnan(e.log_prob) || e.log_prob > 1e-12)
      out.push_back({Diagnostic::Kind::bad_probability,
                     "elementary tree " + std::to_string(e.id) + " has probability outside (0,1]"});
    sums[e.tree[e.tree.root()].label] += std::exp(e.log_prob);
    for (NodeId n : e.tree.leaves())
      if (e.tree[n].label.empty())
        out.push_back({Diagnostic::Kind::epsilon_leaf,
                       "elementary tree " + std::to_string(e.id) + " has an empty leaf"});
  }
  for (const auto& [root, s] : sums)
    if (std::fabs(s - 1.0) > tolerance) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "probabilities of root " << root << " sum to " << s;
      out.push_back({Diagnostic::Kind::probability_sum, msg.str()});
    }
  if (g.elems.empty()) return out;
  Cfg cfg = underlying_cfg(g);
  if (has_unary_cycle(cfg))
    out.push_back({Diagnostic::Kind::unary_cycle, "underlying CFG has a unary cycle"});
  std::map<std::string, std::vector<const Rule*>> by_lhs;
  for (const Rule& r : cfg.rules) by_lhs[r.lhs].push_back(&r);
  std::set<std::string> seen{g.start};
  std::deque<std::string> queue{g.start};
  while (!queue.empty()) {
    std::string a = queue.front();
    queue.pop_front();
    for (const Rule* r : by_lhs[a])
      for (const std::string& b : r->rhs)
        if (seen.insert(b).second) queue.push_back(b);
  }
  for (const auto& s : cfg.nonterminals)
    if (!seen.count(s)) out.push_back({Diagnostic::Kind::unreachable, "unreachable nonterminal " + s});
  for (const auto& s : cfg.terminals)
    if (!seen.count(s)) out.push_back({Diagnostic::Kind::unreachable, "unreachable terminal " + s});
  return out;
}

void write_stsg(std::ostream& out, const Stsg& g) {
  out << "STSG " << g.start << '\n';
  char buf[64];
  for (const ElementaryTree& e : g.elems) {
    std::snprintf(buf, sizeof buf, "%.17g", std::exp(e.log_prob));
    out << buf << '\t' << write_bracketed(e.tree) << '\n';
  }
}

Stsg read_stsg(std::istream& in) {
  std::string line;
  std::string start;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream hs(line);
    std::string tag;
    hs >> tag >> start;
    if (tag != "STSG" || start.empty()) throw Error("grammar file must start with 'STSG <start>'");
    break;
  }
  if (start.empty()) throw Error("grammar file must start with 'STSG <start>'");
  std::vector<std::pair<Tree, double>> trees;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::size_t sep = line.find_first_of(" \t", first);
    if (sep == std::string::npos) throw Error("line " + std::to_string(lineno) + ": missing tree");
    double p = 0.0;
    try {
      p = std::stod(line.substr(first, sep - first));
    } catch (const std::exception&) {
      throw Error("line " + std::to_string(lineno) + ": bad probability");
    }
    try {
      trees.emplace_back(parse_bracketed(std::string_view(line).substr(sep)), p);
    } catch (const ParseError& e) {
      throw Error("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return make_stsg(start, trees);
}

}  // namespace dop
