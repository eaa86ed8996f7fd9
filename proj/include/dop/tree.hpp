#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dop {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

using NodeId = std::int32_t;
constexpr NodeId kNoNode = -1;

enum class SymbolKind : std::uint8_t { terminal, nonterminal };

struct TreeNode {
  std::string label;
  SymbolKind kind = SymbolKind::nonterminal;
  std::vector<NodeId> children;
};

// Ordered labeled tree stored as a node array. Leaves labeled by a
// nonterminal are substitution sites.
class Tree {
 public:
  NodeId add(std::string label, SymbolKind kind);
  void attach(NodeId parent, NodeId child);

  NodeId root() const { return root_; }
  void set_root(NodeId n) { root_ = n; }

  const TreeNode& operator[](NodeId n) const { return nodes_[n]; }
  TreeNode& operator[](NodeId n) { return nodes_[n]; }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return root_ == kNoNode; }

  bool is_leaf(NodeId n) const { return nodes_[n].children.empty(); }
  bool is_internal(NodeId n) const { return !nodes_[n].children.empty(); }
  bool is_subsite(NodeId n) const {
    return is_leaf(n) && nodes_[n].kind == SymbolKind::nonterminal;
  }
  bool is_terminal(NodeId n) const { return nodes_[n].kind == SymbolKind::terminal; }
  bool is_preterminal(NodeId n) const;

  // Number of edges on the longest root-to-leaf path.
  int depth() const;
  int depth(NodeId n) const;

  std::vector<NodeId> preorder() const;
  std::vector<NodeId> preorder(NodeId from) const;
  std::vector<NodeId> leaves() const;
  std::vector<NodeId> leaves(NodeId from) const;
  std::vector<std::string> frontier() const;
  std::vector<std::string> words() const;
  std::vector<NodeId> parents() const;

  // Copies the subtree of `other` rooted at `node` into this tree.
  NodeId graft(const Tree& other, NodeId node);
  Tree subtree(NodeId n) const;

 private:
  std::vector<TreeNode> nodes_;
  NodeId root_ = kNoNode;
};

bool same_tree(const Tree& a, NodeId na, const Tree& b, NodeId nb);
bool operator==(const Tree& a, const Tree& b);

Tree parse_bracketed(std::string_view text);
std::string write_bracketed(const Tree& t);
std::string write_bracketed(const Tree& t, NodeId from);

// A tree plus a per-node flag; used for specialized tree-banks.
struct MarkedTree {
  Tree tree;
  std::vector<bool> marked;
};

struct Treebank {
  std::vector<Tree> trees;
  std::string start;
};

// One tree per line, '#' lines and blank lines skipped. Symbol kinds are
// checked for consistency across the whole bank.
Treebank read_treebank(std::istream& in);
void write_treebank(std::ostream& out, const Treebank& tb);
void check_symbol_kinds(const std::vector<const Tree*>& trees);

struct Rule {
  std::string lhs;
  std::vector<std::string> rhs;
  auto operator<=>(const Rule&) const = default;
};

struct Cfg {
  std::string start;
  std::set<std::string> nonterminals;
  std::set<std::string> terminals;
  std::set<Rule> rules;
};

Cfg underlying_cfg(const Treebank& tb);
Cfg underlying_cfg(const std::vector<const Tree*>& trees, const std::string& start);
bool has_unary_cycle(const Cfg& g);
// Top-down check that every internal node uses a rule of g.
bool cfg_derives(const Cfg& g, const Tree& t);

Tree bamboo_collapse(const Tree& t);

struct ProjectionParams {
  std::optional<int> max_depth;
  std::optional<int> max_subsites;
  std::optional<int> max_terminals;
  std::optional<int> max_terminal_run;
};

// Canonical bracketed keys of all subtree occurrences of t. With `marked`
// given, roots and cut points are restricted to marked nodes and depth only
// counts marked nodes on a path.
std::vector<std::string> enumerate_subtree_keys(const Tree& t, const ProjectionParams& p,
                                                const std::vector<bool>* marked = nullptr);
std::vector<Tree> enumerate_subtrees(const Tree& t, const ProjectionParams& p);

}  // namespace dop
