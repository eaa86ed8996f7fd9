#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dop/tree.hpp"

namespace dop {

inline const std::string kUnknownWord = "⟨UNK⟩";

struct ElementaryTree {
  int id = 0;
  Tree tree;
  double log_prob = 0.0;
  double count = 0.0;
  // Address of node k of `tree` is address_base + k; leaves carry no address.
  int address_base = 0;
};

struct Stsg {
  std::string start;
  std::set<std::string> nonterminals;
  std::set<std::string> terminals;
  std::vector<ElementaryTree> elems;
  int num_addresses = 0;
  bool has_unknown = false;

  // Recomputes ids, addresses and symbol sets after elems changed.
  void finalize();
  int address_of(int elem, NodeId node) const { return elems[elem].address_base + node; }
  bool is_address(int a) const;
  int elem_of_address(int a) const;
  NodeId node_of_address(int a) const { return a - elems[elem_of_address(a)].address_base; }
};

// Builds a grammar from (tree, probability) pairs in the given order.
Stsg make_stsg(const std::string& start, const std::vector<std::pair<Tree, double>>& trees);

struct ScfgRule {
  int id = 0;
  std::string lhs;
  std::vector<std::string> rhs;
  double log_prob = 0.0;
};

struct Scfg {
  std::string start;
  std::set<std::string> nonterminals;
  std::set<std::string> terminals;
  std::vector<ScfgRule> rules;
};

// Keeps subtrees whose frontier is not a lone substitution site.
bool admissible_elementary(const Tree& t);

Stsg project_dop(const Treebank& tb, const ProjectionParams& p, bool add_one_unknowns = false);
Stsg project_sdop(const std::vector<MarkedTree>& mtb, const ProjectionParams& p);
Scfg scfg_of(const Stsg& g);
Cfg underlying_cfg(const Stsg& g);

struct Diagnostic {
  enum class Kind { probability_sum, epsilon_leaf, unary_cycle, unreachable, bad_probability };
  Kind kind;
  std::string message;
};

std::vector<Diagnostic> validate_stsg(const Stsg& g, double tolerance = 1e-9);

void write_stsg(std::ostream& out, const Stsg& g);
Stsg read_stsg(std::istream& in);

}  // namespace dop
