#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "dop/grammar.hpp"

namespace dop {

using Symbol = std::int32_t;
using Address = std::int32_t;
constexpr Symbol kNoSymbol = -1;
constexpr Address kNoAddress = -1;

class SymbolTable {
 public:
  Symbol intern(const std::string& name, SymbolKind kind);
  Symbol find(const std::string& name) const;
  const std::string& name(Symbol s) const { return names_[s]; }
  SymbolKind kind(Symbol s) const { return kinds_[s]; }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::vector<SymbolKind> kinds_;
  std::unordered_map<std::string, Symbol> index_;
};

// A binary rule lhs -> left right, or a terminal rule lhs -> left with
// right == kNoSymbol.
struct CnfRule {
  Symbol lhs = kNoSymbol;
  Symbol left = kNoSymbol;
  Symbol right = kNoSymbol;
  bool terminal() const { return right == kNoSymbol; }
};

struct AddressInfo {
  int rule = -1;
  int tree = -1;
  bool root = false;
  Address child[2] = {kNoAddress, kNoAddress};
  bool subsite[2] = {false, false};
  double pf = 0.0;  // log PT of the tree at roots, 0 elsewhere
};

struct AcnfGrammar {
  SymbolTable symbols;
  Symbol start = kNoSymbol;
  Symbol unknown = kNoSymbol;
  std::vector<CnfRule> rules;
  std::vector<std::vector<Address>> occurrences;
  std::vector<AddressInfo> addresses;
  std::vector<double> tree_log_prob;
  std::vector<Tree> original;
  std::vector<int> original_address_base;
  std::vector<Tree> shaped;
  std::vector<std::vector<Address>> shaped_address;
  std::vector<bool> user_symbol;
  std::map<std::string, std::string> fresh_names;
  int fresh_nodes = 0;

  // A root chain X[Y[..]] compiles to the merged symbol X|Y, which still
  // fills substitution sites labeled X.
  std::vector<Symbol> category;
  std::vector<std::vector<int>> binary_by_left;
  std::vector<std::vector<int>> terminal_by_word;

  int find_rule(Symbol lhs, Symbol left, Symbol right) const;
  bool is_root(Address c) const { return addresses[c].root; }
  bool is_subsite(Address c, int j) const { return addresses[c].subsite[j]; }
  Address parent_of(Address c, int j) const { return addresses[c].child[j]; }
  int tree_of(Address c) const { return addresses[c].tree; }
  // Log of P(c)(c', j) for a viable pair; j is the 0-based child index.
  double link(Address c, int j) const {
    return (j == 1 && addresses[c].root) ? addresses[c].pf : 0.0;
  }
  bool viable(Address c, Address child, int j) const;
  Symbol word_symbol(const std::string& word) const;

  std::map<std::tuple<Symbol, Symbol, Symbol>, int> rule_index;
};

inline const std::string kChainSeparator = "|";
inline const std::string kFreshMark = "′";

AcnfGrammar to_acnf(const Stsg& g);
void dump_acnf(std::ostream& out, const AcnfGrammar& g);

// A CNF-shaped tree whose internal nodes carry grammar addresses.
struct DecoratedTree {
  Tree tree;
  std::vector<Address> address;
};

struct ReversedParse {
  Tree parse;
  std::vector<int> derivation;     // elementary-tree ids in pre-order
  DecoratedTree derivation_tree;   // original-shape parse with source addresses
};

ReversedParse reverse_parse(const AcnfGrammar& g, const DecoratedTree& parse);

std::string wrapper_symbol(const std::string& word);

}  // namespace dop
