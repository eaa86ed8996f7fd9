#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dop/chart.hpp"

namespace dop {

struct Derivation {
  double log_prob = 0.0;
  Tree parse;
  std::vector<int> trees;
  DecoratedTree derivation_tree;  // original symbols, grammar addresses
  DecoratedTree cnf_tree;         // CNF shape, compiled addresses
  std::vector<std::string> sentence;
};

struct ParseStats {
  std::uint64_t viability_checks = 0;
};

// Checks a derivation tree against the original grammar: root label and
// root address, then Parenthood or Substitution for every node.
bool recognize_derivation_tree(const Stsg& g, const DecoratedTree& dt);

std::optional<Derivation> mpd(const AcnfGrammar& g, const Chart& chart, ParseStats* stats = nullptr);
// Reference implementation that tests every (parent, child) address pair.
std::optional<Derivation> mpd_naive(const AcnfGrammar& g, const Chart& chart,
                                    ParseStats* stats = nullptr);
std::optional<Derivation> mpid(const AcnfGrammar& g, const WordGraph& wg, ParseStats* stats = nullptr);

// Log of the summed probability of all derivations; -inf if none.
double input_probability(const AcnfGrammar& g, const Chart& chart, ParseStats* stats = nullptr);
double parse_probability(const AcnfGrammar& g, const Tree& parse);

// Probability of one derivation: product of PT over its trees.
double derivation_log_prob(const Stsg& g, const std::vector<int>& trees);

class DerivationOverflow : public Error {
 public:
  using Error::Error;
};

struct EnumerationLimits {
  int max_length = 7;
  std::size_t max_derivations = 200000;
};

struct EnumeratedDerivation {
  DecoratedTree tree;
  Tree parse;
  std::vector<int> trees;
  std::vector<int> path;  // transition indices
  std::vector<std::string> sentence;
  double log_prob = 0.0;
};

std::vector<EnumeratedDerivation> enumerate_derivations(const Stsg& g, const WordGraph& wg,
                                                        const EnumerationLimits& limits = {});
std::vector<EnumeratedDerivation> enumerate_derivations(const Stsg& g,
                                                        const std::vector<std::string>& words,
                                                        const EnumerationLimits& limits = {});

struct BruteResult {
  Tree mpp;
  double mpp_log_prob = 0.0;
  std::vector<std::string> mps;
  double mps_log_prob = 0.0;
};

std::optional<BruteResult> brute_mpp_mps(const Stsg& g, const WordGraph& wg,
                                         const EnumerationLimits& limits = {});

std::string format_derivation(const std::optional<Derivation>& d, bool with_sentence);

double log_add(double a, double b);

}  // namespace dop
