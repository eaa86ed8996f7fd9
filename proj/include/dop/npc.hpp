#pragma once

#include <array>
#include <boost/multiprecision/cpp_int.hpp>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dop/chart.hpp"
#include "dop/grammar.hpp"

namespace dop {

using Rational = boost::multiprecision::cpp_rational;

struct Cnf3Formula {
  int num_vars = 0;
  std::vector<std::array<int, 3>> clauses;  // signed 1-based variable indices
};

void check_formula(const Cnf3Formula& f);
// DIMACS-style: "p cnf n m" header, then literals terminated by 0.
Cnf3Formula read_dimacs(std::istream& in);
void write_dimacs(std::ostream& out, const Cnf3Formula& f);
bool sat_bruteforce(const Cnf3Formula& f);

enum class ProblemKind { mppwg, mps, mpp, mps_scfg };
std::string kind_name(ProblemKind k);
ProblemKind parse_kind(const std::string& s);

struct ReductionInstance {
  ProblemKind kind = ProblemKind::mppwg;
  // Variables that occur in the formula, renumbered 1..n in order of first use.
  Cnf3Formula formula;
  std::vector<int> occurrences;  // n_i per renumbered variable
  Stsg stsg;
  std::vector<Rational> prob;  // exact probability per elementary tree
  // Per elementary tree: the variable of a consistency tree, 0 for the bare
  // clause tree, -1 otherwise.
  std::vector<int> consistency_var;
  WordGraph word_graph;
  std::vector<std::string> sentence;  // the input sentence of the MPP kind
  Rational half;                      // 1/2, or 1/(6m) for the MPP kind
  Rational theta, theta_low, theta_high, q;
  Rational first_type, second_type;   // probability of one derivation of each type
};

ReductionInstance build_instance(const Cnf3Formula& f, ProblemKind kind);

struct ThetaChecks {
  bool proper = false;            // 0 < p_i < 1 and 0 < p_0 < 1
  bool distinguishable = false;   // 3^m second-type mass below one first-type derivation
  bool normalized = false;        // every root sums to exactly one
};
ThetaChecks check_theta(const ReductionInstance& inst);

Rational derivation_probability(const ReductionInstance& inst, const std::vector<int>& trees);

struct BruteDecision {
  bool yes = false;
  Rational best;
  std::string witness;  // parse or sentence reaching the best probability
};

BruteDecision decide_by_bruteforce(const ReductionInstance& inst);

void write_manifest(std::ostream& out, const ReductionInstance& inst);

}  // namespace dop
