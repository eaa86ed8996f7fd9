#pragma once

#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "dop/tree.hpp"

namespace dop {

using Bracket = std::pair<int, int>;
using LabeledBracket = std::tuple<std::string, int, int>;

// Brackets of the nonterminal nodes; terminals are numbered from one, so a
// node over terminals i..j yields (i-1, j).
std::set<LabeledBracket> labeled_brackets(const Tree& t);
std::set<Bracket> unlabeled_brackets(const Tree& t);
bool crossing(const Bracket& a, const Bracket& b);
// Brackets of u that cross at least one bracket of v.
std::size_t count_crossing(const std::set<Bracket>& u, const std::set<Bracket>& v);

struct EvalReport {
  std::size_t items = 0;
  std::size_t recognized_items = 0;
  std::size_t exact = 0;
  std::size_t zero_crossing_items = 0;
  std::size_t labeled_match = 0, labeled_gold = 0, labeled_test = 0;
  std::size_t bracket_match = 0, bracket_gold = 0, bracket_test = 0;
  std::size_t non_crossing = 0;
  std::size_t total_length = 0;
  std::size_t sentence_matches = 0;
  std::size_t sentence_items = 0;

  double recognized() const;
  double exact_match() const;
  double labeled_recall() const;
  double labeled_precision() const;
  double bracket_recall() const;
  double bracket_precision() const;
  double ncb_recall() const;
  double ncb_precision() const;
  double zero_crossing() const;
  double mean_length() const;
  double sentence_match() const;
};

// test[i] empty means NOPARSE. Optional word-graph sentences compare the
// chosen sentence against the gold frontier.
EvalReport parseval(const std::vector<Tree>& gold, const std::vector<std::optional<Tree>>& test,
                    const std::vector<std::optional<std::vector<std::string>>>& chosen = {});

void write_report(std::ostream& out, const EvalReport& r);
void write_report_kv(std::ostream& out, const EvalReport& r);

}  // namespace dop
