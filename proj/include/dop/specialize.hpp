#pragma once

#include <array>
#include <compare>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dop/disambig.hpp"

namespace dop {

struct LearnerConfig {
  double delta = 0.95;
  int phi = 5;
  int max_ssf_len = 8;
  // Fraction of original internal nodes after which learning stops.
  std::optional<double> coverage_upper_bound;
  bool use_backoff = false;
  bool use_eq_class = false;
};

void check_config(const LearnerConfig& cfg);

// With equivalence classes on, `symbols` holds the sequence with consecutive
// repetitions removed and `eq_class` the collapsed bracket structure.
struct SsfKey {
  std::vector<std::string> symbols;
  std::string eq_class;
  auto operator<=>(const SsfKey&) const = default;
};

std::string to_string(const SsfKey& k);

inline const std::string kPad = "⟨pad⟩";
inline const std::string kWildcard = "⟨*⟩";

// Two symbols left then two symbols right.
using Context = std::array<std::string, 4>;

struct ContextCounts {
  long freq_c = 0;
  long freq_total = 0;
};

using ContextStats = std::map<Context, ContextCounts>;

struct SsfStats {
  long freq_total = 0;
  long freq_c = 0;
  // Bracketed fragment -> number of occurrences.
  std::map<std::string, long> ambiguity_set;
  ContextStats contexts;

  double cp() const {
    return freq_total == 0 ? 0.0 : static_cast<double>(freq_c) / static_cast<double>(freq_total);
  }
  double asd(const std::string& fragment) const;
};

using SsfTable = std::map<SsfKey, SsfStats>;

// Statistics over the current partial trees: nodes strictly below a marked
// node are hidden and marked nodes (other than a marked root) act as leaves.
SsfTable ssf_pass(const std::vector<MarkedTree>& current, const LearnerConfig& cfg);

double grf_measure(const SsfKey& key, const SsfStats& stats, const LearnerConfig& cfg);
double backoff_measure(const SsfKey& key, const ContextStats& contexts, const LearnerConfig& cfg);
// Dispatches on cfg.use_backoff.
double measure(const SsfKey& key, const SsfStats& stats, const LearnerConfig& cfg);

struct LearnedSsf {
  int iteration = 0;
  SsfKey key;
  long freq_c = 0;
  long freq_total = 0;
  double cp = 0.0;
  double score = 0.0;
};

struct Specialization {
  std::string start;
  std::vector<MarkedTree> marked;
  std::vector<Tree> tsg;
  std::vector<LearnedSsf> learned;
  int iterations = 0;
  double coverage = 0.0;  // fraction of internal nodes reduced by learning
};

Specialization sequential_cover(const Treebank& tb, const LearnerConfig& cfg);

// The partial tree rooted at `node`, cut at marked descendants.
Tree cut_fragment(const MarkedTree& m, NodeId node);
std::vector<Tree> cut_at_marks(const MarkedTree& m);

std::vector<Tree> complete_ambiguity_sets(const std::vector<MarkedTree>& mtb);

// Appends trees not already present.
void add_unique(std::vector<Tree>& to, const std::vector<Tree>& from);

// Uniform probabilities per root so the TSG can go through the STSG machinery.
Stsg tsg_as_stsg(const std::string& start, const std::vector<Tree>& tsg);

enum class Dispatch { sdop, dop, dop_unrestricted, none };
std::string dispatch_name(Dispatch d);

struct IntegratedResult {
  Chart tsg_chart;
  std::vector<std::vector<bool>> complete;  // [i][j]
  bool complete_whole = false;
  Dispatch used = Dispatch::none;
  std::optional<Derivation> best;
};

class IntegratedParser {
 public:
  IntegratedParser(const Stsg& tsg, const Stsg& sdop, const Stsg& dop);

  IntegratedResult parse(const WordGraph& wg) const;
  IntegratedResult parse(const std::vector<std::string>& words) const;

  const AcnfGrammar& tsg() const { return tsg_; }
  const AcnfGrammar& sdop() const { return sdop_; }
  const AcnfGrammar& dop() const { return dop_; }

 private:
  AcnfGrammar tsg_;
  AcnfGrammar sdop_;
  AcnfGrammar dop_;
  // The TSG with each root category as start symbol.
  std::map<Symbol, AcnfGrammar> rooted_;
};

void write_marked_treebank(std::ostream& out, const std::vector<MarkedTree>& mtb);
std::vector<MarkedTree> read_marked_treebank(std::istream& in);
void write_tsg(std::ostream& out, const std::string& start, const std::vector<Tree>& tsg);
std::vector<Tree> read_tsg(std::istream& in, std::string* start = nullptr);

}  // namespace dop
