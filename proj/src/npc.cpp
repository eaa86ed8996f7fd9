#include "dop/npc.hpp"

#include <cmath>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "dop/disambig.hpp"

namespace dop {

void check_formula(const Cnf3Formula& f) {
  if (f.num_vars < 0) throw Error("negative variable count");
  for (std::size_t k = 0; k < f.clauses.size(); ++k)
    for (int lit : f.clauses[k])
      if (lit == 0 || std::abs(lit) > f.num_vars)
        throw Error("clause " + std::to_string(k + 1) + ": literal " + std::to_string(lit) +
                    " outside 1.." + std::to_string(f.num_vars));
}

Cnf3Formula read_dimacs(std::istream& in) {
  Cnf3Formula f;
  std::string line;
  bool header = false;
  int declared = 0;
  std::vector<int> pending;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok) || tok == "c") continue;
    if (tok == "p") {
      std::string cnf;
      if (!(ls >> cnf >> f.num_vars >> declared) || cnf != "cnf") throw Error("bad 'p cnf n m' header");
      header = true;
      continue;
    }
    if (!header) throw Error("clause before the 'p cnf' header");
    ls.clear();
    ls.str(line);
    int lit;
    while (ls >> lit) {
      if (lit != 0) {
        pending.push_back(lit);
        continue;
      }
      if (pending.size() != 3)
        throw Error("clause " + std::to_string(f.clauses.size() + 1) + " has " +
                    std::to_string(pending.size()) + " literals, expected 3");
      f.clauses.push_back({pending[0], pending[1], pending[2]});
      pending.clear();
    }
    if (!ls.eof()) throw Error("non-integer token in clause line");
  }
  if (!header) throw Error("missing 'p cnf' header");
  if (!pending.empty()) throw Error("last clause is not terminated by 0");
  if (static_cast<int>(f.clauses.size()) != declared)
    throw Error("header declares " + std::to_string(declared) + " clauses, found " +
                std::to_string(f.clauses.size()));
  check_formula(f);
  return f;
}

void write_dimacs(std::ostream& out, const Cnf3Formula& f) {
  out << "p cnf " << f.num_vars << ' ' << f.clauses.size() << '\n';
  for (const auto& c : f.clauses) out << c[0] << ' ' << c[1] << ' ' << c[2] << " 0\n";
}

bool sat_bruteforce(const Cnf3Formula& f) {
  check_formula(f);
  if (f.num_vars > 24) throw Error("too many variables for exhaustive search");
  for (std::uint32_t a = 0; a < (1u << f.num_vars); ++a) {
    bool all = true;
    for (const auto& c : f.clauses) {
      bool any = false;
      for (int lit : c) {
        bool v = (a >> (std::abs(lit) - 1)) & 1u;
        any = any || (lit > 0 ? v : !v);
      }
      if (!any) {
        all = false;
        break;
      }
    }
    if (all) return true;
  }
  return false;
}

std::string kind_name(ProblemKind k) {
  switch (k) {
    case ProblemKind::mppwg: return "MPPWG";
    case ProblemKind::mps: return "MPS";
    case ProblemKind::mpp: return "MPP";
    case ProblemKind::mps_scfg: return "MPS-SCFG";
  }
  return "?";
}

ProblemKind parse_kind(const std::string& s) {
  for (ProblemKind k : {ProblemKind::mppwg, ProblemKind::mps, ProblemKind::mpp, ProblemKind::mps_scfg})
    if (kind_name(k) == s) return k;
  throw Error("unknown problem kind '" + s + "'");
}

namespace {

Rational power(const Rational& x, int e) {
  Rational r = 1;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

std::string literal_symbol(int lit) {
  return (lit < 0 ? "~u" : "u") + std::to_string(std::abs(lit));
}

std::string position_word(std::size_t k, int j) {
  return "v" + std::to_string(k + 1) + "_" + std::to_string(j + 1);
}

class Builder {
 public:
  Builder(const Cnf3Formula& f, ProblemKind kind) : f_(f), kind_(kind) {}

  // Literal node at clause k, position j; value is "T", "F" or empty for a
  // substitution site.
  std::string literal(std::size_t k, int j, const std::string& value) const {
    std::string sym = literal_symbol(f_.clauses[k][j]);
    if (value.empty()) return "(" + sym + ")";
    if (kind_ == ProblemKind::mpp) return "(" + sym + " (" + value + " " + position_word(k, j) + "))";
    return "(" + sym + " " + value + ")";
  }

  std::string clause(std::size_t k, const std::array<std::string, 3>& values) const {
    std::string s = "(C" + std::to_string(k + 1);
    for (int j = 0; j < 3; ++j) s += " " + literal(k, j, values[j]);
    return s + ")";
  }

 private:
  const Cnf3Formula& f_;
  ProblemKind kind_;
};

// Replaces a tree by root -> frontier.
Tree flatten(const Tree& t) {
  Tree out;
  NodeId root = out.add(t[t.root()].label, SymbolKind::nonterminal);
  out.set_root(root);
  for (NodeId leaf : t.leaves()) out.attach(root, out.add(t[leaf].label, t[leaf].kind));
  return out;
}

}  // namespace

ReductionInstance build_instance(const Cnf3Formula& input, ProblemKind kind) {
  check_formula(input);
  if (input.clauses.empty()) throw Error("formula has no clauses");
  ReductionInstance inst;
  inst.kind = kind;
  std::map<int, int> renumber;
  for (const auto& c : input.clauses)
    for (int lit : c) renumber.emplace(std::abs(lit), 0);
  int next = 0;
  for (auto& [v, id] : renumber) id = ++next;
  Cnf3Formula& f = inst.formula;
  f.num_vars = next;
  for (const auto& c : input.clauses) {
    std::array<int, 3> d{};
    for (int j = 0; j < 3; ++j) d[j] = (c[j] < 0 ? -1 : 1) * renumber[std::abs(c[j])];
    f.clauses.push_back(d);
  }
  const int n = f.num_vars;
  const int m = static_cast<int>(f.clauses.size());
  inst.occurrences.assign(n + 1, 0);
  for (const auto& c : f.clauses)
    for (int lit : c) ++inst.occurrences[std::abs(lit)];

  inst.half = kind == ProblemKind::mpp ? Rational(1, 6 * m) : Rational(1, 2);
  const Rational& h = inst.half;
  Rational sigma = 0;
  for (int i = 1; i <= n; ++i) sigma += power(h, inst.occurrences[i]);
  inst.theta_high = 1 / (2 * sigma);
  inst.theta_low = 1 / (2 * sigma + power(h, m));
  if (!(inst.theta_low < inst.theta_high)) throw Error("empty interval for theta");
  inst.theta = (inst.theta_low + inst.theta_high) / 2;
  Rational p0 = 1 - 2 * inst.theta * sigma;
  Rational third(1, 3);
  inst.first_type = inst.theta * power(h, 3 * m);
  inst.second_type = p0 * power(h, 2 * m) * power(third, m);
  inst.q = n * inst.first_type + inst.second_type;

  Builder b(f, kind);
  std::vector<std::pair<std::string, Rational>> trees;
  std::vector<int> roles;
  for (int i = 1; i <= n; ++i) {
    for (bool value : {true, false}) {
      std::string s = "(S";
      for (std::size_t k = 0; k < f.clauses.size(); ++k) {
        std::array<std::string, 3> vals;
        for (int j = 0; j < 3; ++j) {
          int lit = f.clauses[k][j];
          if (std::abs(lit) != i) continue;
          vals[j] = ((lit > 0) == value) ? "T" : "F";
        }
        s += " " + b.clause(k, vals);
      }
      trees.emplace_back(s + ")", inst.theta * power(h, inst.occurrences[i]));
      roles.push_back(i);
    }
  }
  for (std::size_t k = 0; k < f.clauses.size(); ++k)
    for (int j = 0; j < 3; ++j) {
      std::array<std::string, 3> vals;
      vals[j] = "T";
      trees.emplace_back(b.clause(k, vals), third);
      roles.push_back(-1);
    }
  std::vector<std::string> words;
  if (kind == ProblemKind::mpp)
    for (std::size_t k = 0; k < f.clauses.size(); ++k)
      for (int j = 0; j < 3; ++j) words.push_back(position_word(k, j));
  for (int i = 1; i <= n; ++i)
    for (int sign : {1, -1}) {
      std::string sym = literal_symbol(sign * i);
      for (const char* v : {"T", "F"}) {
        if (kind == ProblemKind::mpp) {
          for (const auto& w : words) {
            trees.emplace_back("(" + sym + " (" + v + " " + w + "))", h);
            roles.push_back(-1);
          }
        } else {
          trees.emplace_back("(" + sym + " " + v + ")", h);
          roles.push_back(-1);
        }
      }
    }
  std::string bare = "(S";
  for (int k = 1; k <= m; ++k) bare += " (C" + std::to_string(k) + ")";
  trees.emplace_back(bare + ")", p0);
  roles.push_back(0);

  std::vector<std::pair<Tree, double>> pairs;
  for (const auto& [text, p] : trees) {
    Tree t = parse_bracketed(text);
    if (kind == ProblemKind::mps_scfg) t = flatten(t);
    pairs.emplace_back(std::move(t), static_cast<double>(p));
    inst.prob.push_back(p);
  }
  inst.consistency_var = std::move(roles);
  inst.stsg = make_stsg("S", pairs);

  if (kind == ProblemKind::mpp) {
    inst.sentence = words;
    inst.word_graph = linear_graph(words);
  } else {
    inst.word_graph.num_states = 3 * m + 1;
    for (int s = 0; s < 3 * m; ++s)
      for (const char* v : {"T", "F"}) inst.word_graph.transitions.push_back({s, s + 1, v, 0.0});
  }
  return inst;
}

ThetaChecks check_theta(const ReductionInstance& inst) {
  ThetaChecks c;
  const int m = static_cast<int>(inst.formula.clauses.size());
  Rational p0;
  bool proper = true;
  std::map<std::string, Rational> sums;
  for (std::size_t e = 0; e < inst.prob.size(); ++e) {
    const Rational& p = inst.prob[e];
    const Tree& t = inst.stsg.elems[e].tree;
    sums[t[t.root()].label] += p;
    if (inst.consistency_var[e] == 0) p0 = p;
    if (inst.consistency_var[e] >= 0 && !(p > 0 && p < 1)) proper = false;
  }
  c.proper = proper && p0 > 0 && p0 < 1;
  Rational three_m = 1;
  for (int k = 0; k < m; ++k) three_m *= 3;
  c.distinguishable = three_m * inst.second_type < inst.first_type;
  c.normalized = true;
  for (const auto& [root, s] : sums) c.normalized = c.normalized && s == 1;
  return c;
}

Rational derivation_probability(const ReductionInstance& inst, const std::vector<int>& trees) {
  Rational p = 1;
  for (int id : trees) p *= inst.prob[id];
  return p;
}

BruteDecision decide_by_bruteforce(const ReductionInstance& inst) {
  const int m = static_cast<int>(inst.formula.clauses.size());
  if (inst.formula.num_vars > 4 || m > 4) throw Error("instance too large for exhaustive decision");
  EnumerationLimits limits;
  limits.max_length = 3 * m;
  limits.max_derivations = 2000000;
  bool by_parse = inst.kind == ProblemKind::mppwg || inst.kind == ProblemKind::mpp;
  std::vector<std::vector<std::string>> sentences;
  if (inst.kind == ProblemKind::mpp) {
    sentences.push_back(inst.sentence);
  } else {
    for (std::uint32_t bits = 0; bits < (1u << (3 * m)); ++bits) {
      std::vector<std::string> s;
      for (int p = 0; p < 3 * m; ++p) s.push_back((bits >> (3 * m - 1 - p)) & 1u ? "F" : "T");
      sentences.push_back(std::move(s));
    }
  }
  BruteDecision out;
  for (const auto& s : sentences) {
    std::map<std::string, Rational> groups;
    for (const auto& d : enumerate_derivations(inst.stsg, s, limits)) {
      std::string key;
      if (by_parse) {
        key = write_bracketed(d.parse);
      } else {
        for (const auto& w : s) key += (key.empty() ? "" : " ") + w;
      }
      groups[key] += derivation_probability(inst, d.trees);
    }
    for (const auto& [key, p] : groups)
      if (p > out.best) {
        out.best = p;
        out.witness = key;
      }
  }
  out.yes = out.best > 0 && out.best >= inst.q;
  return out;
}

void write_manifest(std::ostream& out, const ReductionInstance& inst) {
  out << "THETA " << inst.theta.str() << " Q " << inst.q.str() << " KIND " << kind_name(inst.kind) << '\n';
}

}  // namespace dop
