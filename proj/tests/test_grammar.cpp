#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "dop/grammar.hpp"
#include "support.hpp"

using namespace dop;
using dop::testing::Rng;

namespace {

Tree T(const char* s) { return parse_bracketed(s); }

std::map<std::string, double> probs(const Stsg& g) {
  std::map<std::string, double> m;
  for (const auto& e : g.elems) m[write_bracketed(e.tree)] = std::exp(e.log_prob);
  return m;
}

// Relative frequencies computed straight from the node-subset oracle.
std::map<std::string, double> oracle_dop(const Treebank& tb) {
  std::map<std::string, double> counts, totals;
  for (const Tree& t : tb.trees)
    for (const auto& k : dop::testing::brute_subtrees(t)) {
      Tree s = T(k.c_str());
      if (!admissible_elementary(s)) continue;
      counts[k] += 1;
      totals[s[s.root()].label] += 1;
    }
  std::map<std::string, double> out;
  for (const auto& [k, c] : counts) {
    Tree s = T(k.c_str());
    out[k] = c / totals[s[s.root()].label];
  }
  return out;
}

Treebank random_bank(Rng& rng, int trees) {
  Treebank tb;
  tb.start = "S";
  while (static_cast<int>(tb.trees.size()) < trees) {
    Tree t = dop::testing::random_tree(rng, 10);
    t[t.root()].label = "S";
    tb.trees.push_back(bamboo_collapse(t));
    if (has_unary_cycle(underlying_cfg(tb))) tb.trees.pop_back();
  }
  return tb;
}

}  // namespace

TEST_SUITE("grammar") {

TEST_CASE("DOP projection of the two-word tree") {
  Treebank tb{{T("(S (A a) (B b))")}, "S"};
  auto p = probs(project_dop(tb, {}));
  CHECK(p.size() == 6);
  for (const char* k : {"(S (A) (B))", "(S (A a) (B))", "(S (A) (B b))", "(S (A a) (B b))"})
    CHECK(dop::testing::close(p[k], 0.25));
  CHECK(p["(A a)"] == 1.0);
  CHECK(p["(B b)"] == 1.0);
}

TEST_CASE("Add-One unknown words") {
  Tree t = T("(S (N dog))");
  Treebank tb{{t, t, t}, "S"};
  Stsg g = project_dop(tb, {}, true);
  auto p = probs(g);
  CHECK(dop::testing::close(p["(N " + kUnknownWord + ")"], 0.2));
  CHECK(dop::testing::close(p["(N dog)"], 0.8));
  CHECK(dop::testing::close(p["(S (N dog))"], 1.0));
  CHECK(g.has_unknown);
  for (const auto& d : validate_stsg(g)) CHECK(d.kind != Diagnostic::Kind::probability_sum);
}

TEST_CASE("equal-frequency trees share depth-one probabilities") {
  Treebank tb{{T("(S (A a) (B b))"), T("(S (B b) (A a))")}, "S"};
  ProjectionParams d1;
  d1.max_depth = 1;
  auto p = probs(project_dop(tb, d1));
  CHECK(p.size() == 4);
  CHECK(dop::testing::close(p["(S (A) (B))"], 0.5));
  CHECK(dop::testing::close(p["(S (B) (A))"], 0.5));
}

TEST_CASE("projection matches the relative-frequency oracle") {
  Rng rng(31);
  for (int i = 0; i < 60; ++i) {
    Treebank tb = random_bank(rng, 3);
    Stsg g = project_dop(tb, {});
    auto p = probs(g);
    auto o = oracle_dop(tb);
    REQUIRE(p.size() == o.size());
    for (const auto& [k, v] : o) CHECK(dop::testing::close(p[k], v));
    CHECK(validate_stsg(g).empty());
  }
}

TEST_CASE("enlarging bounds never removes elementary trees") {
  Rng rng(41);
  for (int i = 0; i < 40; ++i) {
    Treebank tb = random_bank(rng, 3);
    ProjectionParams small;
    small.max_depth = dop::testing::uniform(rng, 1, 2);
    small.max_subsites = dop::testing::uniform(rng, 1, 2);
    small.max_terminals = dop::testing::uniform(rng, 1, 3);
    small.max_terminal_run = dop::testing::uniform(rng, 1, 2);
    ProjectionParams big = small;
    switch (dop::testing::uniform(rng, 0, 3)) {
      case 0: *big.max_depth += 1; break;
      case 1: *big.max_subsites += 1; break;
      case 2: *big.max_terminals += 1; break;
      default: *big.max_terminal_run += 1; break;
    }
    auto a = probs(project_dop(tb, small));
    auto b = probs(project_dop(tb, big));
    for (const auto& [k, v] : a) CHECK(b.count(k) == 1);
  }
}

TEST_CASE("ids and addresses are unique") {
  Rng rng(43);
  for (int i = 0; i < 30; ++i) {
    Stsg g = project_dop(random_bank(rng, 3), {});
    std::set<int> ids, addrs;
    for (const auto& e : g.elems) {
      CHECK(ids.insert(e.id).second);
      for (NodeId n : e.tree.preorder())
        if (e.tree.is_internal(n)) {
          int a = g.address_of(e.id, n);
          CHECK(addrs.insert(a).second);
          CHECK(g.is_address(a));
          CHECK(g.elem_of_address(a) == e.id);
          CHECK(g.node_of_address(a) == n);
        } else {
          CHECK_FALSE(g.is_address(g.address_of(e.id, n)));
        }
    }
  }
}

TEST_CASE("specialized projection respects cut marks") {
  Tree t = T("(S (A a) (B b))");
  NodeId s = t.root(), a = t[s].children[0], b = t[s].children[1];
  std::vector<bool> root_only(t.size(), false);
  root_only[s] = true;
  auto p = probs(project_sdop({{t, root_only}}, {}));
  CHECK(p.size() == 1);
  CHECK(p["(S (A a) (B b))"] == 1.0);

  std::vector<bool> ra = root_only;
  ra[a] = true;
  auto q = probs(project_sdop({{t, ra}}, {}));
  CHECK(q.size() == 3);
  CHECK(q.count("(S (A) (B b))"));
  CHECK(q.count("(S (A a) (B b))"));
  CHECK(q.count("(A a)"));

  std::vector<bool> none(t.size(), false);
  CHECK_THROWS_AS(project_sdop({{t, none}}, {}), Error);
  std::vector<bool> leaf = root_only;
  leaf[t[a].children[0]] = true;
  CHECK_THROWS_AS(project_sdop({{t, leaf}}, {}), Error);
  (void)b;
}

TEST_CASE("marking every internal node reproduces DOP") {
  Rng rng(47);
  for (int i = 0; i < 40; ++i) {
    Treebank tb = random_bank(rng, 3);
    std::vector<MarkedTree> mtb;
    for (const Tree& t : tb.trees) {
      std::vector<bool> m(t.size(), false);
      for (NodeId n : t.preorder()) m[n] = t.is_internal(n);
      mtb.push_back({t, m});
    }
    ProjectionParams p;
    if (i % 2) p.max_depth = 2;
    auto a = probs(project_dop(tb, p));
    auto b = probs(project_sdop(mtb, p));
    REQUIRE(a.size() == b.size());
    for (const auto& [k, v] : a) CHECK(dop::testing::close(b[k], v));
  }
}

TEST_CASE("SCFG view of depth-one grammars") {
  Treebank tb{{T("(S (A a) (B b))")}, "S"};
  ProjectionParams d1;
  d1.max_depth = 1;
  Scfg s = scfg_of(project_dop(tb, d1));
  CHECK(s.rules.size() == 3);
  for (const auto& r : s.rules) CHECK(r.log_prob == 0.0);
  CHECK_THROWS_AS(scfg_of(project_dop(tb, {})), Error);
  Stsg two = make_stsg("S", {{T("(S (A) (B))"), 0.5}, {T("(S (B) (A))"), 0.5}, {T("(A a)"), 1.0},
                             {T("(B b)"), 1.0}});
  Scfg t = scfg_of(two);
  CHECK(dop::testing::close(std::exp(t.rules[0].log_prob), 0.5));
  CHECK(dop::testing::close(std::exp(t.rules[1].log_prob), 0.5));
}

TEST_CASE("validation diagnostics") {
  Treebank tb{{T("(S (A a) (B b))")}, "S"};
  CHECK(validate_stsg(project_dop(tb, {})).empty());
  Stsg bad = make_stsg("S", {{T("(S (A a))"), 0.5}, {T("(S (B b))"), 0.4}, {T("(A a)"), 1.0}});
  bool sum = false;
  for (const auto& d : validate_stsg(bad)) sum = sum || d.kind == Diagnostic::Kind::probability_sum;
  CHECK(sum);
  Stsg cyc = make_stsg("S", {{T("(S (A) (A))"), 1.0}, {T("(A (B))"), 1.0}, {T("(B (A))"), 1.0}});
  bool cycle = false;
  for (const auto& d : validate_stsg(cyc)) cycle = cycle || d.kind == Diagnostic::Kind::unary_cycle;
  CHECK(cycle);
  Stsg unreach = make_stsg("S", {{T("(S a)"), 1.0}, {T("(C c)"), 1.0}});
  bool un = false;
  for (const auto& d : validate_stsg(unreach)) un = un || d.kind == Diagnostic::Kind::unreachable;
  CHECK(un);
}

TEST_CASE("grammar file round trip") {
  Rng rng(53);
  Stsg g = project_dop(random_bank(rng, 3), {});
  std::stringstream io;
  write_stsg(io, g);
  Stsg h = read_stsg(io);
  REQUIRE(h.elems.size() == g.elems.size());
  for (std::size_t i = 0; i < g.elems.size(); ++i) {
    CHECK(h.elems[i].tree == g.elems[i].tree);
    CHECK(dop::testing::close(h.elems[i].log_prob, g.elems[i].log_prob, 1e-12));
  }
  std::istringstream bad("S\n");
  CHECK_THROWS_AS(read_stsg(bad), Error);
  std::istringstream zero("STSG S\n0\t(S a)\n");
  CHECK_THROWS_AS(read_stsg(zero), Error);
}

}
