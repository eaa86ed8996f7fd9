#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "dop/disambig.hpp"
#include "support.hpp"

using namespace dop;
using dop::testing::Rng;

namespace {

Tree T(const char* s) { return parse_bracketed(s); }

bool has_final(const AcnfGrammar& g, const ChartEntry& e, const std::string& lhs, const std::string& left,
               const std::string& right = "") {
  Symbol r = right.empty() ? kNoSymbol : g.symbols.find(right);
  int rule = g.find_rule(g.symbols.find(lhs), g.symbols.find(left), r);
  return rule >= 0 && e.has_final(rule);
}

// Span derivability over the compiled rules, memoized, independent of CKY.
class SpanOracle {
 public:
  SpanOracle(const AcnfGrammar& g, const WordGraph& wg) : g_(g), wg_(wg) {}

  bool rule(int r, int i, int j) {
    auto key = std::make_tuple(r, i, j);
    auto it = rule_memo_.find(key);
    if (it != rule_memo_.end()) return it->second;
    const CnfRule& x = g_.rules[r];
    bool ok = false;
    if (x.terminal()) {
      for (const Transition& t : wg_.transitions)
        ok = ok || (t.from == i && t.to == j && g_.word_symbol(t.word) == x.left);
    } else {
      for (int k = i + 1; k < j && !ok; ++k) ok = symbol(x.left, i, k) && symbol(x.right, k, j);
    }
    return rule_memo_[key] = ok;
  }

  bool symbol(Symbol s, int i, int j) {
    for (std::size_t r = 0; r < g_.rules.size(); ++r) {
      Symbol lhs = g_.rules[r].lhs;
      if ((lhs == s || g_.category[lhs] == s) && rule(static_cast<int>(r), i, j)) return true;
    }
    return false;
  }

 private:
  const AcnfGrammar& g_;
  const WordGraph& wg_;
  std::map<std::tuple<int, int, int>, bool> rule_memo_;
};

WordGraph random_graph(Rng& rng, const std::vector<std::string>& alphabet, int max_states) {
  WordGraph wg;
  wg.num_states = dop::testing::uniform(rng, 2, max_states);
  for (int s = 0; s + 1 < wg.num_states; ++s)
    for (int t = s + 1; t < wg.num_states; ++t)
      for (const auto& w : alphabet)
        if (dop::testing::unit(rng) < 0.4)
          wg.transitions.push_back({s, t, w, std::log(0.1 + 0.9 * dop::testing::unit(rng))});
  return wg;
}

}  // namespace

TEST_SUITE("chart") {

TEST_CASE("sentence recognition on a tiny grammar") {
  Stsg g = make_stsg("S", {{T("(S (A) (B))"), 1.0}, {T("(A a)"), 1.0}, {T("(B b)"), 1.0}});
  AcnfGrammar a = to_acnf(g);
  Chart c = cky_sentence(a, {"a", "b"});
  CHECK(c.recognized(a));
  CHECK(has_final(a, c.at(0, 2), "S", "A", "B"));
  Chart d = cky_sentence(a, {"b", "a"});
  CHECK_FALSE(d.recognized(a));
  CHECK(d.at(0, 2).finals.empty());
  CHECK_THROWS_AS(cky_sentence(a, {"a", "z"}), Error);
  CHECK_THROWS_AS(cky_sentence(a, {}), Error);
}

TEST_CASE("right-linearized items for a flat tree") {
  Stsg g = make_stsg("S", {{T("(S (A) (B) (C))"), 1.0}, {T("(A a)"), 1.0}, {T("(B b)"), 1.0},
                           {T("(C c)"), 1.0}});
  AcnfGrammar a = to_acnf(g);
  Chart c = cky_sentence(a, {"a", "b", "c"});
  CHECK(has_final(a, c.at(0, 3), "S", "A", "S′"));
  CHECK(has_final(a, c.at(1, 3), "S′", "B", "C"));
}

TEST_CASE("word-graph items cover every path") {
  Stsg g = make_stsg("S", {{T("(S (A) (B))"), 0.5}, {T("(S c)"), 0.5}, {T("(A a)"), 1.0}, {T("(B b)"), 1.0}});
  AcnfGrammar a = to_acnf(g);
  WordGraph wg;
  wg.num_states = 3;
  wg.transitions = {{0, 1, "a", 0.0}, {1, 2, "b", 0.0}, {0, 2, "c", 0.0}};
  Chart c = cky_wordgraph(a, wg);
  CHECK(has_final(a, c.at(0, 2), "S", "A", "B"));
  CHECK(has_final(a, c.at(0, 2), "S", "c"));

  WordGraph gap;
  gap.num_states = 4;
  gap.transitions = {{0, 1, "a", 0.0}, {2, 3, "b", 0.0}};
  Chart d = cky_wordgraph(a, gap);
  CHECK_FALSE(d.recognized(a));
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      if (!((i == 0 && j == 1) || (i == 2 && j == 3))) CHECK(d.at(i, j).finals.empty());
}

TEST_CASE("CKY invariant against a span derivability oracle") {
  Rng rng(81);
  dop::testing::StsgShape chains;
  chains.unary_chains = true;
  for (int i = 0; i < 60; ++i) {
    Stsg g = dop::testing::random_stsg(rng, i % 2 ? chains : dop::testing::StsgShape{});
    AcnfGrammar a = to_acnf(g);
    std::vector<std::string> alphabet(g.terminals.begin(), g.terminals.end());
    WordGraph wg = random_graph(rng, alphabet, 6);
    Chart c = cky_wordgraph(a, wg);
    SpanOracle o(a, wg);
    for (int x = 0; x < c.n; ++x)
      for (int y = x + 1; y <= c.n; ++y) {
        const ChartEntry& e = c.at(x, y);
        std::set<int> seen;
        for (std::size_t r = 0; r < a.rules.size(); ++r) {
          int rr = static_cast<int>(r);
          CHECK(e.has_final(rr) == o.rule(rr, x, y));
          if (!a.rules[r].terminal()) CHECK(e.has_partial(rr) == o.symbol(a.rules[r].left, x, y));
        }
        for (int r : e.finals) CHECK(seen.insert(2 * r + 1).second);
        for (int r : e.partials) CHECK(seen.insert(2 * r).second);
      }
  }
}

TEST_CASE("linear word-graphs give the sentence chart") {
  Rng rng(83);
  for (int i = 0; i < 40; ++i) {
    Stsg g = dop::testing::random_stsg(rng);
    AcnfGrammar a = to_acnf(g);
    std::vector<std::string> alphabet(g.terminals.begin(), g.terminals.end());
    for (const auto& w : dop::testing::all_strings(alphabet, 3)) {
      Chart s = cky_sentence(a, w);
      Chart l = cky_wordgraph(a, linear_graph(w));
      REQUIRE(s.entries.size() == l.entries.size());
      for (std::size_t k = 0; k < s.entries.size(); ++k) {
        CHECK(s.entries[k].finals == l.entries[k].finals);
        CHECK(s.entries[k].partials == l.entries[k].partials);
        CHECK(s.entries[k].added_by == l.entries[k].added_by);
      }
    }
  }
}

TEST_CASE("SCFG Viterbi examples") {
  Stsg g = make_stsg("S", {{T("(S (A) (B))"), 1.0}, {T("(A a)"), 1.0}, {T("(B b)"), 1.0}});
  auto v = scfg_viterbi(scfg_of(g), std::vector<std::string>{"a", "b"});
  REQUIRE(v);
  CHECK(write_bracketed(v->parse) == "(S (A a) (B b))");
  CHECK(v->log_prob == 0.0);
  CHECK_FALSE(scfg_viterbi(scfg_of(g), std::vector<std::string>{"b", "a"}));

  Stsg two = make_stsg("S", {{T("(S (A) (B))"), 0.7}, {T("(S (C) (D))"), 0.3}, {T("(A a)"), 1.0},
                             {T("(B b)"), 1.0}, {T("(C a)"), 1.0}, {T("(D b)"), 1.0}});
  auto w = scfg_viterbi(scfg_of(two), std::vector<std::string>{"a", "b"});
  REQUIRE(w);
  CHECK(write_bracketed(w->parse) == "(S (A a) (B b))");
  CHECK(dop::testing::close(w->log_prob, std::log(0.7)));

  Stsg lex = make_stsg("S", {{T("(S (A) (B))"), 0.7}, {T("(S (A) (C))"), 0.3}, {T("(A a)"), 1.0},
                             {T("(B b)"), 1.0}, {T("(C c)"), 1.0}});
  WordGraph wg;
  wg.num_states = 3;
  wg.transitions = {{0, 1, "a", 0.0}, {1, 2, "b", std::log(0.2)}, {1, 2, "c", std::log(0.8)}};
  auto x = scfg_viterbi(scfg_of(lex), wg);
  REQUIRE(x);
  CHECK(x->sentence == std::vector<std::string>{"a", "c"});
  CHECK(dop::testing::close(x->log_prob, std::log(0.24)));
}

TEST_CASE("SCFG Viterbi equals the brute-force maximum") {
  Rng rng(87);
  dop::testing::StsgShape shape;
  shape.max_depth = 1;
  shape.unary_chains = true;
  int compared = 0;
  for (int i = 0; i < 200; ++i) {
    Stsg g = dop::testing::random_stsg(rng, shape);
    Scfg s = scfg_of(g);
    std::vector<std::string> alphabet(g.terminals.begin(), g.terminals.end());
    WordGraph wg = random_graph(rng, alphabet, 5);
    std::vector<EnumeratedDerivation> ds;
    try {
      ds = enumerate_derivations(g, wg);
    } catch (const DerivationOverflow&) {
      continue;
    }
    auto v = scfg_viterbi(s, wg);
    CHECK(v.has_value() == !ds.empty());
    if (!v) continue;
    ++compared;
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& d : ds) best = std::max(best, d.log_prob);
    CHECK(dop::testing::close(v->log_prob, best));
  }
  CHECK(compared > 30);
}

TEST_CASE("single-parse charts") {
  Stsg g = make_stsg("S", {{T("(S (A) (B))"), 1.0}, {T("(A a)"), 1.0}, {T("(B b)"), 1.0}});
  AcnfGrammar a = to_acnf(g);
  Chart c = tree_to_chart(a, T("(S (A a) (B b))"));
  std::size_t finals = 0;
  for (const auto& e : c.entries) finals += e.finals.size();
  CHECK(finals == 3);
  CHECK_THROWS_AS(tree_to_chart(a, T("(S (B b) (A a))")), Error);

  Stsg flat = make_stsg("S", {{T("(S (A) (B) (C))"), 1.0}, {T("(A a)"), 1.0}, {T("(B b)"), 1.0},
                              {T("(C c)"), 1.0}});
  AcnfGrammar f = to_acnf(flat);
  Chart d = tree_to_chart(f, T("(S (A a) (B b) (C c))"));
  CHECK(has_final(f, d.at(0, 3), "S", "A", "S′"));
  CHECK(has_final(f, d.at(1, 3), "S′", "B", "C"));
  CHECK(d.at(0, 2).finals.empty());
}

TEST_CASE("word-graph file format") {
  std::istringstream in("WG 3\nTRANS 0 1 a 0.5\nTRANS 0 1 b 0.5\nTRANS 1 2 c 1\n# next\nWG 2\nTRANS 0 1 a 1\n");
  auto gs = read_word_graphs(in);
  REQUIRE(gs.size() == 2);
  CHECK(gs[0].num_states == 3);
  CHECK(gs[0].transitions.size() == 3);
  CHECK(unnormalized_states(gs[0]).empty());
  std::ostringstream out;
  write_word_graph(out, gs[0]);
  std::istringstream back(out.str());
  auto again = read_word_graphs(back);
  REQUIRE(again.size() == 1);
  CHECK(again[0].transitions.size() == 3);
  CHECK(dop::testing::close(again[0].transitions[0].log_prob, std::log(0.5)));

  std::istringstream cyclic("WG 3\nTRANS 1 0 a 1\n");
  CHECK_THROWS_AS(read_word_graphs(cyclic), Error);
  std::istringstream zero("WG 2\nTRANS 0 1 a 0\n");
  CHECK_THROWS_AS(read_word_graphs(zero), Error);
  std::istringstream loose("WG 3\nTRANS 0 1 a 0.3\nTRANS 1 2 a 1\n");
  CHECK(unnormalized_states(read_word_graphs(loose)[0]) == std::vector<int>{0});
}

}
