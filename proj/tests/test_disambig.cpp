#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "dop/disambig.hpp"
#include "support.hpp"

using namespace dop;
using dop::testing::Rng;

namespace {

Tree T(const char* s) { return parse_bracketed(s); }

Stsg tie_grammar() {
  return make_stsg("S", {{T("(S (A a) (B))"), 0.5}, {T("(S (A) (B))"), 0.5}, {T("(A a)"), 1.0},
                         {T("(B b)"), 1.0}});
}

double oracle_max(const std::vector<EnumeratedDerivation>& ds) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& d : ds) m = std::max(m, d.log_prob);
  return m;
}

double oracle_sum(const std::vector<EnumeratedDerivation>& ds) {
  double s = -std::numeric_limits<double>::infinity();
  for (const auto& d : ds) s = log_add(s, d.log_prob);
  return s;
}

}  // namespace

TEST_SUITE("disambig") {

TEST_CASE("derivation-tree recognition") {
  Stsg g = make_stsg("S", {{T("(S (A a) (B b))"), 1.0}});
  DecoratedTree dt{g.elems[0].tree, {}};
  for (std::size_t k = 0; k < dt.tree.size(); ++k) dt.address.push_back(static_cast<int>(k));
  CHECK(recognize_derivation_tree(g, dt));

  Stsg h = make_stsg("S", {{T("(S (A) (B))"), 1.0}, {T("(A a)"), 1.0}, {T("(B b)"), 1.0}});
  Tree parse = T("(S (A a) (B b))");
  DecoratedTree good{parse, std::vector<Address>(parse.size(), kNoAddress)};
  NodeId s = parse.root(), a = parse[s].children[0], b = parse[s].children[1];
  good.address[s] = h.address_of(0, 0);
  good.address[a] = h.address_of(1, 0);
  good.address[b] = h.address_of(2, 0);
  CHECK(recognize_derivation_tree(h, good));
  DecoratedTree bad = good;
  std::swap(bad.address[a], bad.address[b]);
  CHECK_FALSE(recognize_derivation_tree(h, bad));
  DecoratedTree wrong_root = good;
  wrong_root.address[s] = h.address_of(1, 0);
  CHECK_FALSE(recognize_derivation_tree(h, wrong_root));
}

TEST_CASE("MPD on the unit and tie grammars") {
  Stsg u = make_stsg("S", {{T("(S (A) (B))"), 1.0}, {T("(A a)"), 1.0}, {T("(B b)"), 1.0}});
  AcnfGrammar gu = to_acnf(u);
  auto d = mpd(gu, cky_sentence(gu, {"a", "b"}));
  REQUIRE(d);
  CHECK(d->log_prob == 0.0);
  CHECK(d->trees == std::vector<int>{0, 1, 2});
  CHECK(write_bracketed(d->parse) == "(S (A a) (B b))");

  Stsg t = tie_grammar();
  AcnfGrammar gt = to_acnf(t);
  Chart c = cky_sentence(gt, {"a", "b"});
  auto e = mpd(gt, c);
  REQUIRE(e);
  CHECK(dop::testing::close(e->log_prob, std::log(0.5)));
  CHECK(e->trees == std::vector<int>{0, 3});
  CHECK(recognize_derivation_tree(t, e->derivation_tree));
  CHECK(dop::testing::close(input_probability(gt, c), 0.0));
  CHECK(dop::testing::close(parse_probability(gt, T("(S (A a) (B b))")), 0.0));
  CHECK(parse_probability(gt, T("(S (B b) (A a))")) == -std::numeric_limits<double>::infinity());
  CHECK(input_probability(gt, cky_sentence(gt, {"b", "a"})) == -std::numeric_limits<double>::infinity());
  CHECK_FALSE(mpd(gt, cky_sentence(gt, {"b", "a"})));
}

TEST_CASE("enumeration oracle counts and limits") {
  Stsg t = tie_grammar();
  auto ds = enumerate_derivations(t, std::vector<std::string>{"a", "b"});
  REQUIRE(ds.size() == 2);
  for (const auto& d : ds) {
    CHECK(dop::testing::close(d.log_prob, std::log(0.5)));
    CHECK(recognize_derivation_tree(t, d.tree));
  }
  Stsg u = make_stsg("S", {{T("(S (A a) (B b))"), 1.0}});
  CHECK(enumerate_derivations(u, std::vector<std::string>{"a", "b"}).size() == 1);
  std::vector<std::string> longer(20, "a");
  CHECK_THROWS_AS(enumerate_derivations(u, longer), DerivationOverflow);

  auto br = brute_mpp_mps(t, linear_graph({"a", "b"}));
  REQUIRE(br);
  CHECK(write_bracketed(br->mpp) == "(S (A a) (B b))");
  CHECK(dop::testing::close(br->mpp_log_prob, 0.0));
  CHECK(br->mps == std::vector<std::string>{"a", "b"});
  CHECK(dop::testing::close(br->mps_log_prob, 0.0));
}

TEST_CASE("MPS ties on a symmetric word-graph are broken lexicographically") {
  Stsg g = make_stsg("S", {{T("(S (L) (L))"), 1.0}, {T("(L T)"), 0.5}, {T("(L F)"), 0.5}});
  WordGraph wg;
  wg.num_states = 3;
  for (int i = 0; i < 2; ++i)
    for (const char* w : {"T", "F"}) wg.transitions.push_back({i, i + 1, w, 0.0});
  auto br = brute_mpp_mps(g, wg);
  REQUIRE(br);
  CHECK(br->mps == std::vector<std::string>{"F", "F"});
  CHECK(dop::testing::close(br->mps_log_prob, std::log(0.25)));
}

TEST_CASE("optimized MPD and input probability agree with the oracle") {
  Rng rng(2024);
  int grammars = 0, inputs = 0;
  dop::testing::StsgShape chains;
  chains.unary_chains = true;
  while (grammars < 120) {
    Stsg g = dop::testing::random_stsg(rng, grammars % 2 ? chains : dop::testing::StsgShape{});
    AcnfGrammar a = to_acnf(g);
    ++grammars;
    std::vector<std::string> alphabet(g.terminals.begin(), g.terminals.end());
    for (const auto& s : dop::testing::all_strings(alphabet, 4)) {
      std::vector<EnumeratedDerivation> ds;
      try {
        ds = enumerate_derivations(g, s);
      } catch (const DerivationOverflow&) {
        continue;
      }
      Chart c = cky_sentence(a, s);
      auto d = mpd(a, c);
      CHECK(d.has_value() == !ds.empty());
      if (ds.empty()) continue;
      ++inputs;
      CHECK(dop::testing::close(d->log_prob, oracle_max(ds)));
      CHECK(recognize_derivation_tree(g, d->derivation_tree));
      CHECK(dop::testing::close(d->log_prob, derivation_log_prob(g, d->trees)));
      auto n = mpd_naive(a, c);
      REQUIRE(n);
      CHECK(n->log_prob == d->log_prob);
      CHECK(n->trees == d->trees);
      CHECK(dop::testing::close(input_probability(a, c), oracle_sum(ds)));
      std::map<std::string, double> per_parse;
      for (const auto& x : ds) {
        auto key = write_bracketed(x.parse);
        auto it = per_parse.emplace(key, -std::numeric_limits<double>::infinity()).first;
        it->second = log_add(it->second, x.log_prob);
      }
      for (const auto& [key, p] : per_parse) CHECK(dop::testing::close(parse_probability(a, T(key.c_str())), p));
    }
  }
  CHECK(inputs > 100);
}

TEST_CASE("MPD on depth-1 grammars equals SCFG Viterbi") {
  Rng rng(77);
  dop::testing::StsgShape shape;
  shape.max_depth = 1;
  int compared = 0;
  for (int i = 0; i < 40; ++i) {
    Stsg g = dop::testing::random_stsg(rng, shape);
    AcnfGrammar a = to_acnf(g);
    Scfg s = scfg_of(g);
    std::vector<std::string> alphabet(g.terminals.begin(), g.terminals.end());
    for (const auto& w : dop::testing::all_strings(alphabet, 4)) {
      auto d = mpd(a, cky_sentence(a, w));
      auto v = scfg_viterbi(s, w);
      CHECK(d.has_value() == v.has_value());
      if (!d || !v) continue;
      ++compared;
      CHECK(d->log_prob == v->log_prob);
      CHECK(write_bracketed(d->parse) == write_bracketed(v->parse));
    }
  }
  CHECK(compared > 20);
}

TEST_CASE("MPiD agrees with brute force over word-graphs") {
  Rng rng(99);
  int checked = 0;
  for (int i = 0; i < 60; ++i) {
    Stsg g = dop::testing::random_stsg(rng);
    AcnfGrammar a = to_acnf(g);
    std::vector<std::string> alphabet(g.terminals.begin(), g.terminals.end());
    WordGraph wg;
    wg.num_states = dop::testing::uniform(rng, 2, 5);
    for (int s = 0; s + 1 < wg.num_states; ++s)
      for (int t = s + 1; t < wg.num_states; ++t)
        for (const auto& w : alphabet)
          if (dop::testing::unit(rng) < 0.5)
            wg.transitions.push_back({s, t, w, std::log(0.1 + 0.9 * dop::testing::unit(rng))});
    if (wg.transitions.empty()) continue;
    std::vector<EnumeratedDerivation> ds;
    try {
      ds = enumerate_derivations(g, wg);
    } catch (const DerivationOverflow&) {
      continue;
    }
    auto d = mpid(a, wg);
    CHECK(d.has_value() == !ds.empty());
    if (!d || ds.empty()) continue;
    ++checked;
    CHECK(dop::testing::close(d->log_prob, oracle_max(ds)));
    CHECK(recognize_derivation_tree(g, d->derivation_tree));
    CHECK(dop::testing::close(input_probability(a, cky_wordgraph(a, wg)), oracle_sum(ds)));
  }
  CHECK(checked > 10);
}

TEST_CASE("MPiD on a linear unit graph reproduces sentence MPD") {
  Rng rng(5);
  for (int i = 0; i < 30; ++i) {
    Stsg g = dop::testing::random_stsg(rng);
    AcnfGrammar a = to_acnf(g);
    std::vector<std::string> alphabet(g.terminals.begin(), g.terminals.end());
    for (const auto& w : dop::testing::all_strings(alphabet, 3)) {
      auto d = mpd(a, cky_sentence(a, w));
      auto m = mpid(a, linear_graph(w));
      REQUIRE(d.has_value() == m.has_value());
      if (!d) continue;
      CHECK(d->log_prob == m->log_prob);
      CHECK(d->trees == m->trees);
      CHECK(m->sentence == w);
    }
  }
}

TEST_CASE("two-path word-graph where path weights reverse the grammar preference") {
  Stsg g = make_stsg("S", {{T("(S a)"), 0.8}, {T("(S b)"), 0.2}});
  AcnfGrammar a = to_acnf(g);
  WordGraph wg;
  wg.num_states = 2;
  wg.transitions = {{0, 1, "a", std::log(0.1)}, {0, 1, "b", std::log(0.9)}};
  auto d = mpid(a, wg);
  REQUIRE(d);
  CHECK(d->sentence == std::vector<std::string>{"b"});
  CHECK(dop::testing::close(d->log_prob, std::log(0.18)));
}

TEST_CASE("optimized phase two grows linearly with duplicated trees") {
  Rng rng(8);
  Stsg base = make_stsg("S", {{T("(S (A) (B))"), 0.5}, {T("(S (A a) (B))"), 0.5}, {T("(A a)"), 1.0},
                              {T("(B (A) (B) b)"), 0.5}, {T("(B b)"), 0.5}});
  auto duplicate = [](const Stsg& g, int k) {
    std::vector<std::pair<Tree, double>> pairs;
    for (const auto& e : g.elems)
      for (int r = 0; r < k; ++r) pairs.emplace_back(e.tree, std::exp(e.log_prob) / k);
    return make_stsg(g.start, pairs);
  };
  std::vector<std::string> w{"a", "a", "a", "b", "b", "b"};
  std::vector<double> opt, naive;
  for (int k : {1, 2, 4}) {
    AcnfGrammar a = to_acnf(duplicate(base, k));
    Chart c = cky_sentence(a, w);
    ParseStats s1, s2;
    auto d1 = mpd(a, c, &s1);
    auto d2 = mpd_naive(a, c, &s2);
    REQUIRE(d1);
    REQUIRE(d2);
    CHECK(dop::testing::close(d1->log_prob, d2->log_prob));
    opt.push_back(static_cast<double>(s1.viability_checks));
    naive.push_back(static_cast<double>(s2.viability_checks));
  }
  CHECK(opt[1] / opt[0] <= 2.2);
  CHECK(opt[2] / opt[0] <= 4.8);
  CHECK(naive[1] / naive[0] >= 3.5);
  CHECK(naive[2] / naive[0] >= 12.0);
}

}
