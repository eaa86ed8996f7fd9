// dopcli: training, specialization, parsing, evaluation and reduction
// generation over bracketed tree-banks and STSG files.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "dop/disambig.hpp"
#include "dop/eval.hpp"
#include "dop/npc.hpp"
#include "dop/specialize.hpp"

using namespace dop;

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  return out;
}

// Writes to the named file, or stdout for "-".
template <class F>
void emit(const std::string& path, F&& f) {
  if (path.empty() || path == "-") {
    f(std::cout);
    return;
  }
  std::ofstream out = open_out(path);
  f(out);
}

Treebank load_treebank(const std::string& path) {
  std::ifstream in = open_in(path);
  return read_treebank(in);
}

Stsg load_stsg(const std::string& path) {
  std::ifstream in = open_in(path);
  return read_stsg(in);
}

struct Projection {
  int d = 4, n = 2, l = 7, L = 3;
  bool unknowns = false;

  void add(CLI::App* app) {
    app->add_option("-d", d, "maximum depth of elementary trees")->capture_default_str();
    app->add_option("-n", n, "maximum number of substitution sites")->capture_default_str();
    app->add_option("-l", l, "maximum number of terminals")->capture_default_str();
    app->add_option("-L", L, "maximum run of consecutive terminals")->capture_default_str();
  }
  ProjectionParams params() const {
    ProjectionParams p;
    p.max_depth = d;
    p.max_subsites = n;
    p.max_terminals = l;
    p.max_terminal_run = L;
    return p;
  }
};

struct Inputs {
  std::vector<WordGraph> graphs;
  bool linear = true;
};

Inputs load_inputs(const std::string& path, bool word_graphs) {
  std::ifstream in = open_in(path);
  Inputs out;
  if (word_graphs) {
    out.graphs = read_word_graphs(in);
    out.linear = false;
    return out;
  }
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<std::string> words;
    for (std::string w; ls >> w;) words.push_back(w);
    if (words.empty() || words[0][0] == '#') continue;
    out.graphs.push_back(linear_graph(words));
  }
  return out;
}

// Runs f over every input on `jobs` threads and returns results in order.
std::vector<std::string> batch(std::size_t count, int jobs,
                               const std::function<std::string(std::size_t)>& f) {
  std::vector<std::string> out(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        out[i] = f(i);
      } catch (const std::exception& e) {
        std::cerr << "input " << i + 1 << ": " << e.what() << '\n';
        out[i] = "NOPARSE";
      }
    }
  };
  int n = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
  std::vector<std::thread> pool;
  for (int k = 1; k < n; ++k) pool.emplace_back(work);
  work();
  for (std::thread& t : pool) t.join();
  return out;
}

std::string format_log(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_viterbi(const std::optional<ViterbiResult>& v) {
  if (!v) return "NOPARSE";
  std::string out = format_log(v->log_prob) + '\t' + write_bracketed(v->parse) + '\t';
  for (std::size_t i = 0; i < v->rules.size(); ++i) out += (i ? "," : "") + std::to_string(v->rules[i]);
  return out;
}

// A results line is NOPARSE, a bare tree, or tab-separated fields whose
// second field is the tree and optional fourth field the chosen sentence.
struct ResultLine {
  std::optional<Tree> tree;
  std::optional<std::vector<std::string>> sentence;
};

std::vector<ResultLine> read_results(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<ResultLine> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    ResultLine r;
    if (line.rfind("NOPARSE", 0) == 0) {
      out.push_back(r);
      continue;
    }
    std::vector<std::string> fields;
    std::istringstream ls(line);
    for (std::string f; std::getline(ls, f, '\t');) fields.push_back(f);
    const std::string& tree = line[0] == '(' ? fields[0] : (fields.size() > 1 ? fields[1] : "");
    if (tree.empty()) throw Error(path + ":" + std::to_string(lineno) + ": no tree field");
    r.tree = parse_bracketed(tree);
    if (fields.size() > 3 && line[0] != '(') {
      std::istringstream ws(fields[3]);
      std::vector<std::string> words;
      for (std::string w; ws >> w;) words.push_back(w);
      r.sentence = words;
    }
    out.push_back(std::move(r));
  }
  return out;
}

// Samples sentences by expanding elementary trees top-down.
std::vector<std::vector<std::string>> sample_sentences(const Stsg& g, int count, int max_len,
                                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::map<std::string, std::vector<int>> by_root;
  for (const ElementaryTree& e : g.elems) by_root[e.tree[e.tree.root()].label].push_back(e.id);
  std::vector<std::vector<std::string>> out;
  std::set<std::vector<std::string>> seen;
  for (int attempt = 0; attempt < count * 50 && static_cast<int>(out.size()) < count; ++attempt) {
    std::vector<std::string> words;
    bool ok = true;
    std::function<void(const std::string&, int)> expand = [&](const std::string& sym, int depth) {
      auto it = by_root.find(sym);
      if (!ok || depth > 12 || it == by_root.end()) {
        ok = false;
        return;
      }
      std::vector<double> w;
      for (int id : it->second) w.push_back(std::exp(g.elems[id].log_prob));
      std::discrete_distribution<int> pick(w.begin(), w.end());
      const Tree& t = g.elems[it->second[pick(rng)]].tree;
      for (NodeId leaf : t.leaves()) {
        if (t.is_terminal(leaf)) words.push_back(t[leaf].label);
        else expand(t[leaf].label, depth + 1);
        if (static_cast<int>(words.size()) > max_len) ok = false;
      }
    };
    expand(g.start, 0);
    if (ok && !words.empty() && seen.insert(words).second) out.push_back(words);
  }
  return out;
}

int cmd_verify(const Stsg& g, const Inputs& in, double tol, std::ostream& out) {
  AcnfGrammar a = to_acnf(g);
  EnumerationLimits limits;
  int mismatches = 0, checked = 0, skipped = 0;
  for (std::size_t i = 0; i < in.graphs.size(); ++i) {
    const WordGraph& wg = in.graphs[i];
    std::vector<EnumeratedDerivation> all;
    try {
      all = enumerate_derivations(g, wg, limits);
    } catch (const Error& e) {
      out << "input " << i + 1 << " SKIP " << e.what() << '\n';
      ++skipped;
      continue;
    }
    Chart chart = cky_wordgraph(a, wg);
    std::optional<Derivation> best = mpd(a, chart);
    double brute_max = -INFINITY, brute_sum = -INFINITY;
    for (const EnumeratedDerivation& d : all) {
      brute_max = std::max(brute_max, d.log_prob);
      brute_sum = log_add(brute_sum, d.log_prob);
    }
    double opt_sum = input_probability(a, chart);
    bool ok = (best.has_value() == !all.empty());
    if (ok && best) {
      ok = std::fabs(best->log_prob - brute_max) <= tol &&
           std::fabs(opt_sum - brute_sum) <= tol &&
           recognize_derivation_tree(g, best->derivation_tree);
    }
    ++checked;
    if (!ok) ++mismatches;
    out << "input " << i + 1 << (ok ? " OK" : " MISMATCH") << " derivations=" << all.size()
        << " mpd=" << (best ? format_log(best->log_prob) : "-inf")
        << " brute=" << format_log(brute_max) << " sum=" << format_log(opt_sum)
        << " brute_sum=" << format_log(brute_sum) << '\n';
  }
  out << "checked=" << checked << " skipped=" << skipped << " mismatches=" << mismatches << '\n';
  return mismatches == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-oriented parsing toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string treebank_path, out_path, grammar_path, input_path, marked_path, tsg_out;
  std::string gold_path, test_path, formula_path, out_dir, kind = "all", mode = "mpd";
  std::string tsg_path, sdop_path, dop_path;
  bool word_graphs = false, kv = false, completion = true;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::uint64_t seed = 1;
  int random_inputs = 0, max_len = 5;
  double tol = 1e-9;
  Projection proj;
  LearnerConfig learner;
  double coverage = -1.0;

  auto* project = app.add_subcommand("project", "project a DOP STSG from a tree-bank");
  project->add_option("treebank", treebank_path, "bracketed tree-bank")->required();
  project->add_option("-o,--out", out_path, "grammar file (default stdout)");
  project->add_flag("--add-one-unknowns", proj.unknowns, "add POS -> UNKNOWN trees with Add-One counts");
  proj.add(project);

  auto* sdop = app.add_subcommand("sdop", "project an SDOP STSG from a marked tree-bank");
  sdop->add_option("marked", marked_path, "marked tree-bank")->required();
  sdop->add_option("-o,--out", out_path, "grammar file (default stdout)");
  proj.add(sdop);

  auto* specialize = app.add_subcommand("specialize", "learn cut marks and a specialized TSG");
  specialize->add_option("treebank", treebank_path, "bracketed tree-bank")->required();
  specialize->add_option("--marked-out", marked_path, "marked tree-bank output")->required();
  specialize->add_option("--tsg-out", tsg_out, "specialized TSG output")->required();
  specialize->add_option("--delta", learner.delta, "constituency probability threshold")
      ->capture_default_str();
  specialize->add_option("--phi", learner.phi, "SSF frequency threshold")->capture_default_str();
  specialize->add_option("--max-ssf-len", learner.max_ssf_len, "longest SSF considered")
      ->capture_default_str();
  specialize->add_option("--coverage", coverage, "coverage upper bound in [0,1]");
  specialize->add_flag("--backoff", learner.use_backoff, "context back-off measure");
  specialize->add_flag("--eqclass", learner.use_eq_class, "one-symbol-repetition classes");
  specialize->add_flag("!--no-completion", completion, "skip ambiguity-set completion");

  auto* parse = app.add_subcommand("parse", "parse sentences or word-graphs");
  parse->add_option("grammar", grammar_path, "STSG file")->required();
  parse->add_option("input", input_path, "sentences, one per line, or word-graphs")->required();
  parse->add_option("-o,--out", out_path, "results file (default stdout)");
  parse->add_option("--mode", mode, "mpd|prob|mpid|viterbi")
      ->check(CLI::IsMember({"mpd", "prob", "mpid", "viterbi"}))
      ->capture_default_str();
  parse->add_flag("--word-graphs", word_graphs, "input holds word-graphs");
  parse->add_option("--jobs", jobs, "worker threads");

  auto* isdop = app.add_subcommand("isdop-parse", "integrated specialized parsing");
  isdop->add_option("tsg", tsg_path, "specialized TSG file")->required();
  isdop->add_option("sdop", sdop_path, "SDOP STSG file")->required();
  isdop->add_option("dop", dop_path, "DOP STSG file")->required();
  isdop->add_option("input", input_path, "sentences or word-graphs")->required();
  isdop->add_option("-o,--out", out_path, "results file (default stdout)");
  isdop->add_flag("--word-graphs", word_graphs, "input holds word-graphs");
  isdop->add_option("--jobs", jobs, "worker threads");

  auto* eval = app.add_subcommand("eval", "PARSEVAL report for a results file");
  eval->add_option("gold", gold_path, "gold tree-bank")->required();
  eval->add_option("test", test_path, "results file")->required();
  eval->add_flag("--kv", kv, "key=value output");

  auto* reduce = app.add_subcommand("reduce3sat", "build reduction instances from a 3CNF formula");
  reduce->add_option("formula", formula_path, "DIMACS formula")->required();
  reduce->add_option("--out-dir", out_dir, "directory for instance files")->required();
  reduce->add_option("--kind", kind, "MPPWG|MPS|MPP|MPS-SCFG|all")->capture_default_str();

  auto* verify = app.add_subcommand("verify", "compare optimized parsing with brute force");
  verify->add_option("grammar", grammar_path, "STSG file")->required();
  verify->add_option("input", input_path, "sentences or word-graphs");
  verify->add_flag("--word-graphs", word_graphs, "input holds word-graphs");
  verify->add_option("--random", random_inputs, "sample this many sentences instead of reading input");
  verify->add_option("--max-len", max_len, "longest sampled sentence")->capture_default_str();
  verify->add_option("--tolerance", tol, "log-space tolerance")->capture_default_str();

  app.add_option("--seed", seed, "seed for sampled inputs")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*project) {
      Stsg g = project_dop(load_treebank(treebank_path), proj.params(), proj.unknowns);
      for (const Diagnostic& d : validate_stsg(g)) std::cerr << "warning: " << d.message << '\n';
      emit(out_path, [&](std::ostream& o) { write_stsg(o, g); });
    } else if (*sdop) {
      std::ifstream in = open_in(marked_path);
      Stsg g = project_sdop(read_marked_treebank(in), proj.params());
      emit(out_path, [&](std::ostream& o) { write_stsg(o, g); });
    } else if (*specialize) {
      if (coverage >= 0.0) learner.coverage_upper_bound = coverage;
      Specialization sp = sequential_cover(load_treebank(treebank_path), learner);
      if (completion) add_unique(sp.tsg, complete_ambiguity_sets(sp.marked));
      emit(marked_path, [&](std::ostream& o) { write_marked_treebank(o, sp.marked); });
      emit(tsg_out, [&](std::ostream& o) { write_tsg(o, sp.start, sp.tsg); });
      std::cout << "iterations=" << sp.iterations << " learned=" << sp.learned.size()
                << " coverage=" << sp.coverage << " tsg=" << sp.tsg.size() << '\n';
      for (const LearnedSsf& l : sp.learned)
        std::cout << "ssf\t" << l.iteration << '\t' << to_string(l.key) << "\tfreqC=" << l.freq_c
                  << "\tcp=" << l.cp << "\tscore=" << l.score << '\n';
    } else if (*parse) {
      Stsg g = load_stsg(grammar_path);
      Inputs in = load_inputs(input_path, word_graphs);
      std::vector<std::string> lines;
      if (mode == "viterbi") {
        Scfg s = scfg_of(g);
        lines = batch(in.graphs.size(), jobs,
                      [&](std::size_t i) { return format_viterbi(scfg_viterbi(s, in.graphs[i])); });
      } else {
        AcnfGrammar a = to_acnf(g);
        lines = batch(in.graphs.size(), jobs, [&](std::size_t i) {
          Chart c = cky_wordgraph(a, in.graphs[i]);
          if (mode == "prob") {
            double p = input_probability(a, c);
            return std::isinf(p) ? std::string("NOPARSE") : format_log(p);
          }
          return format_derivation(mpd(a, c), mode == "mpid" || !in.linear);
        });
      }
      emit(out_path, [&](std::ostream& o) {
        for (const std::string& l : lines) o << l << '\n';
      });
    } else if (*isdop) {
      std::ifstream tin = open_in(tsg_path);
      std::string start;
      std::vector<Tree> tsg = read_tsg(tin, &start);
      IntegratedParser ip(tsg_as_stsg(start, tsg), load_stsg(sdop_path), load_stsg(dop_path));
      Inputs in = load_inputs(input_path, word_graphs);
      std::vector<std::string> lines = batch(in.graphs.size(), jobs, [&](std::size_t i) {
        IntegratedResult r = ip.parse(in.graphs[i]);
        if (!r.best) return std::string("NOPARSE");
        return format_derivation(r.best, true) + '\t' + dispatch_name(r.used);
      });
      emit(out_path, [&](std::ostream& o) {
        for (const std::string& l : lines) o << l << '\n';
      });
    } else if (*eval) {
      Treebank gold = load_treebank(gold_path);
      std::vector<ResultLine> res = read_results(test_path);
      std::vector<std::optional<Tree>> test;
      std::vector<std::optional<std::vector<std::string>>> chosen;
      bool any_sentence = false;
      for (ResultLine& r : res) {
        test.push_back(std::move(r.tree));
        chosen.push_back(std::move(r.sentence));
        any_sentence = any_sentence || chosen.back().has_value();
      }
      if (!any_sentence) chosen.clear();
      EvalReport rep = parseval(gold.trees, test, chosen);
      if (kv) write_report_kv(std::cout, rep);
      else write_report(std::cout, rep);
    } else if (*reduce) {
      std::ifstream in = open_in(formula_path);
      Cnf3Formula f = read_dimacs(in);
      std::vector<ProblemKind> kinds;
      if (kind == "all")
        kinds = {ProblemKind::mppwg, ProblemKind::mps, ProblemKind::mpp, ProblemKind::mps_scfg};
      else
        kinds = {parse_kind(kind)};
      std::filesystem::create_directories(out_dir);
      for (ProblemKind k : kinds) {
        ReductionInstance inst = build_instance(f, k);
        std::string base = out_dir + "/" + kind_name(k);
        {
          std::ofstream o = open_out(base + ".stsg");
          write_stsg(o, inst.stsg);
        }
        if (k == ProblemKind::mpp) {
          std::ofstream o = open_out(base + ".sent");
          for (std::size_t i = 0; i < inst.sentence.size(); ++i) o << (i ? " " : "") << inst.sentence[i];
          o << '\n';
        } else {
          std::ofstream o = open_out(base + ".wg");
          write_word_graph(o, inst.word_graph);
        }
        std::ofstream o = open_out(base + ".manifest");
        write_manifest(o, inst);
        write_manifest(std::cout, inst);
      }
    } else if (*verify) {
      Stsg g = load_stsg(grammar_path);
      Inputs in;
      if (random_inputs > 0) {
        for (auto& s : sample_sentences(g, random_inputs, max_len, seed)) in.graphs.push_back(linear_graph(s));
      } else if (!input_path.empty()) {
        in = load_inputs(input_path, word_graphs);
      } else {
        throw Error("verify needs an input file or --random");
      }
      return cmd_verify(g, in, tol, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
