#include "dop/eval.hpp"

#include <cstdio>
#include <functional>
#include <ostream>

namespace dop {

namespace {

template <typename F>
void walk_brackets(const Tree& t, F&& emit) {
  int next = 0;
  std::function<std::pair<int, int>(NodeId)> go = [&](NodeId n) -> std::pair<int, int> {
    if (t.is_leaf(n)) {
      if (!t.is_terminal(n)) throw Error("evaluated trees must have terminal frontiers");
      ++next;
      return {next - 1, next};
    }
    int lo = -1, hi = -1;
    for (NodeId c : t[n].children) {
      auto [a, b] = go(c);
      if (lo < 0) lo = a;
      hi = b;
    }
    emit(t[n].label, lo, hi);
    return {lo, hi};
  };
  if (!t.empty()) go(t.root());
}

double ratio(std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / b; }

}  // namespace

std::set<LabeledBracket> labeled_brackets(const Tree& t) {
  std::set<LabeledBracket> out;
  walk_brackets(t, [&](const std::string& l, int i, int j) { out.emplace(l, i, j); });
  return out;
}

std::set<Bracket> unlabeled_brackets(const Tree& t) {
  std::set<Bracket> out;
  walk_brackets(t, [&](const std::string&, int i, int j) { out.emplace(i, j); });
  return out;
}

bool crossing(const Bracket& a, const Bracket& b) {
  auto [h, j] = a;
  auto [k, l] = b;
  return (h < k && k < j && j < l) || (k < h && h < l && l < j);
}

std::size_t count_crossing(const std::set<Bracket>& u, const std::set<Bracket>& v) {
  std::size_t n = 0;
  for (const Bracket& a : u)
    for (const Bracket& b : v)
      if (crossing(a, b)) {
        ++n;
        break;
      }
  return n;
}

double EvalReport::recognized() const { return ratio(recognized_items, items); }
double EvalReport::exact_match() const { return ratio(exact, recognized_items); }
double EvalReport::labeled_recall() const { return ratio(labeled_match, labeled_gold); }
double EvalReport::labeled_precision() const { return ratio(labeled_match, labeled_test); }
double EvalReport::bracket_recall() const { return ratio(bracket_match, bracket_gold); }
double EvalReport::bracket_precision() const { return ratio(bracket_match, bracket_test); }
double EvalReport::ncb_recall() const { return ratio(non_crossing, bracket_gold); }
double EvalReport::ncb_precision() const { return ratio(non_crossing, bracket_test); }
double EvalReport::zero_crossing() const { return ratio(zero_crossing_items, recognized_items); }
double EvalReport::mean_length() const { return ratio(total_length, items); }
double EvalReport::sentence_match() const { return ratio(sentence_matches, sentence_items); }

EvalReport parseval(const std::vector<Tree>& gold, const std::vector<std::optional<Tree>>& test,
                    const std::vector<std::optional<std::vector<std::string>>>& chosen) {
  if (gold.size() != test.size()) throw Error("gold and test sequences differ in length");
  if (!chosen.empty() && chosen.size() != gold.size())
    throw Error("chosen sentences and gold sequences differ in length");
  EvalReport r;
  r.items = gold.size();
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const Tree& g = gold[i];
    std::vector<std::string> words = g.words();
    r.total_length += words.size();
    if (!chosen.empty()) {
      ++r.sentence_items;
      if (chosen[i] && *chosen[i] == words) ++r.sentence_matches;
    }
    auto glab = labeled_brackets(g);
    auto gun = unlabeled_brackets(g);
    r.labeled_gold += glab.size();
    r.bracket_gold += gun.size();
    if (!test[i]) continue;
    const Tree& o = *test[i];
    if (o.words().size() != words.size())
      throw Error("item " + std::to_string(i + 1) + ": test frontier length differs from gold");
    ++r.recognized_items;
    if (o == g) ++r.exact;
    auto olab = labeled_brackets(o);
    auto oun = unlabeled_brackets(o);
    r.labeled_test += olab.size();
    r.bracket_test += oun.size();
    for (const auto& b : olab) r.labeled_match += glab.count(b);
    for (const auto& b : oun) r.bracket_match += gun.count(b);
    std::size_t cross = count_crossing(oun, gun);
    r.non_crossing += oun.size() - cross;
    if (cross == 0) ++r.zero_crossing_items;
  }
  return r;
}

namespace {

std::vector<std::pair<std::string, double>> rows(const EvalReport& r) {
  std::vector<std::pair<std::string, double>> v{
      {"recognized", r.recognized()},
      {"exact_match", r.exact_match()},
      {"labeled_recall", r.labeled_recall()},
      {"labeled_precision", r.labeled_precision()},
      {"bracket_recall", r.bracket_recall()},
      {"bracket_precision", r.bracket_precision()},
      {"ncb_recall", r.ncb_recall()},
      {"ncb_precision", r.ncb_precision()},
      {"zero_crossing", r.zero_crossing()},
      {"mean_length", r.mean_length()},
  };
  if (r.sentence_items) v.emplace_back("sentence_match", r.sentence_match());
  return v;
}

}  // namespace

void write_report(std::ostream& out, const EvalReport& r) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%-20s %zu\n", "items", r.items);
  out << buf;
  for (const auto& [k, v] : rows(r)) {
    if (k == "mean_length") std::snprintf(buf, sizeof buf, "%-20s %.4f\n", k.c_str(), v);
    else std::snprintf(buf, sizeof buf, "%-20s %.4f%%\n", k.c_str(), 100.0 * v);
    out << buf;
  }
}

void write_report_kv(std::ostream& out, const EvalReport& r) {
  char buf[96];
  out << "items=" << r.items << '\n';
  for (const auto& [k, v] : rows(r)) {
    std::snprintf(buf, sizeof buf, "%s=%.17g\n", k.c_str(), v);
    out << buf;
  }
}

}  // namespace dop
