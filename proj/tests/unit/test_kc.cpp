// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <set>

#include "kcgen/core/synthetic.hpp"
#include "kcgen/kc/pipeline.hpp"
#include "kcgen/llm/provider.hpp"
#include "kcgen/util/error.hpp"
#include "kcgen/util/fs.hpp"
#include "kcgen/util/rng.hpp"
#include "kcgen/util/text.hpp"

using namespace kcgen;
using namespace kcgen::kc;

namespace {

/// Returns fixed vectors for known code strings.
class TableEmbedder final : public embed::Embedder {
 public:
  std::map<std::string, std::vector<double>> table;
  embed::EmbeddingVector embed_text(std::string_view s) override { return {table.at(std::string(s)), "table"}; }
  embed::EmbeddingVector embed_code(std::string_view s) override { return {table.at(std::string(s)), "table"}; }
  std::string tag() const override { return "table"; }
};

double oracle_cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return 1.0 - ab / std::sqrt(aa * bb);
}

/// Scans every pair of current clusters and recomputes average linkage from
/// the member pairs at each step.
std::vector<Merge> brute_force_hac(const std::vector<std::vector<double>>& pts) {
  std::vector<std::vector<int>> clusters;
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) clusters.push_back({i});
  std::vector<Merge> merges;
  while (clusters.size() > 1) {
    std::size_t ba = 0, bb = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < clusters.size(); ++a) {
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        double s = 0;
        for (int x : clusters[a])
          for (int y : clusters[b]) s += oracle_cosine_distance(pts[x], pts[y]);
        const double d = s / (clusters[a].size() * clusters[b].size());
        if (d < best - kTieTolerance) {
          best = d;
          ba = a;
          bb = b;
        }
      }
    }
    Merge m{clusters[ba].front(), clusters[bb].front(), best, 0};
    clusters[ba].insert(clusters[ba].end(), clusters[bb].begin(), clusters[bb].end());
    std::sort(clusters[ba].begin(), clusters[ba].end());
    m.size = static_cast<int>(clusters[ba].size());
    clusters.erase(clusters.begin() + static_cast<long>(bb));
    std::sort(clusters.begin(), clusters.end());
    merges.push_back(m);
  }
  return merges;
}

std::shared_ptr<llm::MockProvider> mock() { return std::make_shared<llm::MockProvider>(llm::MockConfig{}); }

data::Submission sub(const std::string& student, const std::string& code) {
  return {student, "p", 0, code, true, std::nullopt};
}

}  // namespace

TEST_CASE("agglomeration matches the brute-force oracle") {
  Rng rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(9));
    const int dim = 2 + static_cast<int>(rng.below(4));
    std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
    for (auto& p : pts)
      for (auto& v : p) v = rng.normal();
    const auto got = average_linkage_cosine(pts).merges;
    const auto want = brute_force_hac(pts);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].left == want[i].left);
      CHECK(got[i].right == want[i].right);
      CHECK(got[i].size == want[i].size);
      CHECK(got[i].distance == doctest::Approx(want[i].distance).epsilon(1e-12));
    }
  }
}

TEST_CASE("dendrogram cuts") {
  Rng rng(5);
  std::vector<std::vector<double>> pts(7, std::vector<double>(3));
  for (auto& p : pts)
    for (auto& v : p) v = rng.normal();
  const Dendrogram d = average_linkage_cosine(pts);
  CHECK(d.cut(7).size() == 7);
  CHECK(d.cut(1) == std::vector<std::vector<int>>{{0, 1, 2, 3, 4, 5, 6}});
  CHECK_THROWS_AS(d.cut(0), DomainError);
  CHECK_THROWS_AS(d.cut(8), DomainError);
  // Nesting: every cluster at k+1 lies inside one cluster at k.
  for (int k = 1; k < 7; ++k) {
    const auto coarse = d.cut(k);
    for (const auto& f : d.cut(k + 1)) {
      int hits = 0;
      for (const auto& c : coarse) hits += std::includes(c.begin(), c.end(), f.begin(), f.end());
      CHECK(hits == 1);
    }
  }
}

TEST_CASE("representative solutions: planted clusters, duplicates, single") {
  TableEmbedder emb;
  Rng rng(11);
  std::vector<data::Submission> subs;
  std::map<std::string, int> planted;
  for (int c = 0; c < 5; ++c) {
    std::vector<double> center(8, 0.0);
    center[c] = 10.0;
    for (int j = 0; j < 4; ++j) {
      std::vector<double> v = center;
      for (auto& x : v) x += rng.normal(0.0, 0.3);
      const std::string code = "code_" + std::to_string(c) + "_" + std::to_string(j);
      emb.table[code] = v;
      planted[code] = c;
      subs.push_back(sub("s" + std::to_string(subs.size()), code));
    }
  }
  rng.shuffle(subs);
  data::Problem p{"p", "stmt", {}};
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const auto reps = select_representative_solutions(p, subs, 5, emb, seed);
    REQUIRE(reps.size() == 5);
    std::set<int> seen;
    for (const auto& r : reps) seen.insert(planted.at(r.code));
    CHECK(seen.size() == 5);
    CHECK(select_representative_solutions(p, subs, 5, emb, seed) == reps);
  }

  emb.table["same"] = {1.0, 2.0, 3.0};
  std::vector<data::Submission> dup(5, sub("x", "same"));
  CHECK(select_representative_solutions(p, dup, 5, emb, 1).size() == 1);

  // n = 1: closest submission to the mean of all embeddings.
  std::vector<double> mean(8, 0.0);
  for (const auto& s : subs)
    for (std::size_t j = 0; j < 8; ++j) mean[j] += emb.table[s.code][j] / subs.size();
  const auto best = std::min_element(subs.begin(), subs.end(), [&](const auto& a, const auto& b) {
    return squared_distance(emb.table[a.code], mean) < squared_distance(emb.table[b.code], mean);
  });
  const auto one = select_representative_solutions(p, subs, 1, emb, 9);
  REQUIRE(one.size() == 1);
  CHECK(one.front().code == best->code);

  CHECK_THROWS_AS(select_representative_solutions(p, {}, 3, emb, 1), DomainError);
  CHECK_THROWS_AS(select_representative_solutions(p, subs, 0, emb, 1), DomainError);
}

TEST_CASE("initial KC generation with the mock provider") {
  llm::LlmClient client(mock(), {});
  data::Problem love6{"love6",
                      "The number 6 is a truly great number. Given two int values, a and b, return true if either "
                      "one is 6. Or if their sum or difference is 6.",
                      {}};
  const std::string code =
      "public boolean love6(int a, int b) {\n  if (a == 6 || b == 6) {\n    return true;\n  }\n"
      "  else if (a + b == 6 || Math.abs(a - b) == 6) {\n    return true;\n  }\n  return false;\n}\n";
  const auto kcs = generate_initial_kcs(client, love6, {sub("s1", code)}, llm::default_examples());
  std::vector<std::string> names;
  for (const auto& k : kcs) {
    names.push_back(k.name);
    CHECK(k.source_problem_id == "love6");
    CHECK(!k.reasoning.empty());
  }
  CHECK(names == std::vector<std::string>{"If and else if statement", "Basic arithmetic operations", "Logical operators",
                                          "Numerical comparisons", "Absolute value computation"});
  CHECK(kcs.front().kc_id == "love6#1");
  CHECK_THROWS_AS(generate_initial_kcs(client, love6, {}, llm::default_examples()), DomainError);

  data::Problem sandwich{"getSandwich",
                         "A sandwich is two pieces of bread with something in between. Return the string that is "
                         "between the first and last appearance of \"bread\" in the given string.",
                         {}};
  const std::string scode =
      "public String getSandwich(String str) {\n  int first = str.indexOf(\"bread\");\n"
      "  int last = str.lastIndexOf(\"bread\");\n  if (first != last) {\n"
      "    return str.substring(first + 5, last);\n  }\n  return \"\";\n}\n";
  bool indexing = false;
  for (const auto& k : generate_initial_kcs(client, sandwich, {sub("s2", scode)}, llm::default_examples())) {
    const std::string n = text::normalize_name(k.name);
    indexing |= text::contains(n, "substring") || text::contains(n, "index") || text::contains(n, "within strings");
  }
  CHECK(indexing);
}

TEST_CASE("human tag conversion") {
  llm::LlmClient client(mock(), {});
  CHECK(convert_human_tags(client, {"If/Else"}).at("If/Else") == "If and else statement");
  const std::vector<std::string> tags = {"If/Else",       "NestedIf",     "While",        "For",
                                         "NestedFor",     "Math+-*/",     "Math%",        "LogicAndNotOr",
                                         "LogicCompareNum", "LogicBoolean", "StringFormat", "StringConcat",
                                         "StringIndex",   "StringLen",    "StringEqual",  "CharEqual",
                                         "ArrayIndex",    "DefFunction"};
  const auto m = convert_human_tags(client, tags);
  CHECK(m.size() == 18);
  for (const auto& t : tags) CHECK(!m.at(t).empty());
  CHECK_THROWS_AS(convert_human_tags(client, {}), DomainError);
}

TEST_CASE("cluster labeling") {
  auto provider = mock();
  llm::LlmClient client(provider, {});
  const auto single = label_cluster(client, {"Boolean logic", "boolean  logic"});
  CHECK(single.label == "Boolean logic");
  CHECK(single.origin == LabelOrigin::representative);
  CHECK(client.provider_calls() == 0);

  const auto loop = label_cluster(client, {"for loop iteration", "while loop", "array iteration"});
  CHECK(loop.label == "Loop iteration");
  CHECK(loop.origin == LabelOrigin::summary);

  const std::vector<std::string> members = {"String length", "String length computation", "Determining string length"};
  const auto rep = label_cluster(client, members);
  if (rep.origin == LabelOrigin::representative) {
    CHECK(std::find(members.begin(), members.end(), rep.label) != members.end());
  }
  CHECK_THROWS_AS(label_cluster(client, {}), DomainError);
}

TEST_CASE("KC clustering partitions and merges duplicates") {
  embed::HashingEmbedder emb;
  std::vector<KnowledgeComponent> kcs = {
      {"a#1", "String length", "r", "a", {}},     {"a#2", "While loop", "r", "a", {}},
      {"b#1", "string  LENGTH", "r", "b", {}},    {"b#2", "For loop iteration", "r", "b", {}},
      {"c#1", "Modulus operation", "r", "c", {}},
  };
  KcHierarchy h(kcs, emb);
  CHECK(h.distinct_count() == 4);
  const auto singles = h.cut(4);
  REQUIRE(singles.size() == 4);
  CHECK(singles[0].member_kc_ids == std::vector<std::string>{"a#1", "b#1"});
  const auto all = h.cut(1);
  REQUIRE(all.size() == 1);
  CHECK(all[0].member_kc_ids.size() == 5);
  CHECK_THROWS_AS(h.cut(5), DomainError);
  CHECK_THROWS_AS(cluster_kcs(kcs, 0, emb), DomainError);
  for (int k = 1; k <= 4; ++k) {
    std::multiset<std::string> seen;
    for (const auto& c : h.cut(k)) seen.insert(c.member_kc_ids.begin(), c.member_kc_ids.end());
    CHECK(seen == std::multiset<std::string>{"a#1", "a#2", "b#1", "b#2", "c#1"});
  }
}

TEST_CASE("Q-matrix construction") {
  std::vector<KnowledgeComponent> kcs = {
      {"p1#1", "x", "", "p1", {}}, {"p1#2", "y", "", "p1", {}}, {"p1#3", "z", "", "p1", {}}, {"p2#1", "w", "", "p2", {}}};
  std::vector<KcCluster> clusters = {{0, {"p1#1", "p1#3"}, "A", LabelOrigin::summary},
                                     {1, {"p1#2", "p2#1"}, "B", LabelOrigin::summary}};
  const QMatrix q = build_q_matrix({"p1", "p2"}, kcs, clusters);
  CHECK(q.kcs == std::vector<std::string>{"A", "B"});
  CHECK(q.incidence == std::vector<std::vector<std::uint8_t>>{{1, 1}, {0, 1}});
  CHECK_NOTHROW(q.validate());
  CHECK(q.kcs_of("p2") == std::vector<int>{1});

  auto missing = clusters;
  missing[1].member_kc_ids = {"p1#2"};
  CHECK_THROWS_AS(build_q_matrix({"p1", "p2"}, kcs, missing), IntegrityError);
  auto twice = clusters;
  twice[1].member_kc_ids.push_back("p1#1");
  CHECK_THROWS_AS(build_q_matrix({"p1", "p2"}, kcs, twice), IntegrityError);

  const QMatrix empty_row = build_q_matrix({"p1", "p2", "p3"}, kcs, clusters);
  CHECK(empty_row.problems == std::vector<std::string>{"p1", "p2"});

  const auto dir = std::filesystem::temp_directory_path() / "kcgen_q_test";
  std::filesystem::create_directories(dir);
  write_q_matrix(dir / "q.tsv", q);
  CHECK(read_q_matrix(dir / "q.tsv") == q);
  write_kc_set(dir / "kcs.tsv", kcs);
  CHECK(read_kc_set(dir / "kcs.tsv") == kcs);
  write_clusters(dir / "c.tsv", {{2, clusters}});
  const auto back = read_clusters(dir / "c.tsv");
  REQUIRE(back.size() == 1);
  CHECK(back[0].clusters == clusters);
  std::filesystem::remove_all(dir);
}

TEST_CASE("ontology from nested partitions") {
  embed::HashingEmbedder emb;
  std::vector<KcCluster> fine, coarse;
  for (int i = 0; i < 4; ++i) {
    fine.push_back({i, {"k" + std::to_string(2 * i), "k" + std::to_string(2 * i + 1)}, "fine " + std::to_string(i),
                    LabelOrigin::summary});
  }
  for (int i = 0; i < 2; ++i) {
    auto m = fine[2 * i].member_kc_ids;
    m.insert(m.end(), fine[2 * i + 1].member_kc_ids.begin(), fine[2 * i + 1].member_kc_ids.end());
    coarse.push_back({i, m, "coarse " + std::to_string(i), LabelOrigin::summary});
  }
  const Ontology o = build_ontology({{4, fine}, {2, coarse}}, emb);
  CHECK(o.levels == std::vector<int>{2, 4});
  CHECK(o.nodes[1][0].parent == 0);
  CHECK(o.nodes[1][1].parent == 0);
  CHECK(o.nodes[1][2].parent == 1);
  CHECK(o.nodes[1][3].parent == 1);
  CHECK(o.nodes[0][1].children == std::vector<int>{2, 3});

  const Ontology same = build_ontology({{4, fine}, {4, fine}}, emb);
  for (int i = 0; i < 4; ++i) {
    CHECK(same.nodes[1][i].parent == i);
    CHECK(same.nodes[0][i].children == std::vector<int>{i});
  }

  auto broken = coarse;
  broken[1].member_kc_ids.pop_back();
  CHECK_THROWS_AS(build_ontology({{4, fine}, {2, broken}}, emb), IntegrityError);
}

TEST_CASE("full mock pipeline on a course-shaped dataset") {
  data::synth::CourseConfig cc;
  cc.n_students = 60;
  const data::Dataset ds = data::synth::generate_course(cc);
  PipelineConfig pc;
  pc.ontology_levels = {100, 50, 20, 10};

  const auto run = [&] {
    llm::LlmClient client(mock(), {});
    embed::HashingEmbedder emb;
    return run_kc_pipeline(ds, client, emb, pc);
  };
  const PipelineResult a = run();
  MESSAGE("initial KCs: " << a.initial_kcs.size());
  CHECK(a.q_matrix.problems.size() == 50);
  CHECK(a.q_matrix.kcs.size() == 50);
  CHECK_NOTHROW(a.q_matrix.validate());

  const PipelineResult b = run();
  CHECK(b.q_matrix == a.q_matrix);
  REQUIRE(a.ontology);
  REQUIRE(b.ontology);
  CHECK(ontology_to_json(*a.ontology) == ontology_to_json(*b.ontology));

  // Image law: each problem's 1-entries are the labels of its KCs' clusters.
  std::map<std::string, std::string> label_of;
  for (const auto& c : a.clusters)
    for (const auto& id : c.member_kc_ids) label_of[id] = c.label;
  for (const auto& p : a.q_matrix.problems) {
    std::set<std::string> want, got;
    for (const auto& k : a.initial_kcs)
      if (k.source_problem_id == p) want.insert(label_of.at(k.kc_id));
    for (int c : a.q_matrix.kcs_of(p)) got.insert(a.q_matrix.kcs[c]);
    CHECK(want == got);
  }

  std::size_t prev = std::numeric_limits<std::size_t>::max();
  for (const auto& l : a.levels) {
    std::set<std::string> labels;
    for (const auto& c : l.clusters) labels.insert(c.label);
    CHECK(labels.size() <= prev);
    prev = labels.size();
  }
  for (std::size_t li = 1; li < a.ontology->nodes.size(); ++li) {
    for (const auto& n : a.ontology->nodes[li]) CHECK(n.parent >= 0);
  }
}
