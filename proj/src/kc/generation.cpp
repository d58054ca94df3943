// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <limits>
#include <set>

#include "kcgen/kc/pipeline.hpp"
#include "kcgen/llm/parsers.hpp"
#include "kcgen/util/digest.hpp"
#include "kcgen/util/error.hpp"
#include "kcgen/util/log.hpp"
#include "kcgen/util/rng.hpp"
#include "kcgen/util/text.hpp"

namespace kcgen::kc {

std::vector<data::Submission> select_representative_solutions(const data::Problem& problem,
                                                              const std::vector<data::Submission>& correct,
                                                              int n, embed::Embedder& embedder,
                                                              std::uint64_t seed) {
  if (n < 1) throw DomainError("representative solution count must be >= 1, got " + std::to_string(n));
  if (correct.empty()) throw DomainError("problem " + problem.problem_id + " has no correct submissions");

  std::vector<std::vector<double>> all;
  all.reserve(correct.size());
  for (const auto& s : correct) all.push_back(embedder.embed_code(s.code).values);

  // Distinct vectors only; `owner` is the first submission carrying each one.
  std::vector<std::vector<double>> points;
  std::vector<std::size_t> owner;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (std::find(points.begin(), points.end(), all[i]) == points.end()) {
      points.push_back(all[i]);
      owner.push_back(i);
    }
  }

  const int k = std::min(n, static_cast<int>(points.size()));
  std::vector<std::size_t> chosen;
  if (k == 1) {
    std::vector<double> centroid(all.front().size(), 0.0);
    for (const auto& v : all) {
      for (std::size_t j = 0; j < v.size(); ++j) centroid[j] += v[j];
    }
    for (auto& c : centroid) c /= static_cast<double>(all.size());
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < points.size(); ++p) {
      const double d = squared_distance(points[p], centroid);
      if (d < best_d) {
        best_d = d;
        best = p;
      }
    }
    chosen.push_back(owner[best]);
  } else {
    const KMeansResult km = kmeans(points, k, Rng::mix(seed, fnv1a64(problem.problem_id)));
    for (int c = 0; c < k; ++c) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t p = 0; p < points.size(); ++p) {
        if (km.assignment[p] != c) continue;
        const double d = squared_distance(points[p], km.centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = p;
        }
      }
      chosen.push_back(owner[best]);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<data::Submission> out;
  for (auto i : chosen) out.push_back(correct[i]);
  return out;
}

std::vector<KnowledgeComponent> generate_initial_kcs(llm::LlmClient& client, const data::Problem& problem,
                                                     const std::vector<data::Submission>& solutions,
                                                     const std::vector<llm::InContextExample>& examples,
                                                     const GenerationOptions& options) {
  if (solutions.empty()) throw DomainError("KC generation for " + problem.problem_id + " needs a solution");
  std::vector<std::string> codes;
  for (const auto& s : solutions) codes.push_back(s.code);
  llm::ChatRequest req = llm::render_prompt(llm::TemplateId::kc_generation,
                                            {{"language", options.language},
                                             {"n", std::to_string(codes.size())},
                                             {"examples", llm::format_examples(examples)},
                                             {"problem", problem.statement},
                                             {"solutions", llm::format_solutions(codes)}});
  const auto generated = client.complete_structured(std::move(req), llm::parse_kc_json);
  std::vector<KnowledgeComponent> out;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    out.push_back({problem.problem_id + "#" + std::to_string(i + 1), generated[i].name, generated[i].reasoning,
                   problem.problem_id, std::nullopt});
  }
  return out;
}

std::map<std::string, std::string> convert_human_tags(llm::LlmClient& client, const std::vector<std::string>& tags) {
  if (tags.empty()) throw DomainError("tag conversion needs at least one tag");
  llm::ChatRequest req = llm::render_prompt(llm::TemplateId::tag_conversion, {{"tags", llm::format_list(tags)}});
  return client.complete_structured(std::move(req),
                                    [&](const std::string& r) { return llm::parse_tag_conversion_json(r, tags); });
}

std::vector<llm::InContextExample> examples_from_human_tags(llm::LlmClient& client, const data::Dataset& dataset,
                                                            int count) {
  std::vector<llm::InContextExample> out;
  for (const auto& p : dataset.problems) {
    if (static_cast<int>(out.size()) >= count) break;
    if (p.human_kc_tags.empty()) continue;
    const auto names = convert_human_tags(client, p.human_kc_tags);
    llm::InContextExample ex{p.statement, {}};
    std::set<std::string> seen;
    for (const auto& t : p.human_kc_tags) {
      const std::string& name = names.at(t);
      if (seen.insert(text::normalize_name(name)).second) ex.kcs.push_back(name);
    }
    out.push_back(std::move(ex));
  }
  if (out.empty()) {
    log().warn("no tagged problems; using the bundled in-context example");
    auto bundled = llm::default_examples();
    if (count < static_cast<int>(bundled.size())) bundled.resize(static_cast<std::size_t>(std::max(count, 1)));
    return bundled;
  }
  return out;
}

}  // namespace kcgen::kc
