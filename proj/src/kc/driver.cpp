// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <exception>
#include <set>
#include <thread>

#include "kcgen/kc/pipeline.hpp"
#include "kcgen/util/error.hpp"
#include "kcgen/util/log.hpp"

namespace kcgen::kc {

namespace {

struct ProblemOutcome {
  std::vector<KnowledgeComponent> kcs;
  std::vector<std::string> representatives;
  bool skipped = false;
  bool flagged = false;
  std::exception_ptr error;
};

}  // namespace

GenerationResult generate_all_kcs(const data::Dataset& dataset, llm::LlmClient& client, embed::Embedder& embedder,
                                  const PipelineConfig& config) {
  if (config.n_solutions < 1) throw ValidationError("n_solutions must be >= 1");
  std::vector<llm::InContextExample> examples;
  if (config.examples_source == "human-tags") {
    examples = examples_from_human_tags(client, dataset, config.n_examples);
  } else if (config.examples_source == "bundled") {
    examples = llm::default_examples();
    if (config.n_examples >= 0 && static_cast<std::size_t>(config.n_examples) < examples.size()) {
      examples.resize(static_cast<std::size_t>(config.n_examples));
    }
  } else {
    throw ValidationError("examples_source must be \"bundled\" or \"human-tags\", got \"" + config.examples_source +
                          "\"");
  }

  std::map<std::string, std::vector<data::Submission>> correct;
  for (const auto& seq : dataset.sequences) {
    for (const auto& s : seq.responses) {
      if (s.correct) correct[s.problem_id].push_back(s);
    }
  }

  const GenerationOptions options{config.language};
  std::vector<ProblemOutcome> outcomes(dataset.problems.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < outcomes.size(); i = next++) {
      const data::Problem& p = dataset.problems[i];
      ProblemOutcome& out = outcomes[i];
      try {
        const auto it = correct.find(p.problem_id);
        if (it == correct.end()) {
          out.skipped = true;
          continue;
        }
        const auto reps = select_representative_solutions(p, it->second, config.n_solutions, embedder, config.seed);
        for (const auto& r : reps) out.representatives.push_back(r.student_id);
        out.kcs = generate_initial_kcs(client, p, reps, examples, options);
      } catch (const StructuredOutputError& e) {
        out.flagged = true;
        log().warn("problem {}: KC generation output unusable after re-prompt: {}", p.problem_id, e.what());
      } catch (...) {
        out.error = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, config.concurrency);
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  GenerationResult result;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    auto& o = outcomes[i];
    const std::string& id = dataset.problems[i].problem_id;
    if (o.error) std::rethrow_exception(o.error);
    if (o.skipped) {
      log().warn("problem {} has no correct submissions; skipped", id);
      result.skipped_problems.push_back(id);
      continue;
    }
    if (o.flagged) {
      result.flagged_problems.push_back(id);
      continue;
    }
    result.representatives[id] = std::move(o.representatives);
    for (auto& kc : o.kcs) result.initial_kcs.push_back(std::move(kc));
  }
  return result;
}

void cluster_and_tag(const data::Dataset& dataset, llm::LlmClient& client, embed::Embedder& embedder,
                     const PipelineConfig& config, PipelineResult& result) {
  if (result.initial_kcs.empty()) throw PrerequisiteError("no initial KCs to cluster");
  const KcHierarchy hierarchy(result.initial_kcs, embedder);
  std::set<int> wanted(config.ontology_levels.begin(), config.ontology_levels.end());
  wanted.insert(config.n_clusters);
  for (int n : wanted) {
    if (n < 1 || n > hierarchy.distinct_count()) {
      throw DomainError("cannot form " + std::to_string(n) + " clusters from " +
                        std::to_string(hierarchy.distinct_count()) + " distinct KC descriptions");
    }
  }

  result.levels.clear();
  for (auto it = wanted.rbegin(); it != wanted.rend(); ++it) {
    ClusterLevel level{*it, hierarchy.cut(*it)};
    label_clusters(client, level.clusters, result.initial_kcs);
    result.levels.push_back(std::move(level));
  }
  for (const auto& l : result.levels) {
    if (l.n_clusters == config.n_clusters) result.clusters = l.clusters;
  }

  std::vector<std::string> problem_ids;
  for (const auto& p : dataset.problems) problem_ids.push_back(p.problem_id);
  result.q_matrix = build_q_matrix(problem_ids, result.initial_kcs, result.clusters);

  result.ontology.reset();
  if (!config.ontology_levels.empty()) {
    std::vector<ClusterLevel> chosen;
    for (const auto& l : result.levels) {
      for (int n : config.ontology_levels) {
        if (n == l.n_clusters) chosen.push_back(l);
      }
    }
    result.ontology = build_ontology(std::move(chosen), embedder);
  }
}

PipelineResult run_kc_pipeline(const data::Dataset& dataset, llm::LlmClient& client, embed::Embedder& embedder,
                               const PipelineConfig& config) {
  GenerationResult g = generate_all_kcs(dataset, client, embedder, config);
  PipelineResult r;
  r.initial_kcs = std::move(g.initial_kcs);
  r.representatives = std::move(g.representatives);
  r.skipped_problems = std::move(g.skipped_problems);
  r.flagged_problems = std::move(g.flagged_problems);
  cluster_and_tag(dataset, client, embedder, config, r);
  return r;
}

}  // namespace kcgen::kc
