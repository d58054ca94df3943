// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kcgen/core/dataset.hpp"
#include "kcgen/embed/embedding.hpp"
#include "kcgen/kc/clustering.hpp"
#include "kcgen/llm/client.hpp"
#include "kcgen/llm/prompt.hpp"

namespace kcgen::kc {

struct KnowledgeComponent {
  std::string kc_id;
  std::string name;
  std::string reasoning;
  std::string source_problem_id;
  std::optional<int> abstraction_level;

  friend bool operator==(const KnowledgeComponent&, const KnowledgeComponent&) = default;
};

enum class LabelOrigin { representative, summary };

std::string to_string(LabelOrigin o);
LabelOrigin label_origin_from_string(std::string_view s);

struct KcCluster {
  int cluster_id = 0;
  std::vector<std::string> member_kc_ids;
  std::string label;
  LabelOrigin label_origin = LabelOrigin::representative;

  friend bool operator==(const KcCluster&, const KcCluster&) = default;
};

struct QMatrix {
  std::vector<std::string> problems;
  std::vector<std::string> kcs;
  std::vector<std::vector<std::uint8_t>> incidence;

  /// Row index of a problem, or -1.
  int problem_index(const std::string& problem_id) const;
  /// Column indices set for a problem; empty when the problem is absent.
  std::vector<int> kcs_of(const std::string& problem_id) const;

  /// Throws IntegrityError on ragged rows, non-binary entries, zero rows,
  /// zero columns or repeated labels.
  void validate() const;

  friend bool operator==(const QMatrix&, const QMatrix&) = default;
};

struct OntologyNode {
  std::string label;
  /// Cluster count of the level this node belongs to.
  int abstraction_level = 0;
  int cluster_id = 0;
  /// Indices into the next-finer level.
  std::vector<int> children;
  /// Index into the next-coarser level; -1 at the top.
  int parent = -1;
};

struct Ontology {
  /// Cluster counts, coarsest first.
  std::vector<int> levels;
  std::vector<std::vector<OntologyNode>> nodes;
};

// ---------------------------------------------------------------- step 1

/// Clusters the code embeddings of correct submissions and returns the member
/// nearest each centroid, in submission order. Identical embeddings count
/// once, so at most #distinct submissions are returned. With n = 1 the
/// submission closest to the global centroid is returned.
///
/// Throws DomainError when n < 1 or there are no submissions.
std::vector<data::Submission> select_representative_solutions(const data::Problem& problem,
                                                              const std::vector<data::Submission>& correct,
                                                              int n, embed::Embedder& embedder,
                                                              std::uint64_t seed);

struct GenerationOptions {
  std::string language = "Java";
};

/// Chain-of-thought KC generation for one problem. KC ids are
/// "<problem_id>#<k>". Throws DomainError without solutions and surfaces
/// StructuredOutputError after the client's re-prompt.
std::vector<KnowledgeComponent> generate_initial_kcs(llm::LlmClient& client, const data::Problem& problem,
                                                     const std::vector<data::Submission>& solutions,
                                                     const std::vector<llm::InContextExample>& examples,
                                                     const GenerationOptions& options = {});

/// Natural language name for each human-written tag. Throws DomainError on an
/// empty list.
std::map<std::string, std::string> convert_human_tags(llm::LlmClient& client, const std::vector<std::string>& tags);

/// In-context examples built from the first `count` tagged problems, with
/// their tags converted to natural language. Falls back to the bundled
/// example when the dataset has no tags.
std::vector<llm::InContextExample> examples_from_human_tags(llm::LlmClient& client, const data::Dataset& dataset,
                                                            int count);

// ---------------------------------------------------------------- step 2

/// Embeds the distinct KC descriptions once and keeps the full dendrogram, so
/// cuts at several abstraction levels share one agglomeration.
class KcHierarchy {
 public:
  KcHierarchy(std::vector<KnowledgeComponent> kcs, embed::Embedder& embedder);

  /// Number of distinct descriptions after normalization.
  int distinct_count() const { return static_cast<int>(descriptions_.size()); }
  const std::vector<std::string>& descriptions() const { return descriptions_; }
  const std::vector<KnowledgeComponent>& kcs() const { return kcs_; }
  const Dendrogram& dendrogram() const { return dendrogram_; }

  /// Unlabeled clusters ordered by first appearance. Throws DomainError unless
  /// 1 <= n_clusters <= distinct_count().
  std::vector<KcCluster> cut(int n_clusters) const;

 private:
  std::vector<KnowledgeComponent> kcs_;
  std::vector<std::string> descriptions_;
  std::vector<int> description_of_kc_;
  Dendrogram dendrogram_;
};

std::vector<KcCluster> cluster_kcs(const std::vector<KnowledgeComponent>& kcs, int n_clusters,
                                   embed::Embedder& embedder);

// ---------------------------------------------------------------- step 3

struct LabelResult {
  std::string label;
  LabelOrigin origin = LabelOrigin::representative;
};

/// Singletons (one distinct name) are labeled without a provider call. A
/// representative answer that does not match a member name is recorded as a
/// summary.
LabelResult label_cluster(llm::LlmClient& client, const std::vector<std::string>& member_names);

/// Labels every cluster in place. A label already taken by an earlier cluster
/// is replaced by the first unused member name, else suffixed " (2)", " (3)"...
void label_clusters(llm::LlmClient& client, std::vector<KcCluster>& clusters,
                    const std::vector<KnowledgeComponent>& kcs);

/// Columns follow cluster order; clusters sharing a label share a column.
/// Problems without any KC are left out with a warning. Throws IntegrityError
/// when a KC is in no cluster or in several.
QMatrix build_q_matrix(const std::vector<std::string>& problem_ids, const std::vector<KnowledgeComponent>& kcs,
                       const std::vector<KcCluster>& clusters);

struct ClusterLevel {
  int n_clusters = 0;
  std::vector<KcCluster> clusters;
};

/// Links each cluster to the coarser-level cluster holding the plurality of
/// its members; ties go to the most similar label, then the lowest index.
/// Levels may be given in any order. Throws IntegrityError when levels do not
/// cover the same KC set.
Ontology build_ontology(std::vector<ClusterLevel> levels, embed::Embedder& embedder);

// ---------------------------------------------------------------- driver

struct PipelineConfig {
  int n_solutions = 5;
  int n_clusters = 50;
  /// Extra cut levels for the ontology; empty disables it.
  std::vector<int> ontology_levels;
  std::uint64_t seed = 1;
  std::string language = "Java";
  int n_examples = 1;
  /// "bundled" or "human-tags".
  std::string examples_source = "bundled";
  int concurrency = 1;
};

struct PipelineResult {
  std::vector<KnowledgeComponent> initial_kcs;
  std::map<std::string, std::vector<std::string>> representatives;
  std::vector<std::string> skipped_problems;
  std::vector<std::string> flagged_problems;
  std::vector<KcCluster> clusters;
  std::vector<ClusterLevel> levels;
  QMatrix q_matrix;
  std::optional<Ontology> ontology;
};

/// Representative selection and KC generation over every problem.
struct GenerationResult {
  std::vector<KnowledgeComponent> initial_kcs;
  std::map<std::string, std::vector<std::string>> representatives;
  std::vector<std::string> skipped_problems;
  std::vector<std::string> flagged_problems;
};

GenerationResult generate_all_kcs(const data::Dataset& dataset, llm::LlmClient& client, embed::Embedder& embedder,
                                  const PipelineConfig& config);

/// Clustering, labeling, Q-matrix and optional ontology over generated KCs.
void cluster_and_tag(const data::Dataset& dataset, llm::LlmClient& client, embed::Embedder& embedder,
                     const PipelineConfig& config, PipelineResult& result);

PipelineResult run_kc_pipeline(const data::Dataset& dataset, llm::LlmClient& client, embed::Embedder& embedder,
                               const PipelineConfig& config);

// ---------------------------------------------------------------- files

/// Tab-separated: kc_id, name, reasoning, source_problem_id, abstraction_level.
void write_kc_set(const std::filesystem::path& path, const std::vector<KnowledgeComponent>& kcs);
std::vector<KnowledgeComponent> read_kc_set(const std::filesystem::path& path);

/// Tab-separated: level, cluster_id, label, label_origin, member ids joined by ';'.
void write_clusters(const std::filesystem::path& path, const std::vector<ClusterLevel>& levels);
std::vector<ClusterLevel> read_clusters(const std::filesystem::path& path);

/// Header "problem_id" then one column per KC label; rows of 0/1.
void write_q_matrix(const std::filesystem::path& path, const QMatrix& q);
QMatrix read_q_matrix(const std::filesystem::path& path);

std::string ontology_to_json(const Ontology& ontology);
void write_ontology(const std::filesystem::path& path, const Ontology& ontology);

}  // namespace kcgen::kc
