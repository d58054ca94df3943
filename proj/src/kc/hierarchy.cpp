// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include "kcgen/kc/pipeline.hpp"
#include "kcgen/llm/parsers.hpp"
#include "kcgen/util/error.hpp"
#include "kcgen/util/log.hpp"
#include "kcgen/util/text.hpp"

namespace kcgen::kc {

std::string to_string(LabelOrigin o) { return o == LabelOrigin::representative ? "representative" : "summary"; }

LabelOrigin label_origin_from_string(std::string_view s) {
  if (s == "representative") return LabelOrigin::representative;
  if (s == "summary") return LabelOrigin::summary;
  throw ParseError("unknown label origin \"" + std::string(s) + "\"");
}

int QMatrix::problem_index(const std::string& problem_id) const {
  const auto it = std::find(problems.begin(), problems.end(), problem_id);
  return it == problems.end() ? -1 : static_cast<int>(it - problems.begin());
}

std::vector<int> QMatrix::kcs_of(const std::string& problem_id) const {
  std::vector<int> out;
  const int r = problem_index(problem_id);
  if (r < 0) return out;
  for (std::size_t c = 0; c < kcs.size(); ++c) {
    if (incidence[r][c]) out.push_back(static_cast<int>(c));
  }
  return out;
}

void QMatrix::validate() const {
  if (incidence.size() != problems.size()) throw IntegrityError("Q-matrix row count differs from problem count");
  std::set<std::string> labels(kcs.begin(), kcs.end());
  if (labels.size() != kcs.size()) throw IntegrityError("Q-matrix has repeated KC labels");
  std::vector<int> col(kcs.size(), 0);
  for (std::size_t r = 0; r < incidence.size(); ++r) {
    if (incidence[r].size() != kcs.size()) throw IntegrityError("Q-matrix row " + problems[r] + " is ragged");
    int row = 0;
    for (std::size_t c = 0; c < kcs.size(); ++c) {
      const auto v = incidence[r][c];
      if (v > 1) throw IntegrityError("Q-matrix entry is not binary");
      row += v;
      col[c] += v;
    }
    if (row == 0) throw IntegrityError("Q-matrix row " + problems[r] + " has no KC");
  }
  for (std::size_t c = 0; c < kcs.size(); ++c) {
    if (col[c] == 0) throw IntegrityError("Q-matrix column \"" + kcs[c] + "\" has no problem");
  }
}

KcHierarchy::KcHierarchy(std::vector<KnowledgeComponent> kcs, embed::Embedder& embedder) : kcs_(std::move(kcs)) {
  std::unordered_map<std::string, int> index;
  for (const auto& kc : kcs_) {
    if (text::trim(kc.name).empty()) throw ValidationError("KC " + kc.kc_id + " has an empty name");
    const std::string key = text::normalize_name(kc.name);
    auto [it, inserted] = index.emplace(key, static_cast<int>(descriptions_.size()));
    if (inserted) descriptions_.push_back(text::trim(kc.name));
    description_of_kc_.push_back(it->second);
  }
  std::vector<std::vector<double>> points;
  points.reserve(descriptions_.size());
  for (const auto& d : descriptions_) points.push_back(embedder.embed_text(d).values);
  dendrogram_ = average_linkage_cosine(points);
}

std::vector<KcCluster> KcHierarchy::cut(int n_clusters) const {
  if (descriptions_.empty()) throw DomainError("no KCs to cluster");
  const auto groups = dendrogram_.cut(n_clusters);
  std::vector<int> group_of(descriptions_.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (int d : groups[g]) group_of[d] = static_cast<int>(g);
  }
  std::vector<KcCluster> out(groups.size());
  for (std::size_t g = 0; g < out.size(); ++g) out[g].cluster_id = static_cast<int>(g);
  for (std::size_t i = 0; i < kcs_.size(); ++i) {
    out[group_of[description_of_kc_[i]]].member_kc_ids.push_back(kcs_[i].kc_id);
  }
  return out;
}

std::vector<KcCluster> cluster_kcs(const std::vector<KnowledgeComponent>& kcs, int n_clusters,
                                   embed::Embedder& embedder) {
  return KcHierarchy(kcs, embedder).cut(n_clusters);
}

namespace {

std::vector<std::string> distinct_names(const std::vector<std::string>& names) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (seen.insert(text::normalize_name(n)).second) out.push_back(text::trim(n));
  }
  return out;
}

}  // namespace

LabelResult label_cluster(llm::LlmClient& client, const std::vector<std::string>& member_names) {
  const auto names = distinct_names(member_names);
  if (names.empty()) throw DomainError("cannot label an empty cluster");
  if (names.size() == 1) return {names.front(), LabelOrigin::representative};

  llm::ChatRequest req = llm::render_prompt(llm::TemplateId::cluster_label, {{"kcs", llm::format_list(names)}});
  const llm::ClusterLabel answer = client.complete_structured(std::move(req), llm::parse_cluster_label_json);
  const std::string key = text::normalize_name(answer.label());
  for (const auto& n : names) {
    if (text::normalize_name(n) == key) {
      return {n, answer.representative_kc ? LabelOrigin::representative : LabelOrigin::summary};
    }
  }
  return {answer.label(), LabelOrigin::summary};
}

void label_clusters(llm::LlmClient& client, std::vector<KcCluster>& clusters,
                    const std::vector<KnowledgeComponent>& kcs) {
  std::unordered_map<std::string, const KnowledgeComponent*> by_id;
  for (const auto& kc : kcs) by_id[kc.kc_id] = &kc;
  std::set<std::string> taken;
  for (auto& c : clusters) {
    std::vector<std::string> names;
    for (const auto& id : c.member_kc_ids) {
      const auto it = by_id.find(id);
      if (it == by_id.end()) throw IntegrityError("cluster member " + id + " is not a known KC");
      names.push_back(it->second->name);
    }
    LabelResult r = label_cluster(client, names);
    if (taken.count(text::normalize_name(r.label))) {
      const std::string original = r.label;
      bool replaced = false;
      for (const auto& n : distinct_names(names)) {
        if (!taken.count(text::normalize_name(n))) {
          r = {n, LabelOrigin::representative};
          replaced = true;
          break;
        }
      }
      for (int k = 2; !replaced; ++k) {
        const std::string candidate = original + " (" + std::to_string(k) + ")";
        if (!taken.count(text::normalize_name(candidate))) {
          r = {candidate, LabelOrigin::summary};
          replaced = true;
        }
      }
      log().info("label \"{}\" already used; cluster {} relabeled \"{}\"", original, c.cluster_id, r.label);
    }
    taken.insert(text::normalize_name(r.label));
    c.label = r.label;
    c.label_origin = r.origin;
  }
}

QMatrix build_q_matrix(const std::vector<std::string>& problem_ids, const std::vector<KnowledgeComponent>& kcs,
                       const std::vector<KcCluster>& clusters) {
  std::vector<std::string> columns;
  std::map<std::string, int> column_of_label;
  std::unordered_map<std::string, int> column_of_kc;
  for (const auto& c : clusters) {
    if (text::trim(c.label).empty()) throw IntegrityError("cluster " + std::to_string(c.cluster_id) + " is unlabeled");
    auto [it, inserted] = column_of_label.emplace(c.label, static_cast<int>(columns.size()));
    if (inserted) columns.push_back(c.label);
    for (const auto& id : c.member_kc_ids) {
      if (!column_of_kc.emplace(id, it->second).second) {
        throw IntegrityError("KC " + id + " belongs to more than one cluster");
      }
    }
  }

  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t r = 0; r < problem_ids.size(); ++r) row_of.emplace(problem_ids[r], r);
  std::vector<std::vector<std::uint8_t>> full(problem_ids.size(), std::vector<std::uint8_t>(columns.size(), 0));
  std::size_t known = 0;
  for (const auto& kc : kcs) {
    const auto c = column_of_kc.find(kc.kc_id);
    if (c == column_of_kc.end()) throw IntegrityError("KC " + kc.kc_id + " is not in any cluster");
    const auto r = row_of.find(kc.source_problem_id);
    if (r == row_of.end()) {
      throw IntegrityError("KC " + kc.kc_id + " refers to unknown problem " + kc.source_problem_id);
    }
    full[r->second][c->second] = 1;
    ++known;
  }
  if (known != column_of_kc.size()) throw IntegrityError("clusters reference KCs outside the KC set");

  QMatrix q;
  std::vector<int> col_count(columns.size(), 0);
  for (std::size_t r = 0; r < problem_ids.size(); ++r) {
    if (std::find(full[r].begin(), full[r].end(), 1) == full[r].end()) {
      log().warn("problem {} has no KCs and is left out of the Q-matrix", problem_ids[r]);
      continue;
    }
    for (std::size_t c = 0; c < columns.size(); ++c) col_count[c] += full[r][c];
    q.problems.push_back(problem_ids[r]);
    q.incidence.push_back(std::move(full[r]));
  }
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (col_count[c] > 0) {
      keep.push_back(c);
    } else {
      log().warn("KC \"{}\" is tagged to no problem and is dropped", columns[c]);
    }
  }
  for (auto c : keep) q.kcs.push_back(columns[c]);
  if (keep.size() != columns.size()) {
    for (auto& row : q.incidence) {
      std::vector<std::uint8_t> kept;
      for (auto c : keep) kept.push_back(row[c]);
      row = std::move(kept);
    }
  }
  return q;
}

namespace {

std::multiset<std::string> members_of(const ClusterLevel& level) {
  std::multiset<std::string> all;
  for (const auto& c : level.clusters) {
    if (c.member_kc_ids.empty()) throw IntegrityError("empty cluster at level " + std::to_string(level.n_clusters));
    all.insert(c.member_kc_ids.begin(), c.member_kc_ids.end());
  }
  return all;
}

double label_similarity(embed::Embedder& e, const std::string& a, const std::string& b) {
  if (text::trim(a).empty() || text::trim(b).empty()) return 0.0;
  return embed::cosine_similarity(e.embed_text(a), e.embed_text(b));
}

}  // namespace

Ontology build_ontology(std::vector<ClusterLevel> levels, embed::Embedder& embedder) {
  if (levels.empty()) throw DomainError("ontology needs at least one level");
  std::stable_sort(levels.begin(), levels.end(),
                   [](const ClusterLevel& a, const ClusterLevel& b) { return a.n_clusters < b.n_clusters; });
  const auto reference = members_of(levels.front());
  for (const auto& l : levels) {
    const auto m = members_of(l);
    if (std::adjacent_find(m.begin(), m.end()) != m.end()) {
      throw IntegrityError("level " + std::to_string(l.n_clusters) + " places a KC in more than one cluster");
    }
    if (m != reference) throw IntegrityError("levels cluster different KC sets");
  }

  Ontology o;
  for (const auto& l : levels) {
    o.levels.push_back(l.n_clusters);
    std::vector<OntologyNode> nodes;
    for (const auto& c : l.clusters) nodes.push_back({c.label, l.n_clusters, c.cluster_id, {}, -1});
    o.nodes.push_back(std::move(nodes));
  }
  for (std::size_t li = 1; li < levels.size(); ++li) {
    const auto& coarse = levels[li - 1].clusters;
    const auto& fine = levels[li].clusters;
    std::unordered_map<std::string, int> coarse_of;
    for (std::size_t c = 0; c < coarse.size(); ++c) {
      for (const auto& id : coarse[c].member_kc_ids) coarse_of[id] = static_cast<int>(c);
    }
    for (std::size_t f = 0; f < fine.size(); ++f) {
      std::map<int, int> votes;
      for (const auto& id : fine[f].member_kc_ids) ++votes[coarse_of.at(id)];
      int top = 0;
      for (const auto& [c, v] : votes) top = std::max(top, v);
      int parent = -1;
      double best_sim = -2.0;
      for (const auto& [c, v] : votes) {
        if (v != top) continue;
        const double sim = votes.size() == 1 ? 0.0 : label_similarity(embedder, fine[f].label, coarse[c].label);
        if (parent < 0 || sim > best_sim) {
          parent = c;
          best_sim = sim;
        }
      }
      o.nodes[li][f].parent = parent;
      o.nodes[li - 1][parent].children.push_back(static_cast<int>(f));
    }
  }
  return o;
}

}  // namespace kcgen::kc
