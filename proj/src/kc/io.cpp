// SPDX-License-Identifier: Apache-2.0
#include <nlohmann/json.hpp>
#include <sstream>

#include "kcgen/kc/pipeline.hpp"
#include "kcgen/util/error.hpp"
#include "kcgen/util/fs.hpp"
#include "kcgen/util/text.hpp"

namespace kcgen::kc {

namespace {

std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path, const std::string& header) {
  std::istringstream in(read_file(path));
  std::string line;
  std::vector<std::vector<std::string>> rows;
  int n = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!seen_header) {
      if (!header.empty() && line != header) {
        throw ParseError(path.string() + ":" + std::to_string(n) + ": unexpected header");
      }
      seen_header = true;
      if (!header.empty()) continue;
    }
    std::vector<std::string> fields;
    for (const auto& f : text::split(line, '\t')) fields.push_back(text::unescape_field(f));
    rows.push_back(std::move(fields));
  }
  if (!seen_header) throw ParseError(path.string() + ": empty file");
  return rows;
}

const char* kKcHeader = "kc_id\tname\treasoning\tsource_problem_id\tabstraction_level";
const char* kClusterHeader = "level\tcluster_id\tlabel\tlabel_origin\tmember_kc_ids";

int to_int(const std::string& s, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ParseError(path.string() + ": \"" + s + "\" is not an integer");
}

}  // namespace

void write_kc_set(const std::filesystem::path& path, const std::vector<KnowledgeComponent>& kcs) {
  std::string out = std::string(kKcHeader) + "\n";
  for (const auto& kc : kcs) {
    out += text::escape_field(kc.kc_id) + "\t" + text::escape_field(kc.name) + "\t" +
           text::escape_field(kc.reasoning) + "\t" + text::escape_field(kc.source_problem_id) + "\t" +
           (kc.abstraction_level ? std::to_string(*kc.abstraction_level) : "") + "\n";
  }
  atomic_write(path, out);
}

std::vector<KnowledgeComponent> read_kc_set(const std::filesystem::path& path) {
  std::vector<KnowledgeComponent> out;
  for (auto& f : read_rows(path, kKcHeader)) {
    if (f.size() != 5) throw ParseError(path.string() + ": KC row needs 5 fields");
    KnowledgeComponent kc{f[0], f[1], f[2], f[3], std::nullopt};
    if (!f[4].empty()) kc.abstraction_level = to_int(f[4], path);
    if (text::trim(kc.name).empty()) throw ParseError(path.string() + ": KC " + kc.kc_id + " has an empty name");
    out.push_back(std::move(kc));
  }
  return out;
}

void write_clusters(const std::filesystem::path& path, const std::vector<ClusterLevel>& levels) {
  std::string out = std::string(kClusterHeader) + "\n";
  for (const auto& l : levels) {
    for (const auto& c : l.clusters) {
      std::vector<std::string> ids;
      for (const auto& id : c.member_kc_ids) ids.push_back(text::escape_field(id));
      out += std::to_string(l.n_clusters) + "\t" + std::to_string(c.cluster_id) + "\t" + text::escape_field(c.label) +
             "\t" + to_string(c.label_origin) + "\t" + text::join(ids, ";") + "\n";
    }
  }
  atomic_write(path, out);
}

std::vector<ClusterLevel> read_clusters(const std::filesystem::path& path) {
  std::vector<ClusterLevel> out;
  for (auto& f : read_rows(path, kClusterHeader)) {
    if (f.size() != 5) throw ParseError(path.string() + ": cluster row needs 5 fields");
    const int level = to_int(f[0], path);
    if (out.empty() || out.back().n_clusters != level) out.push_back({level, {}});
    KcCluster c;
    c.cluster_id = to_int(f[1], path);
    c.label = f[2];
    c.label_origin = label_origin_from_string(f[3]);
    c.member_kc_ids = text::split(f[4], ';');
    out.back().clusters.push_back(std::move(c));
  }
  return out;
}

void write_q_matrix(const std::filesystem::path& path, const QMatrix& q) {
  std::string out = "problem_id";
  for (const auto& k : q.kcs) out += "\t" + text::escape_field(k);
  out += "\n";
  for (std::size_t r = 0; r < q.problems.size(); ++r) {
    out += text::escape_field(q.problems[r]);
    for (auto v : q.incidence[r]) out += v ? "\t1" : "\t0";
    out += "\n";
  }
  atomic_write(path, out);
}

QMatrix read_q_matrix(const std::filesystem::path& path) {
  auto rows = read_rows(path, "");
  if (rows.empty() || rows.front().empty() || rows.front().front() != "problem_id") {
    throw ParseError(path.string() + ": Q-matrix header must start with problem_id");
  }
  QMatrix q;
  q.kcs.assign(rows.front().begin() + 1, rows.front().end());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != q.kcs.size() + 1) {
      throw ParseError(path.string() + ":" + std::to_string(r + 1) + ": wrong number of Q-matrix columns");
    }
    q.problems.push_back(rows[r].front());
    std::vector<std::uint8_t> row;
    for (std::size_t c = 1; c < rows[r].size(); ++c) {
      if (rows[r][c] != "0" && rows[r][c] != "1") {
        throw ParseError(path.string() + ":" + std::to_string(r + 1) + ": Q-matrix entries must be 0 or 1");
      }
      row.push_back(rows[r][c] == "1" ? 1 : 0);
    }
    q.incidence.push_back(std::move(row));
  }
  q.validate();
  return q;
}

namespace {

nlohmann::ordered_json node_json(const Ontology& o, std::size_t level, std::size_t index) {
  const OntologyNode& n = o.nodes[level][index];
  nlohmann::ordered_json j;
  j["label"] = n.label;
  j["abstraction_level"] = n.abstraction_level;
  j["cluster_id"] = n.cluster_id;
  auto children = nlohmann::ordered_json::array();
  for (int c : n.children) children.push_back(node_json(o, level + 1, static_cast<std::size_t>(c)));
  j["children"] = std::move(children);
  return j;
}

}  // namespace

std::string ontology_to_json(const Ontology& ontology) {
  nlohmann::ordered_json j;
  j["levels"] = ontology.levels;
  auto roots = nlohmann::ordered_json::array();
  if (!ontology.nodes.empty()) {
    for (std::size_t i = 0; i < ontology.nodes.front().size(); ++i) roots.push_back(node_json(ontology, 0, i));
  }
  j["roots"] = std::move(roots);
  return j.dump(2) + "\n";
}

void write_ontology(const std::filesystem::path& path, const Ontology& ontology) {
  atomic_write(path, ontology_to_json(ontology));
}

}  // namespace kcgen::kc
