// SPDX-License-Identifier: Apache-2.0
#include "plots.hpp"

#include <algorithm>
#include <map>

#include "kcgen/core/synthetic.hpp"
#include "kcgen/util/error.hpp"
#include "kcgen/util/fs.hpp"
#include "kcgen/util/log.hpp"
#include "kcgen/util/text.hpp"
#include "run_dir.hpp"
#include "stages.hpp"

namespace kcgen::cli {

namespace fs = std::filesystem;

namespace {

std::vector<std::vector<std::string>> read_tsv(const fs::path& path, std::vector<std::string>* header) {
  const auto lines = text::split(read_file(path), '\n');
  if (lines.empty()) throw ParseError(path.string() + ": empty file");
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::vector<std::string> f;
    for (const auto& x : text::split(lines[i], '\t')) f.push_back(text::unescape_field(x));
    rows.push_back(std::move(f));
  }
  if (header) *header = text::split(lines[0], '\t');
  return rows;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::vector<fs::path> learning_curves(const Settings& s, Manifest& m) {
  m.require("curves");
  auto rows = read_tsv(s.run_dir / "curves/index.tsv", nullptr);
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return std::stoi(a[2]) > std::stoi(b[2]); });
  rows.resize(std::min<std::size_t>(rows.size(), static_cast<std::size_t>(s.plot_kcs)));
  std::vector<fs::path> outs;
  std::string index = "file\tkc\tn_observations\n";
  for (const auto& r : rows) {
    const auto curve = read_tsv(s.run_dir / "curves" / r[7], nullptr);
    std::string out = "attempt\tempirical\tpredicted\tn\n";
    for (const auto& p : curve) out += p[0] + "\t" + p[1] + "\t" + p[3] + "\t" + p[2] + "\n";
    const fs::path rel = fs::path("plots/learning-curves") / r[7];
    atomic_write(s.run_dir / rel, out);
    outs.push_back(rel);
    index += r[7] + "\t" + text::escape_field(r[1]) + "\t" + r[2] + "\n";
    log().info("learning curve for \"{}\" -> {}", r[1], rel.string());
  }
  atomic_write(s.run_dir / "plots/learning-curves-index.tsv", index);
  outs.emplace_back("plots/learning-curves-index.tsv");
  return outs;
}

std::vector<fs::path> loss_curves(const Settings& s, Manifest& m) {
  m.require("train");
  std::vector<fs::path> outs;
  const double lambda = m.doc()["stages"]["train"]["info"].value("lambda", s.train.lambda);
  for (int k : s.split_indices()) {
    const auto rows = read_tsv(s.run_dir / split_dir("model", k) / "train_log.tsv", nullptr);
    std::string out = "epoch\tphase\tl_codegen\tl_corrpred\tl_kc\ttotal\tlambda\n";
    for (const auto& r : rows) {
      out += r[0] + "\ttrain\t" + r[1] + "\t" + r[2] + "\t" + r[3] + "\t" + r[4] + "\t" + num(lambda) + "\n";
      if (!r[5].empty()) {
        out += r[0] + "\tvalidation\t" + r[5] + "\t" + r[6] + "\t" + r[7] + "\t" + r[8] + "\t" + num(lambda) + "\n";
      }
    }
    const fs::path rel = fs::path("plots") / ("loss-curves-split-" + std::to_string(k) + ".tsv");
    atomic_write(s.run_dir / rel, out);
    outs.push_back(rel);
  }
  return outs;
}

std::vector<fs::path> mastery_heatmap(const Settings& s, Manifest& m) {
  m.require("evaluate");
  const int k = s.split_indices().front();
  const auto rows = read_tsv(s.run_dir / split_dir("eval", k) / "mastery.tsv", nullptr);
  if (rows.empty()) throw PrerequisiteError("no mastery rows in the evaluate output");
  const std::string student = s.heatmap_student.empty() ? rows.front()[0] : s.heatmap_student;
  std::map<int, std::vector<std::pair<std::string, std::string>>> by_t;
  std::vector<std::string> kcs;
  for (const auto& r : rows) {
    if (r[0] != student) continue;
    const int t = std::stoi(r[1]);
    by_t[t].emplace_back(r[2], r[3]);
    if (std::find(kcs.begin(), kcs.end(), r[2]) == kcs.end()) kcs.push_back(r[2]);
  }
  if (by_t.empty()) throw ValidationError("plots.heatmap_student: no evaluated student \"" + student + "\"");
  std::string out = "timestep";
  for (const auto& kc : kcs) out += "\t" + text::escape_field(kc);
  out += "\n";
  for (const auto& [t, cells] : by_t) {
    out += std::to_string(t);
    for (const auto& kc : kcs) {
      const auto it = std::find_if(cells.begin(), cells.end(), [&](const auto& c) { return c.first == kc; });
      out += "\t" + (it == cells.end() ? std::string() : it->second);
    }
    out += "\n";
  }
  std::string safe = student;
  for (char& ch : safe) {
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_') ch = '_';
  }
  const fs::path rel = fs::path("plots") / ("mastery-heatmap-" + safe + ".tsv");
  atomic_write(s.run_dir / rel, out);
  return {rel};
}

}  // namespace

void emit_plot_data(const Settings& s, const std::string& kind) {
  RunLock lock(s.run_dir);
  Manifest m(s);
  std::vector<fs::path> outs;
  std::string source;
  if (kind == "learning-curves") {
    outs = learning_curves(s, m);
    source = "curves";
  } else if (kind == "loss-curves") {
    outs = loss_curves(s, m);
    source = "train";
  } else if (kind == "mastery-heatmap") {
    outs = mastery_heatmap(s, m);
    source = "evaluate";
  } else {
    throw ValidationError("unknown plot kind " + kind + "; use learning-curves, loss-curves or mastery-heatmap");
  }
  m.record_plot(kind, source, outs);
  for (const auto& o : outs) log().info("wrote {}", (s.run_dir / o).string());
}

void write_synthetic(const fs::path& out, int students, int problems, std::uint64_t seed) {
  data::synth::CourseConfig cc;
  cc.n_students = students;
  cc.n_problems = problems;
  cc.seed = seed;
  const auto ds = data::synth::generate_course(cc);
  data::save_dataset(ds, out / "problems.tsv", out / "submissions.tsv");
  log().info("wrote {} problems and {} submissions to {}", ds.problems.size(), ds.submission_count(), out.string());
}

}  // namespace kcgen::cli
