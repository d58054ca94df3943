// SPDX-License-Identifier: Apache-2.0
#include "kcgen/core/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "kcgen/util/error.hpp"
#include "kcgen/util/fs.hpp"
#include "kcgen/util/log.hpp"
#include "kcgen/util/rng.hpp"
#include "kcgen/util/text.hpp"

namespace kcgen::data {

namespace {

struct TsvTable {
  std::vector<std::string> header;
  // (line number, fields)
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;

  std::optional<std::size_t> column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  }
};

TsvTable read_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  TsvTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = text::split(line, '\t');
    if (table.header.empty()) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(table.header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    for (auto& f : fields) f = text::unescape_field(f);
    table.rows.emplace_back(lineno, std::move(fields));
  }
  if (table.header.empty()) throw ParseError(path.string() + ": missing header row");
  return table;
}

std::size_t require_column(const TsvTable& t, std::string_view name,
                           const std::filesystem::path& path) {
  auto c = t.column(name);
  if (!c) throw ParseError(path.string() + ":1: missing column '" + std::string(name) + "'");
  return *c;
}

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

}  // namespace

const Problem* Dataset::find_problem(const std::string& problem_id) const {
  for (const auto& p : problems) {
    if (p.problem_id == problem_id) return &p;
  }
  return nullptr;
}

const Problem& Dataset::problem(const std::string& problem_id) const {
  const Problem* p = find_problem(problem_id);
  if (!p) throw IntegrityError("unknown problem id '" + problem_id + "'");
  return *p;
}

std::size_t Dataset::submission_count() const {
  std::size_t n = 0;
  for (const auto& s : sequences) n += s.responses.size();
  return n;
}

Dataset load_dataset(const std::filesystem::path& problems_path,
                     const std::filesystem::path& log_path) {
  Dataset ds;
  {
    auto t = read_tsv(problems_path);
    auto c_id = require_column(t, "problem_id", problems_path);
    auto c_stmt = require_column(t, "statement", problems_path);
    auto c_tags = t.column("human_kc_tags");
    std::unordered_set<std::string> seen;
    for (auto& [line, f] : t.rows) {
      Problem p;
      p.problem_id = f[c_id];
      p.statement = f[c_stmt];
      if (p.problem_id.empty()) throw ParseError(where(problems_path, line) + "empty problem_id");
      if (text::trim(p.statement).empty()) {
        throw ParseError(where(problems_path, line) + "empty statement for " + p.problem_id);
      }
      if (!seen.insert(p.problem_id).second) {
        throw ParseError(where(problems_path, line) + "duplicate problem_id " + p.problem_id);
      }
      if (c_tags && !f[*c_tags].empty()) {
        for (auto& tag : text::split(f[*c_tags], ';')) {
          auto trimmed = text::trim(tag);
          if (!trimmed.empty()) p.human_kc_tags.push_back(std::move(trimmed));
        }
      }
      ds.problems.push_back(std::move(p));
    }
  }

  auto t = read_tsv(log_path);
  auto c_student = require_column(t, "student_id", log_path);
  auto c_problem = require_column(t, "problem_id", log_path);
  auto c_correct = require_column(t, "correct", log_path);
  auto c_code = require_column(t, "code", log_path);
  auto c_order = t.column("order_index");
  auto c_time = t.column("timestamp");
  if (!c_order && !c_time) {
    throw ParseError(log_path.string() + ":1: need an order_index or timestamp column");
  }

  std::unordered_set<std::string> known;
  for (const auto& p : ds.problems) known.insert(p.problem_id);

  std::map<std::string, std::vector<std::pair<Submission, std::size_t>>> by_student;
  std::vector<std::string> student_order;
  for (auto& [line, f] : t.rows) {
    Submission s;
    s.student_id = f[c_student];
    s.problem_id = f[c_problem];
    s.code = f[c_code];
    if (s.student_id.empty()) throw ParseError(where(log_path, line) + "empty student_id");
    if (f[c_correct] == "1") {
      s.correct = true;
    } else if (f[c_correct] == "0") {
      s.correct = false;
    } else {
      throw ParseError(where(log_path, line) + "correct must be 0 or 1, got '" + f[c_correct] + "'");
    }
    if (c_order) {
      try {
        std::size_t pos = 0;
        s.order_index = std::stoll(f[*c_order], &pos);
        if (pos != f[*c_order].size() || s.order_index < 0) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw ParseError(where(log_path, line) + "invalid order_index '" + f[*c_order] + "'");
      }
    }
    if (c_time && !f[*c_time].empty()) s.timestamp = f[*c_time];
    if (!known.count(s.problem_id)) {
      throw IntegrityError(where(log_path, line) + "submission references unknown problem '" +
                           s.problem_id + "'");
    }
    auto [it, inserted] = by_student.try_emplace(s.student_id);
    if (inserted) student_order.push_back(s.student_id);
    it->second.emplace_back(std::move(s), line);
  }

  for (const auto& sid : student_order) {
    auto& subs = by_student[sid];
    if (c_order) {
      std::stable_sort(subs.begin(), subs.end(), [](const auto& a, const auto& b) {
        return a.first.order_index < b.first.order_index;
      });
      for (std::size_t i = 1; i < subs.size(); ++i) {
        if (subs[i].first.order_index == subs[i - 1].first.order_index) {
          throw ParseError(where(log_path, subs[i].second) + "duplicate order_index " +
                           std::to_string(subs[i].first.order_index) + " for student " + sid);
        }
      }
    } else {
      std::stable_sort(subs.begin(), subs.end(), [](const auto& a, const auto& b) {
        return a.first.timestamp.value_or("") < b.first.timestamp.value_or("");
      });
      for (std::size_t i = 0; i < subs.size(); ++i) subs[i].first.order_index = static_cast<std::int64_t>(i);
    }
    StudentSequence seq;
    seq.student_id = sid;
    for (auto& [s, line] : subs) seq.responses.push_back(std::move(s));
    ds.sequences.push_back(std::move(seq));
  }
  return ds;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& problems_path,
                  const std::filesystem::path& log_path) {
  std::ostringstream p;
  p << "problem_id\tstatement\thuman_kc_tags\n";
  for (const auto& pr : dataset.problems) {
    p << text::escape_field(pr.problem_id) << '\t' << text::escape_field(pr.statement) << '\t'
      << text::escape_field(text::join(pr.human_kc_tags, ";")) << '\n';
  }
  atomic_write(problems_path, p.str());

  bool any_time = false;
  for (const auto& s : dataset.sequences) {
    for (const auto& r : s.responses) any_time |= r.timestamp.has_value();
  }
  std::ostringstream l;
  l << "student_id\tproblem_id\torder_index\tcorrect\tcode";
  if (any_time) l << "\ttimestamp";
  l << '\n';
  for (const auto& s : dataset.sequences) {
    for (const auto& r : s.responses) {
      l << text::escape_field(r.student_id) << '\t' << text::escape_field(r.problem_id) << '\t'
        << r.order_index << '\t' << (r.correct ? '1' : '0') << '\t' << text::escape_field(r.code);
      if (any_time) l << '\t' << text::escape_field(r.timestamp.value_or(""));
      l << '\n';
    }
  }
  atomic_write(log_path, l.str());
}

std::vector<StudentSequence> filter_first_submissions(const std::vector<StudentSequence>& sequences) {
  std::vector<StudentSequence> out;
  out.reserve(sequences.size());
  for (const auto& seq : sequences) {
    // earliest order_index per problem, robust to unsorted input
    std::unordered_map<std::string, std::int64_t> first;
    for (const auto& r : seq.responses) {
      auto [it, inserted] = first.try_emplace(r.problem_id, r.order_index);
      if (!inserted) it->second = std::min(it->second, r.order_index);
    }
    StudentSequence kept;
    kept.student_id = seq.student_id;
    std::unordered_set<std::string> taken;
    for (const auto& r : seq.responses) {
      if (r.order_index == first[r.problem_id] && taken.insert(r.problem_id).second) {
        kept.responses.push_back(r);
      }
    }
    if (kept.responses.empty()) {
      log().warn("dropping student {} with no submissions", seq.student_id);
      continue;
    }
    out.push_back(std::move(kept));
  }
  return out;
}

std::array<std::size_t, 3> split_sizes(std::size_t n, SplitRatios ratios) {
  const std::array<double, 3> r{ratios.train, ratios.validation, ratios.test};
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> frac{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    double exact = r[i] * static_cast<double>(n);
    sizes[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    frac[i] = exact - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) sizes[order[k % 3]]++;
  for (int i = 0; i < 3; ++i) {
    while (sizes[i] == 0) {
      auto largest = std::max_element(sizes.begin(), sizes.end());
      --*largest;
      ++sizes[i];
    }
  }
  return sizes;
}

std::vector<DatasetSplit> make_splits(const std::vector<StudentSequence>& sequences, int n_splits,
                                      SplitRatios ratios, std::uint64_t seed) {
  if (n_splits < 1) throw DomainError("n_splits must be >= 1");
  if (ratios.train <= 0 || ratios.validation <= 0 || ratios.test <= 0) {
    throw DomainError("split ratios must be positive");
  }
  if (std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9) {
    throw DomainError("split ratios must sum to 1");
  }
  if (sequences.size() < 3) {
    throw DomainError("need at least 3 students to populate train/validation/test, got " +
                      std::to_string(sequences.size()));
  }
  std::vector<std::string> ids;
  for (const auto& s : sequences) ids.push_back(s.student_id);
  std::sort(ids.begin(), ids.end());
  const auto sizes = split_sizes(ids.size(), ratios);

  std::vector<DatasetSplit> splits;
  for (int k = 0; k < n_splits; ++k) {
    auto shuffled = ids;
    Rng rng(seed, static_cast<std::uint64_t>(k));
    rng.shuffle(shuffled);
    DatasetSplit split;
    split.split_index = k;
    split.seed = seed;
    auto it = shuffled.begin();
    split.train.assign(it, it + static_cast<std::ptrdiff_t>(sizes[0]));
    it += static_cast<std::ptrdiff_t>(sizes[0]);
    split.validation.assign(it, it + static_cast<std::ptrdiff_t>(sizes[1]));
    it += static_cast<std::ptrdiff_t>(sizes[1]);
    split.test.assign(it, shuffled.end());
    splits.push_back(std::move(split));
  }
  return splits;
}

std::vector<StudentSequence> select_students(const std::vector<StudentSequence>& sequences,
                                             const std::vector<std::string>& student_ids) {
  std::unordered_map<std::string, const StudentSequence*> index;
  for (const auto& s : sequences) index[s.student_id] = &s;
  std::vector<StudentSequence> out;
  for (const auto& id : student_ids) {
    auto it = index.find(id);
    if (it == index.end()) throw IntegrityError("unknown student id '" + id + "'");
    out.push_back(*it->second);
  }
  return out;
}

}  // namespace kcgen::data
