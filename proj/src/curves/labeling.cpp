// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <exception>
#include <thread>

#include "kcgen/curves/curves.hpp"
#include "kcgen/llm/parsers.hpp"
#include "kcgen/llm/prompt.hpp"
#include "kcgen/util/error.hpp"
#include "kcgen/util/fs.hpp"
#include "kcgen/util/log.hpp"
#include "kcgen/util/text.hpp"

namespace kcgen::curves {

std::optional<KcErrors> label_kc_errors(llm::LlmClient& client, const data::Problem& problem,
                                        const std::vector<std::string>& associated_kcs,
                                        const data::Submission& submission, const std::string& language) {
  if (associated_kcs.empty()) throw DomainError("problem " + problem.problem_id + " has no associated KCs");
  KcErrors out;
  if (submission.correct) {
    for (const auto& k : associated_kcs) out[k] = 0;
    return out;
  }
  const auto request = llm::render_prompt(llm::TemplateId::kc_error_label, {{"language", language},
                                                                           {"problem", problem.statement},
                                                                           {"code", submission.code},
                                                                           {"kcs", llm::format_list(associated_kcs)}});
  try {
    auto parsed = client.complete_structured(
        request, [&](const std::string& r) { return llm::parse_kc_error_json(r, associated_kcs); });
    return std::move(parsed.labels);
  } catch (const StructuredOutputError& e) {
    log().warn("KC error labels for {} on {} dropped: {}", submission.student_id, problem.problem_id, e.what());
    return std::nullopt;
  }
}

ErrorLabelSet label_all_errors(llm::LlmClient& client, const data::Dataset& dataset,
                               const std::vector<data::StudentSequence>& sequences, const kc::QMatrix& q,
                               const std::string& language, int concurrency) {
  struct Job {
    const data::Submission* submission;
    const data::Problem* problem;
    std::vector<std::string> kcs;
    std::optional<KcErrors> result;
    std::exception_ptr error;
  };
  std::vector<Job> jobs;
  for (const auto& seq : sequences) {
    for (const auto& s : seq.responses) {
      const auto cols = q.kcs_of(s.problem_id);
      if (cols.empty()) continue;
      Job j{&s, &dataset.problem(s.problem_id), {}, std::nullopt, nullptr};
      for (int c : cols) j.kcs.push_back(q.kcs[static_cast<std::size_t>(c)]);
      jobs.push_back(std::move(j));
    }
  }
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      auto& j = jobs[i];
      try {
        j.result = label_kc_errors(client, *j.problem, j.kcs, *j.submission, language);
      } catch (...) {
        j.error = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, concurrency);
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  ErrorLabelSet set;
  for (auto& j : jobs) {
    if (j.error) std::rethrow_exception(j.error);
    const SubmissionKey key{j.submission->student_id, j.submission->order_index};
    if (j.result) {
      set.labels.emplace(key, std::move(*j.result));
    } else {
      set.dropped.push_back(key);
    }
  }
  return set;
}

void write_error_labels(const std::filesystem::path& path, const ErrorLabelSet& set) {
  std::string out = "student_id\torder_index\tkc\terror\n";
  for (const auto& [key, errors] : set.labels) {
    for (const auto& [kc, e] : errors) {
      out += text::escape_field(key.student_id) + "\t" + std::to_string(key.order_index) + "\t" +
             text::escape_field(kc) + "\t" + std::to_string(e) + "\n";
    }
  }
  for (const auto& key : set.dropped) {
    out += text::escape_field(key.student_id) + "\t" + std::to_string(key.order_index) + "\t\t-\n";
  }
  atomic_write(path, out);
}

ErrorLabelSet read_error_labels(const std::filesystem::path& path) {
  const auto lines = text::split(read_file(path), '\n');
  if (lines.empty() || lines[0] != "student_id\torder_index\tkc\terror") {
    throw ParseError(path.string() + ": unexpected header");
  }
  ErrorLabelSet set;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = text::split(lines[i], '\t');
    if (f.size() != 4) throw ParseError(path.string() + ":" + std::to_string(i + 1) + ": expected 4 fields");
    SubmissionKey key{text::unescape_field(f[0]), 0};
    try {
      key.order_index = std::stoll(f[1]);
    } catch (const std::exception&) {
      throw ParseError(path.string() + ":" + std::to_string(i + 1) + ": bad order_index");
    }
    if (f[3] == "-") {
      set.dropped.push_back(key);
    } else if (f[3] == "0" || f[3] == "1") {
      set.labels[key][text::unescape_field(f[2])] = f[3] == "1";
    } else {
      throw ParseError(path.string() + ":" + std::to_string(i + 1) + ": error must be 0 or 1");
    }
  }
  return set;
}

}  // namespace kcgen::curves
