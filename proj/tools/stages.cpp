// SPDX-License-Identifier: Apache-2.0
#include "stages.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "kcgen/curves/curves.hpp"
#include "kcgen/eval/metrics.hpp"
#include "kcgen/util/error.hpp"
#include "kcgen/util/fs.hpp"
#include "kcgen/util/log.hpp"
#include "kcgen/util/text.hpp"

namespace kcgen::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

json opt_num(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

struct Context {
  const Settings& s;
  Manifest& manifest;
  fs::path dir;
  std::vector<fs::path> outputs;
  json info = json::object();

  fs::path out(const fs::path& rel) {
    outputs.push_back(rel);
    return dir / rel;
  }
  data::Dataset dataset() const { return data::load_dataset(dir / "data/problems.tsv", dir / "data/submissions.tsv"); }
  kc::QMatrix q_matrix() const { return kc::read_q_matrix(dir / "kc/q_matrix.tsv"); }
};

void llm_info(Context& c, const llm::LlmClient& client) {
  c.info["provider_calls"] = client.provider_calls();
  c.info["cache_hits"] = client.cache_hits();
  c.info["reprompts"] = client.reprompts();
}

// ---------------------------------------------------------------- ingest

void ingest(Context& c) {
  for (const auto& [key, path] : {std::pair{"data.problems", c.s.problems}, {"data.submissions", c.s.submissions}}) {
    if (!fs::exists(path)) throw ValidationError(std::string(key) + ": file not found: " + path.string());
  }
  const data::Dataset ds = data::load_dataset(c.s.problems, c.s.submissions);
  data::save_dataset(ds, c.out("data/problems.tsv"), c.out("data/submissions.tsv"));
  const auto seqs = c.s.first_submissions_only ? data::filter_first_submissions(ds.sequences) : ds.sequences;
  const auto splits = data::make_splits(seqs, c.s.n_splits, c.s.ratios, c.s.seed);
  json js = json::array();
  for (const auto& sp : splits) {
    js.push_back({{"split_index", sp.split_index},
                  {"seed", sp.seed},
                  {"train", sp.train},
                  {"validation", sp.validation},
                  {"test", sp.test}});
  }
  atomic_write(c.out("data/splits.json"), js.dump(2) + "\n");
  c.info = {{"problems", ds.problems.size()},
            {"students", ds.sequences.size()},
            {"submissions", ds.submission_count()},
            {"splits", splits.size()}};
  log().info("ingested {} problems, {} students, {} submissions", ds.problems.size(), ds.sequences.size(),
             ds.submission_count());
}

// ---------------------------------------------------------------- KC stages

void gen_kcs(Context& c) {
  const auto ds = c.dataset();
  auto client = make_client(c.s);
  auto embedder = make_embedder(c.s);
  const auto g = kc::generate_all_kcs(ds, *client, *embedder, c.s.kc);
  kc::write_kc_set(c.out("kc/initial_kcs.tsv"), g.initial_kcs);
  json reps = json::object();
  for (const auto& [pid, students] : g.representatives) reps[pid] = students;
  const json summary = {{"representatives", reps}, {"skipped_problems", g.skipped_problems},
                        {"flagged_problems", g.flagged_problems}};
  atomic_write(c.out("kc/generation.json"), summary.dump(2) + "\n");
  c.info["initial_kcs"] = g.initial_kcs.size();
  c.info["skipped_problems"] = g.skipped_problems.size();
  c.info["flagged_problems"] = g.flagged_problems.size();
  llm_info(c, *client);
  log().info("generated {} KCs over {} problems", g.initial_kcs.size(), ds.problems.size());
}

std::vector<int> wanted_levels(const Settings& s) {
  std::set<int> w(s.kc.ontology_levels.begin(), s.kc.ontology_levels.end());
  w.insert(s.kc.n_clusters);
  return {w.rbegin(), w.rend()};
}

void cluster(Context& c) {
  const auto kcs = kc::read_kc_set(c.dir / "kc/initial_kcs.tsv");
  if (kcs.empty()) throw PrerequisiteError("no initial KCs to cluster; check the gen-kcs stage output");
  auto embedder = make_embedder(c.s);
  const kc::KcHierarchy hierarchy(kcs, *embedder);
  std::vector<kc::ClusterLevel> levels;
  for (int n : wanted_levels(c.s)) {
    if (n > hierarchy.distinct_count()) {
      throw ValidationError((n == c.s.kc.n_clusters ? "kc.n_clusters" : "kc.ontology_levels") + std::string(": ") +
                            std::to_string(n) + " clusters requested but only " +
                            std::to_string(hierarchy.distinct_count()) + " distinct KC descriptions exist");
    }
    levels.push_back({n, hierarchy.cut(n)});
  }
  kc::write_clusters(c.out("kc/clusters_unlabeled.tsv"), levels);
  c.info["distinct_descriptions"] = hierarchy.distinct_count();
  c.info["levels"] = wanted_levels(c.s);
}

void label(Context& c) {
  const auto kcs = kc::read_kc_set(c.dir / "kc/initial_kcs.tsv");
  auto levels = kc::read_clusters(c.dir / "kc/clusters_unlabeled.tsv");
  auto client = make_client(c.s);
  json counts = json::object();
  for (auto& l : levels) {
    kc::label_clusters(*client, l.clusters, kcs);
    std::set<std::string> distinct;
    for (const auto& cl : l.clusters) distinct.insert(cl.label);
    counts[std::to_string(l.n_clusters)] = distinct.size();
  }
  kc::write_clusters(c.out("kc/clusters.tsv"), levels);
  c.info["distinct_labels"] = counts;
  llm_info(c, *client);
}

std::vector<kc::ClusterLevel> labeled_levels(const Context& c) { return kc::read_clusters(c.dir / "kc/clusters.tsv"); }

void qmatrix(Context& c) {
  const auto ds = c.dataset();
  const auto kcs = kc::read_kc_set(c.dir / "kc/initial_kcs.tsv");
  const kc::ClusterLevel* chosen = nullptr;
  const auto levels = labeled_levels(c);
  for (const auto& l : levels) {
    if (l.n_clusters == c.s.kc.n_clusters) chosen = &l;
  }
  if (!chosen) {
    throw PrerequisiteError("kc/clusters.tsv has no level " + std::to_string(c.s.kc.n_clusters) +
                            "; re-run `kcgen cluster` with the current config");
  }
  std::vector<std::string> ids;
  for (const auto& p : ds.problems) ids.push_back(p.problem_id);
  const auto q = kc::build_q_matrix(ids, kcs, chosen->clusters);
  kc::write_q_matrix(c.out("kc/q_matrix.tsv"), q);
  c.info["problems"] = q.problems.size();
  c.info["kcs"] = q.kcs.size();
}

void ontology(Context& c) {
  if (c.s.kc.ontology_levels.empty()) throw ValidationError("kc.ontology_levels: no levels configured");
  const auto levels = labeled_levels(c);
  std::vector<kc::ClusterLevel> chosen;
  for (int n : c.s.kc.ontology_levels) {
    const auto it = std::find_if(levels.begin(), levels.end(), [&](const auto& l) { return l.n_clusters == n; });
    if (it == levels.end()) {
      throw PrerequisiteError("kc/clusters.tsv has no level " + std::to_string(n) +
                              "; re-run `kcgen cluster` with the current config");
    }
    chosen.push_back(*it);
  }
  auto embedder = make_embedder(c.s);
  const auto onto = kc::build_ontology(chosen, *embedder);
  kc::write_ontology(c.out("kc/ontology.json"), onto);
  c.info["levels"] = onto.levels;
  std::size_t n_nodes = 0;
  for (const auto& level : onto.nodes) n_nodes += level.size();
  c.info["nodes"] = n_nodes;
}

// ---------------------------------------------------------------- KT stages

struct SplitData {
  std::vector<data::StudentSequence> train, validation, test;
};

SplitData split_data(const Context& c, const std::vector<data::StudentSequence>& seqs, int index) {
  const auto splits = read_splits(c.dir / "data/splits.json");
  if (index >= static_cast<int>(splits.size())) {
    throw PrerequisiteError("data/splits.json has no split " + std::to_string(index) + "; re-run `kcgen ingest`");
  }
  const auto& sp = splits[static_cast<std::size_t>(index)];
  std::set<std::string> present;
  for (const auto& s : seqs) present.insert(s.student_id);
  auto pick = [&](const std::vector<std::string>& ids) {
    std::vector<std::string> keep;
    for (const auto& id : ids) {
      if (present.count(id)) keep.push_back(id);
    }
    return data::select_students(seqs, keep);
  };
  return {pick(sp.train), pick(sp.validation), pick(sp.test)};
}

void train_stage(Context& c) {
  const auto ds = c.dataset();
  const auto q = c.q_matrix();
  const auto seqs = kt_sequences(ds, q, c.s);
  auto embedder = make_embedder(c.s);
  json per_split = json::array();
  for (int k : c.s.split_indices()) {
    const auto sd = split_data(c, seqs, k);
    if (sd.train.empty()) throw ValidationError("split " + std::to_string(k) + " has no training students");
    const fs::path base = split_dir("model", k);
    kt::KtModel model(data::Dataset{ds.problems, sd.train}, q, c.s.model, embedder);
    kt::TrainOptions opt;
    opt.checkpoint_dir = c.dir / base / "checkpoints";
    opt.diagnostics_dir = c.dir / base / "diagnostics";
    opt.on_epoch = [&](const kt::EpochLog& e) {
      log().info("split {} epoch {}: total {:.4f} (codegen {:.4f}, corr {:.4f}, kc {:.4f}){}", k, e.epoch,
                 e.train.total, e.train.l_codegen, e.train.l_corrpred, e.train.l_kc,
                 e.validation_auc ? fmt::format(", val AUC {:.4f}", *e.validation_auc) : std::string());
    };
    const auto result = kt::train(model, sd.train, sd.validation, c.s.train, opt);
    model.save(c.dir / base / "final");
    for (const char* f : {"model.json", "tokenizer.json", "params.bin"}) c.outputs.push_back(base / "final" / f);
    kt::write_train_log(c.out(base / "train_log.tsv"), result);
    per_split.push_back({{"split_index", k},
                         {"train_students", sd.train.size()},
                         {"validation_students", sd.validation.size()},
                         {"epochs", result.epochs.size()},
                         {"best_epoch", result.best_epoch}});
  }
  c.info["splits"] = std::move(per_split);
  c.info["lambda"] = c.s.train.lambda;
}

json report_json(const eval::MetricReport& r) {
  json j = {{"split_index", r.split_index}, {"n_examples", r.n_examples}, {"auc", r.auc},
            {"f1", r.f1},                   {"accuracy", r.accuracy},     {"codebleu", opt_num(r.codebleu)}};
  if (r.auc_std) {
    j["auc_std"] = *r.auc_std;
    j["f1_std"] = opt_num(r.f1_std);
    j["accuracy_std"] = opt_num(r.accuracy_std);
    j["codebleu_std"] = opt_num(r.codebleu_std);
  }
  return j;
}

eval::MetricReport score(int split, std::span<const double> scores, std::span<const int> labels, double threshold) {
  eval::MetricReport r;
  r.split_index = split;
  r.n_examples = scores.size();
  r.auc = eval::auc(scores, labels);
  const auto cls = eval::f1_and_accuracy(scores, labels, threshold);
  r.f1 = cls.f1;
  r.accuracy = cls.accuracy;
  return r;
}

std::string baseline_name(kt::BaselineKind k) { return k == kt::BaselineKind::random ? "random" : "majority"; }

void evaluate(Context& c) {
  const auto ds = c.dataset();
  const auto q = c.q_matrix();
  const auto seqs = kt_sequences(ds, q, c.s);
  auto embedder = make_embedder(c.s);
  std::map<std::string, std::vector<eval::MetricReport>> by_method;
  json splits = json::array();
  for (int k : c.s.split_indices()) {
    const auto sd = split_data(c, seqs, k);
    if (sd.test.empty()) throw ValidationError("split " + std::to_string(k) + " has no test students");
    auto model = kt::KtModel::load(c.dir / split_dir("model", k) / "final", embedder);
    const auto preds = kt::predict_all(*model, sd.test, c.s.eval.generate_code);
    const fs::path base = split_dir("eval", k);
    kt::write_predictions(c.out(base / "predictions.tsv"), preds);
    kt::write_mastery_report(c.out(base / "mastery.tsv"), preds, q.kcs);

    std::vector<double> a_hat, y_hat;
    std::vector<int> labels;
    for (const auto& p : preds) {
      a_hat.push_back(p.a_hat);
      y_hat.push_back(p.y_hat);
      labels.push_back(p.label);
    }
    auto kt_report = score(k, a_hat, labels, c.s.eval.threshold);
    if (c.s.eval.generate_code) {
      double sum = 0;
      for (const auto& p : preds) sum += eval::codebleu(p.generated_code, p.true_code, c.s.eval.language, c.s.eval.codebleu);
      kt_report.codebleu = preds.empty() ? 0.0 : sum / static_cast<double>(preds.size());
    }
    by_method["kt"].push_back(kt_report);
    json entry = {{"split_index", k}, {"kt", report_json(kt_report)}};
    entry["kt_mastery_auc"] = eval::auc(y_hat, labels);
    const auto queries = kt::queries_of(sd.test);
    for (auto b : c.s.eval.baselines) {
      const auto scores = kt::baseline_predict(b, sd.train, queries, c.s.seed + static_cast<std::uint64_t>(k),
                                               c.s.eval.random_uniform_draws);
      std::vector<int> ql;
      for (const auto& qq : queries) ql.push_back(qq.label);
      const auto r = score(k, scores, ql, c.s.eval.threshold);
      by_method[baseline_name(b)].push_back(r);
      entry[baseline_name(b)] = report_json(r);
    }
    log().info("split {}: AUC {:.4f}, F1 {:.4f}, accuracy {:.4f}{}", k, kt_report.auc, kt_report.f1,
               kt_report.accuracy,
               kt_report.codebleu ? fmt::format(", CodeBLEU {:.4f}", *kt_report.codebleu) : std::string());
    splits.push_back(std::move(entry));
  }
  json aggregate = json::object();
  for (const auto& [method, reports] : by_method) aggregate[method] = report_json(eval::aggregate(reports));
  json paired = json::object();
  if (by_method["kt"].size() >= 2) {
    for (auto b : c.s.eval.baselines) {
      std::vector<double> x, y;
      for (const auto& r : by_method["kt"]) x.push_back(r.auc);
      for (const auto& r : by_method[baseline_name(b)]) y.push_back(r.auc);
      const auto t = eval::paired_t_test(x, y);
      paired["kt_vs_" + baseline_name(b) + "_auc"] = {
          {"mean_difference", t.mean_difference}, {"t", t.t_statistic}, {"p_value", t.p_value}, {"n", t.n}};
    }
  }
  const json report = {{"threshold", c.s.eval.threshold},
                       {"splits", std::move(splits)},
                       {"aggregate", std::move(aggregate)},
                       {"paired_tests", std::move(paired)}};
  atomic_write(c.out("eval/report.json"), report.dump(2) + "\n");
}

// ---------------------------------------------------------------- curves

void curves_stage(Context& c) {
  const auto ds = c.dataset();
  const auto q = c.q_matrix();
  auto seqs = kt_sequences(ds, q, c.s);
  const int model_split = c.s.split_indices().front();
  if (c.s.curves.scope == "test") seqs = split_data(c, seqs, model_split).test;
  auto client = make_client(c.s);
  const auto labels = curves::label_all_errors(*client, ds, seqs, q, c.s.kc.language, c.s.llm.concurrency);
  curves::write_error_labels(c.out("curves/error_labels.tsv"), labels);
  const auto obs = curves::build_observations(seqs, q, labels);

  auto embedder = make_embedder(c.s);
  auto model = kt::KtModel::load(c.dir / split_dir("model", model_split) / "final", embedder);
  const auto mastery = curves::mastery_table(*model, seqs);

  std::map<std::string, int> counts;
  for (const auto& o : obs) counts[o.kc] += 1;
  std::string index = "kc_index\tkc\tn_observations\tn_points\ttrend\tp_value\tpredicted_r2\tfile\n";
  std::vector<curves::PfaFit> fits;
  double pred_num = 0, pred_den = 0;
  json trends = json::object();
  for (std::size_t k = 0; k < q.kcs.size(); ++k) {
    const std::string& name = q.kcs[k];
    if (!counts.count(name)) continue;
    auto curve = curves::empirical_curve(obs, name, c.s.curves.pfa.min_students);
    curves::attach_predicted(curve, obs, mastery, q.kcs);
    char file[32];
    std::snprintf(file, sizeof file, "curves/kc-%03zu.tsv", k);
    curves::write_curve(c.out(file), curve);
    std::vector<double> rates;
    for (const auto& p : curve.points) rates.push_back(p.error_rate);
    const auto trend = curves::mann_kendall(rates, c.s.curves.trend_alpha);
    const auto r2 = curves::weighted_curve_r2(curve);
    if (r2) {
      pred_num += counts[name] * *r2;
      pred_den += counts[name];
    }
    index += std::to_string(k) + "\t" + text::escape_field(name) + "\t" + std::to_string(counts[name]) + "\t" +
             std::to_string(curve.points.size()) + "\t" + curves::to_string(trend.trend) + "\t" + num(trend.p_value) +
             "\t" + (r2 ? num(*r2) : "") + "\t" + fs::path(file).filename().string() + "\n";
    trends[curves::to_string(trend.trend)] = trends.value(curves::to_string(trend.trend), 0) + 1;
    if (counts[name] >= c.s.curves.pfa.min_observations) fits.push_back(curves::fit_pfa(obs, name, c.s.curves.pfa));
  }
  atomic_write(c.out("curves/index.tsv"), index);
  curves::write_pfa_summary(c.out("curves/pfa.tsv"), fits);

  std::optional<double> pfa_r2;
  try {
    pfa_r2 = curves::weighted_r2(fits);
  } catch (const DomainError&) {
    log().warn("no converged PFA fit with a defined R²");
  }
  const auto converged = std::count_if(fits.begin(), fits.end(), [](const auto& f) { return f.converged; });
  const json summary = {{"scope", c.s.curves.scope},
                        {"model_split", model_split},
                        {"labeled_submissions", labels.labels.size()},
                        {"dropped_submissions", labels.dropped.size()},
                        {"observations", obs.size()},
                        {"kcs_with_observations", counts.size()},
                        {"pfa_fits", fits.size()},
                        {"pfa_converged", converged},
                        {"pfa_weighted_r2", opt_num(pfa_r2)},
                        {"predicted_curve_weighted_r2", pred_den > 0 ? json(pred_num / pred_den) : json(nullptr)},
                        {"empirical_trends", trends}};
  atomic_write(c.out("curves/summary.json"), summary.dump(2) + "\n");
  llm_info(c, *client);
}

// ---------------------------------------------------------------- report

void report(Context& c) {
  const auto eval_report = json::parse(read_file(c.dir / "eval/report.json"));
  const auto curve_summary = json::parse(read_file(c.dir / "curves/summary.json"));
  const auto& stages = c.manifest.doc()["stages"];
  json r;
  r["data"] = stages["ingest"]["info"];
  r["kc"] = {{"generation", stages["gen-kcs"]["info"]},
             {"clustering", stages["cluster"]["info"]},
             {"labels", stages["label"]["info"]},
             {"q_matrix", stages["qmatrix"]["info"]}};
  if (stages.contains("ontology")) r["kc"]["ontology"] = stages["ontology"]["info"];
  r["training"] = stages["train"]["info"];
  r["evaluation"] = eval_report["aggregate"];
  r["paired_tests"] = eval_report["paired_tests"];
  r["curves"] = curve_summary;
  atomic_write(c.out("report/report.json"), r.dump(2) + "\n");

  auto cell = [](const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::string("-");
    std::string s = fmt::format("{:.3f}", j[key].get<double>());
    const std::string sd = std::string(key) + "_std";
    if (j.contains(sd) && !j[sd].is_null()) s += fmt::format(" ± {:.3f}", j[sd].get<double>());
    return s;
  };
  std::string md = "# Run report\n\n";
  md += fmt::format("Data: {} problems, {} students, {} submissions.\n\n", r["data"]["problems"].get<int>(),
                    r["data"]["students"].get<int>(), r["data"]["submissions"].get<int>());
  md += fmt::format("KCs: {} generated, {} distinct descriptions, Q-matrix {} problems x {} KCs.\n\n",
                    r["kc"]["generation"]["initial_kcs"].get<int>(),
                    r["kc"]["clustering"]["distinct_descriptions"].get<int>(), r["kc"]["q_matrix"]["problems"].get<int>(),
                    r["kc"]["q_matrix"]["kcs"].get<int>());
  md += "| Method | AUC | F1 | Accuracy | CodeBLEU |\n|---|---|---|---|---|\n";
  for (const auto& [method, m] : r["evaluation"].items()) {
    md += "| " + method + " | " + cell(m, "auc") + " | " + cell(m, "f1") + " | " + cell(m, "accuracy") + " | " +
          cell(m, "codebleu") + " |\n";
  }
  md += "\nLearning curves: " + std::to_string(curve_summary["kcs_with_observations"].get<int>()) + " KCs, " +
        std::to_string(curve_summary["pfa_converged"].get<int>()) + " converged PFA fits, weighted R² " +
        cell(curve_summary, "pfa_weighted_r2") + ".\n";
  atomic_write(c.out("report/report.md"), md);
}

}  // namespace

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"ingest",   "gen-kcs", "cluster",  "label",  "qmatrix",
                                                 "ontology", "train",   "evaluate", "curves", "report"};
  return names;
}

std::shared_ptr<llm::LlmClient> make_client(const Settings& s) {
  std::shared_ptr<llm::Provider> provider;
  if (s.llm.provider == "mock") {
    provider = std::make_shared<llm::MockProvider>(s.llm.mock);
  } else {
    provider = std::make_shared<llm::HttpProvider>(s.llm.http);
  }
  auto cfg = s.llm.client;
  if (s.llm.cache) cfg.cache_dir = s.run_dir / "cache" / "llm";
  return std::make_shared<llm::LlmClient>(provider, cfg);
}

std::shared_ptr<embed::Embedder> make_embedder(const Settings& s) {
  std::shared_ptr<embed::Embedder> inner;
  if (s.embed.kind == "hashing") {
    inner = std::make_shared<embed::HashingEmbedder>(s.embed.dimension);
  } else {
    inner = std::make_shared<embed::HttpEmbedder>(
        embed::HttpEmbedderConfig{s.embed.base_url, s.embed.text_model, s.embed.code_model, s.embed.api_key_env});
  }
  if (!s.embed.cache) return inner;
  return std::make_shared<embed::CachingEmbedder>(
      inner, s.embed.kind == "hashing" ? std::nullopt : std::optional<fs::path>(s.run_dir / "cache" / "embed"));
}

std::vector<data::StudentSequence> kt_sequences(const data::Dataset& ds, const kc::QMatrix& q, const Settings& s) {
  const auto base = s.first_submissions_only ? data::filter_first_submissions(ds.sequences) : ds.sequences;
  std::vector<data::StudentSequence> out;
  std::size_t dropped = 0;
  for (const auto& seq : base) {
    data::StudentSequence kept{seq.student_id, {}};
    for (const auto& r : seq.responses) {
      if (q.problem_index(r.problem_id) >= 0) {
        kept.responses.push_back(r);
      } else {
        ++dropped;
      }
    }
    if (!kept.responses.empty()) out.push_back(std::move(kept));
  }
  if (dropped) log().warn("{} submissions on problems outside the Q-matrix are left out", dropped);
  return out;
}

std::vector<data::DatasetSplit> read_splits(const fs::path& path) {
  std::vector<data::DatasetSplit> out;
  const auto j = json::parse(read_file(path));
  for (const auto& e : j) {
    out.push_back({e.at("split_index").get<int>(), e.at("seed").get<std::uint64_t>(),
                   e.at("train").get<std::vector<std::string>>(), e.at("validation").get<std::vector<std::string>>(),
                   e.at("test").get<std::vector<std::string>>()});
  }
  return out;
}

fs::path split_dir(const std::string& base, int split_index) {
  return fs::path(base) / ("split-" + std::to_string(split_index));
}

void run_stage(const std::string& stage, const Settings& settings) {
  RunLock lock(settings.run_dir);
  Manifest manifest(settings);
  manifest.begin(stage);
  Context c{settings, manifest, settings.run_dir, {}, json::object()};
  log().info("stage `{}` in {}", stage, settings.run_dir.string());
  if (stage == "ingest") {
    ingest(c);
  } else if (stage == "gen-kcs") {
    gen_kcs(c);
  } else if (stage == "cluster") {
    cluster(c);
  } else if (stage == "label") {
    label(c);
  } else if (stage == "qmatrix") {
    qmatrix(c);
  } else if (stage == "ontology") {
    ontology(c);
  } else if (stage == "train") {
    train_stage(c);
  } else if (stage == "evaluate") {
    evaluate(c);
  } else if (stage == "curves") {
    curves_stage(c);
  } else if (stage == "report") {
    report(c);
  } else {
    throw ValidationError("unknown stage " + stage);
  }
  manifest.complete(stage, c.outputs, std::move(c.info));
  log().info("stage `{}` done: {} artifacts", stage, c.outputs.size());
}

}  // namespace kcgen::cli
