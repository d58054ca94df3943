// SPDX-License-Identifier: Apache-2.0
#include "kcgen/kt/train.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <sstream>

#include "kcgen/eval/metrics.hpp"
#include "kcgen/util/error.hpp"
#include "kcgen/util/fs.hpp"
#include "kcgen/util/log.hpp"
#include "kcgen/util/rng.hpp"
#include "kcgen/util/text.hpp"

namespace kcgen::kt {

void AdamW::step(std::span<Parameter* const> params) {
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (Parameter* p : params) {
    auto& s = state_[p];
    if (s.m.size() == 0) {
      s.m = Matrix::Zero(p->value.rows(), p->value.cols());
      s.v = Matrix::Zero(p->value.rows(), p->value.cols());
    }
    s.m = b1_ * s.m + (1.0 - b1_) * p->grad;
    s.v = b2_ * s.v + (1.0 - b2_) * p->grad.cwiseProduct(p->grad);
    p->value *= 1.0 - lr_ * wd_;
    p->value.array() -= lr_ * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + eps_);
  }
}

void RmsProp::step(std::span<Parameter* const> params) {
  for (Parameter* p : params) {
    auto& sq = square_[p];
    if (sq.size() == 0) sq = Matrix::Zero(p->value.rows(), p->value.cols());
    sq = alpha_ * sq + (1.0 - alpha_) * p->grad.cwiseProduct(p->grad);
    p->value.array() -= lr_ * p->grad.array() / (sq.array().sqrt() + eps_);
  }
}

TrainingConfig TrainingConfig::large_backbone_preset() {
  TrainingConfig c;
  c.lr_backbone = 1e-5;
  c.lr_tracker = 5e-4;
  c.lr_heads = 1e-4;
  return c;
}

void TrainingConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("lambda must lie in [0, 1]");
  if (lr_backbone < 0 || lr_tracker < 0 || lr_heads < 0) throw ValidationError("learning rates must be >= 0");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (epochs < 0) throw ValidationError("epochs must be >= 0");
  if (patience < 0) throw ValidationError("patience must be >= 0");
  if (clip_norm < 0) throw ValidationError("clip_norm must be >= 0");
}

namespace {

Var sum_of(Tape& tape, const std::vector<Var>& xs) {
  if (xs.empty()) return tape.constant(Matrix::Zero(1, 1));
  Var s = xs.front();
  for (std::size_t i = 1; i < xs.size(); ++i) s = ad::add(s, xs[i]);
  return s;
}

void snapshot(KtModel& model, std::vector<Matrix>& out) {
  out.clear();
  for (auto* p : model.parameters()) out.push_back(p->value);
}

void restore(KtModel& model, const std::vector<Matrix>& saved) {
  auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = saved[i];
}

std::string fmt_double(double v) {
  std::ostringstream o;
  o.precision(10);
  o << v;
  return o.str();
}

void dump_batch(const std::filesystem::path& dir, int epoch, int batch_index,
                std::span<const data::StudentSequence* const> batch, const BatchValues& loss) {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["batch"] = batch_index;
  auto students = nlohmann::ordered_json::array();
  for (const auto* s : batch) {
    auto resp = nlohmann::ordered_json::array();
    for (const auto& r : s->responses) resp.push_back({{"problem_id", r.problem_id}, {"correct", r.correct}});
    students.push_back({{"student_id", s->student_id}, {"responses", resp}});
  }
  j["students"] = std::move(students);
  j["l_codegen"] = fmt_double(loss.loss.l_codegen);
  j["l_corrpred"] = fmt_double(loss.loss.l_corrpred);
  j["l_kc"] = fmt_double(loss.loss.l_kc);
  j["a_hat"] = loss.a_hat;
  j["y_hat"] = loss.y_hat;
  std::filesystem::create_directories(dir);
  atomic_write(dir / ("nonfinite-epoch" + std::to_string(epoch) + "-batch" + std::to_string(batch_index) + ".json"),
               j.dump(2) + "\n");
}

}  // namespace

BatchLoss batch_loss(KtModel& model, Binder& b, std::span<const data::StudentSequence* const> batch, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("lambda must lie in [0, 1]");
  std::vector<Var> cg, cp, kc;
  BatchLoss out;
  for (const auto* seq : batch) {
    for (const StepTerms& st : model.forward_sequence(b, *seq)) {
      cg.push_back(st.l_codegen);
      cp.push_back(ad::binary_cross_entropy(st.a_hat, st.label, kBceEps));
      kc.push_back(ad::binary_cross_entropy(st.y_hat, st.label, kBceEps));
      out.a_hat.push_back(st.a_hat.scalar());
      out.y_hat.push_back(st.y_hat.scalar());
      out.labels.push_back(static_cast<int>(st.label));
    }
  }
  out.n_submissions = cg.size();
  const double inv = out.n_submissions ? 1.0 / static_cast<double>(out.n_submissions) : 0.0;
  Tape& tape = b.tape();
  out.l_codegen = ad::scale(sum_of(tape, cg), inv);
  out.l_corrpred = ad::scale(sum_of(tape, cp), inv);
  out.l_kc = ad::scale(sum_of(tape, kc), inv);
  out.total = ad::add(ad::scale(ad::add(out.l_codegen, out.l_corrpred), lambda), ad::scale(out.l_kc, 1.0 - lambda));
  return out;
}

BatchValues run_batch(KtModel& model, std::span<const data::StudentSequence* const> batch, double lambda,
                      bool with_gradients) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("lambda must lie in [0, 1]");
  std::size_t total = 0;
  for (const auto* seq : batch) total += seq->responses.size();
  BatchValues out;
  out.n_submissions = total;
  if (total == 0) return out;
  const double inv = 1.0 / static_cast<double>(total);
  double cg_sum = 0, cp_sum = 0, kc_sum = 0;
  for (const auto* seq : batch) {
    Tape tracker_tape(with_gradients);
    Binder bt(tracker_tape);
    const auto masteries = model.sequence_masteries(bt, *seq);
    std::vector<Var> surrogate;
    for (std::size_t t = 0; t < masteries.size(); ++t) {
      const double label = seq->responses[t].correct ? 1.0 : 0.0;
      {
        Tape tape(with_gradients);
        Binder b(tape);
        const Var m = tape.input(masteries[t].value());
        const StepTerms st = model.submission_terms(b, *seq, t, m);
        const Var cp = ad::binary_cross_entropy(st.a_hat, label, kBceEps);
        cg_sum += st.l_codegen.scalar();
        cp_sum += cp.scalar();
        out.a_hat.push_back(st.a_hat.scalar());
        if (with_gradients) {
          tape.backward(ad::scale(ad::add(st.l_codegen, cp), lambda * inv));
          if (m.grad().size() > 0) {
            surrogate.push_back(ad::sum_all(ad::mul(masteries[t], tracker_tape.constant(m.grad()))));
          }
        }
      }
      const Var y_hat = aggregate_kc_mastery(masteries[t], model.q_row(seq->responses[t].problem_id));
      const Var kc = ad::binary_cross_entropy(y_hat, label, kBceEps);
      kc_sum += kc.scalar();
      out.y_hat.push_back(y_hat.scalar());
      out.labels.push_back(static_cast<int>(label));
      if (with_gradients) surrogate.push_back(ad::scale(kc, (1.0 - lambda) * inv));
    }
    if (with_gradients && !surrogate.empty()) tracker_tape.backward(sum_of(tracker_tape, surrogate));
  }
  out.loss = total_loss(cg_sum * inv, cp_sum * inv, kc_sum * inv, lambda);
  return out;
}

TrainResult train(KtModel& model, const std::vector<data::StudentSequence>& train_set,
                  const std::vector<data::StudentSequence>& validation_set, const TrainingConfig& config,
                  const TrainOptions& options) {
  config.validate();
  for (const auto* set : {&train_set, &validation_set}) {
    for (const auto& s : *set)
      for (const auto& r : s.responses) model.q_row(r.problem_id);
  }

  AdamW backbone_opt(config.lr_backbone, config.weight_decay);
  AdamW head_opt(config.lr_heads, config.weight_decay);
  RmsProp tracker_opt(config.lr_tracker);
  const auto backbone_params = model.backbone_parameters();
  const auto head_params = model.head_parameters();
  const auto tracker_params = model.tracker_parameters();
  const auto all_params = model.parameters();

  TrainResult result;
  std::vector<Matrix> best_params;
  double best_auc = -1.0;
  int since_best = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<const data::StudentSequence*> order;
    for (const auto& s : train_set) {
      if (!s.responses.empty()) order.push_back(&s);
    }
    Rng rng(config.seed, static_cast<std::uint64_t>(epoch));
    rng.shuffle(order);

    double sum_cg = 0, sum_cp = 0, sum_kc = 0;
    std::size_t n = 0;
    int batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::span<const data::StudentSequence* const> batch(order.data() + start, end - start);
      for (auto* p : all_params) p->zero_grad();
      const BatchValues loss = run_batch(model, batch, config.lambda, true);
      if (!std::isfinite(loss.loss.total)) {
        if (options.diagnostics_dir) dump_batch(*options.diagnostics_dir, epoch, batch_index, batch, loss);
        throw NumericalError("non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_index));
      }
      if (config.clip_norm > 0) {
        double sq = 0;
        for (auto* p : all_params) sq += p->grad.squaredNorm();
        const double norm = std::sqrt(sq);
        if (!std::isfinite(norm)) {
          if (options.diagnostics_dir) dump_batch(*options.diagnostics_dir, epoch, batch_index, batch, loss);
          throw NumericalError("non-finite gradient in epoch " + std::to_string(epoch));
        }
        if (norm > config.clip_norm) {
          for (auto* p : all_params) p->grad *= config.clip_norm / norm;
        }
      }
      backbone_opt.step(backbone_params);
      head_opt.step(head_params);
      tracker_opt.step(tracker_params);

      const double w = static_cast<double>(loss.n_submissions);
      sum_cg += loss.loss.l_codegen * w;
      sum_cp += loss.loss.l_corrpred * w;
      sum_kc += loss.loss.l_kc * w;
      n += loss.n_submissions;
      ++batch_index;
    }

    EpochLog log_entry;
    log_entry.epoch = epoch;
    if (n > 0) {
      log_entry.train = total_loss(sum_cg / n, sum_cp / n, sum_kc / n, config.lambda);
    }
    if (!validation_set.empty()) {
      std::vector<const data::StudentSequence*> val;
      for (const auto& s : validation_set) {
        if (!s.responses.empty()) val.push_back(&s);
      }
      const BatchValues vl = run_batch(model, val, config.lambda, false);
      log_entry.validation = vl.loss;
      try {
        log_entry.validation_auc = eval::auc(vl.a_hat, vl.labels);
      } catch (const UndefinedMetricError&) {
      }
    }
    result.epochs.push_back(log_entry);
    log().info("epoch {}: total {:.4f} (codegen {:.4f}, corrpred {:.4f}, kc {:.4f}){}", epoch, log_entry.train.total,
               log_entry.train.l_codegen, log_entry.train.l_corrpred, log_entry.train.l_kc,
               log_entry.validation_auc ? fmt::format(", validation AUC {:.4f}", *log_entry.validation_auc) : "");

    const double score = log_entry.validation_auc.value_or(-1.0);
    const bool improved = result.epochs.size() == 1 || (log_entry.validation_auc && score > best_auc);
    if (improved) {
      best_auc = score;
      result.best_epoch = epoch;
      since_best = 0;
      if (!validation_set.empty()) snapshot(model, best_params);
    } else {
      ++since_best;
    }
    if (validation_set.empty()) result.best_epoch = epoch;

    if (options.checkpoint_dir) {
      const auto dir = *options.checkpoint_dir;
      char name[32];
      std::snprintf(name, sizeof name, "epoch-%03d", epoch);
      model.save(dir / name);
      if (improved || validation_set.empty()) model.save(dir / "best");
      if (!config.keep_all_checkpoints && epoch > 0) {
        std::snprintf(name, sizeof name, "epoch-%03d", epoch - 1);
        std::filesystem::remove_all(dir / name);
      }
      write_train_log(dir / "train_log.tsv", result);
    }
    if (options.on_epoch) options.on_epoch(log_entry);
    if (options.should_stop && options.should_stop(log_entry)) break;
    if (config.patience > 0 && since_best >= config.patience) {
      log().info("stopping early after epoch {}; best epoch {}", epoch, result.best_epoch);
      break;
    }
  }
  if (!best_params.empty()) restore(model, best_params);
  return result;
}

void write_train_log(const std::filesystem::path& path, const TrainResult& result) {
  std::string out =
      "epoch\tl_codegen\tl_corrpred\tl_kc\ttotal\tval_l_codegen\tval_l_corrpred\tval_l_kc\tval_total\tval_auc\n";
  for (const auto& e : result.epochs) {
    out += std::to_string(e.epoch) + "\t" + fmt_double(e.train.l_codegen) + "\t" + fmt_double(e.train.l_corrpred) +
           "\t" + fmt_double(e.train.l_kc) + "\t" + fmt_double(e.train.total);
    if (e.validation) {
      out += "\t" + fmt_double(e.validation->l_codegen) + "\t" + fmt_double(e.validation->l_corrpred) + "\t" +
             fmt_double(e.validation->l_kc) + "\t" + fmt_double(e.validation->total);
    } else {
      out += "\t\t\t\t";
    }
    out += "\t" + (e.validation_auc ? fmt_double(*e.validation_auc) : std::string()) + "\n";
  }
  atomic_write(path, out);
}

std::vector<Prediction> predict_all(KtModel& model, const std::vector<data::StudentSequence>& sequences,
                                    bool generate_code) {
  std::vector<Prediction> out;
  for (const auto& s : sequences) {
    auto p = model.predict_sequence(s, generate_code);
    out.insert(out.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
  }
  return out;
}

namespace {
const char* kPredHeader = "student_id\tproblem_id\ttimestep\tlabel\ta_hat\ty_hat\tgenerated_code\ttrue_code";
}

void write_predictions(const std::filesystem::path& path, const std::vector<Prediction>& predictions) {
  std::string out = std::string(kPredHeader) + "\n";
  for (const auto& p : predictions) {
    out += text::escape_field(p.student_id) + "\t" + text::escape_field(p.problem_id) + "\t" +
           std::to_string(p.timestep) + "\t" + std::to_string(p.label) + "\t" + fmt_double(p.a_hat) + "\t" +
           fmt_double(p.y_hat) + "\t" + text::escape_field(p.generated_code) + "\t" +
           text::escape_field(p.true_code) + "\n";
  }
  atomic_write(path, out);
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != kPredHeader) throw ParseError(path.string() + ": bad predictions header");
  std::vector<Prediction> out;
  int n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    auto f = text::split(line, '\t');
    if (f.size() != 8) throw ParseError(path.string() + ":" + std::to_string(n) + ": expected 8 fields");
    Prediction p;
    try {
      p.student_id = text::unescape_field(f[0]);
      p.problem_id = text::unescape_field(f[1]);
      p.timestep = std::stoi(f[2]);
      p.label = std::stoi(f[3]);
      p.a_hat = std::stod(f[4]);
      p.y_hat = std::stod(f[5]);
    } catch (const std::exception&) {
      throw ParseError(path.string() + ":" + std::to_string(n) + ": malformed number");
    }
    p.generated_code = text::unescape_field(f[6]);
    p.true_code = text::unescape_field(f[7]);
    out.push_back(std::move(p));
  }
  return out;
}

void write_mastery_report(const std::filesystem::path& path, const std::vector<Prediction>& predictions,
                          const std::vector<std::string>& kc_labels) {
  std::string out = "student_id\ttimestep\tkc_label\tmastery\n";
  for (const auto& p : predictions) {
    if (p.mastery.size() != kc_labels.size()) throw DomainError("mastery vector length differs from KC count");
    for (std::size_t j = 0; j < kc_labels.size(); ++j) {
      out += text::escape_field(p.student_id) + "\t" + std::to_string(p.timestep) + "\t" +
             text::escape_field(kc_labels[j]) + "\t" + fmt_double(p.mastery[j]) + "\n";
    }
  }
  atomic_write(path, out);
}

BaselineKind parse_baseline(std::string_view s) {
  if (s == "random") return BaselineKind::random;
  if (s == "majority") return BaselineKind::majority;
  throw ValidationError("unknown baseline \"" + std::string(s) + "\"");
}

std::vector<Query> queries_of(const std::vector<data::StudentSequence>& sequences) {
  std::vector<Query> out;
  for (const auto& s : sequences)
    for (const auto& r : s.responses) out.push_back({r.problem_id, r.correct ? 1 : 0});
  return out;
}

std::vector<double> baseline_predict(BaselineKind kind, const std::vector<data::StudentSequence>& train_set,
                                     const std::vector<Query>& queries, std::uint64_t seed, bool uniform_draws) {
  std::vector<double> out;
  out.reserve(queries.size());
  if (kind == BaselineKind::random) {
    Rng rng(seed, 0x52);
    for (std::size_t i = 0; i < queries.size(); ++i) out.push_back(uniform_draws ? rng.uniform() : 0.5);
    return out;
  }
  std::map<std::string, std::pair<long, long>> counts;  // (correct, total)
  long correct = 0, total = 0;
  for (const auto& s : train_set) {
    for (const auto& r : s.responses) {
      auto& c = counts[r.problem_id];
      c.first += r.correct;
      ++c.second;
      correct += r.correct;
      ++total;
    }
  }
  if (total == 0) throw PrerequisiteError("majority baseline needs training responses");
  const double global = 2 * correct > total ? 1.0 : 0.0;
  for (const auto& q : queries) {
    const auto it = counts.find(q.problem_id);
    out.push_back(it == counts.end() ? global : (2 * it->second.first > it->second.second ? 1.0 : 0.0));
  }
  return out;
}

}  // namespace kcgen::kt
