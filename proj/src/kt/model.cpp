// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

#include "kcgen/kt/model.hpp"
#include "kcgen/util/digest.hpp"
#include "kcgen/util/error.hpp"
#include "kcgen/util/fs.hpp"
#include "kcgen/util/log.hpp"

namespace kcgen::kt {

namespace {

double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

std::vector<std::string> tokenizer_corpus(const data::Dataset& ds, const kc::QMatrix& q) {
  std::vector<std::string> corpus;
  corpus.push_back("question: . KC 1: . The student's mastery level on is:.");
  for (const auto& p : ds.problems) corpus.push_back("question: " + p.statement + ".");
  for (const auto& k : q.kcs) corpus.push_back(" " + k + ". ");
  for (const auto& seq : ds.sequences)
    for (const auto& s : seq.responses) corpus.push_back(s.code);
  return corpus;
}

int first_token(const Tokenizer& t, const std::string& word) {
  const auto ids = t.encode(word);
  if (ids.empty()) throw ValidationError("\"" + word + "\" does not tokenize");
  return ids.front();
}

constexpr char kMagic[8] = {'K', 'C', 'G', 'K', 'T', 'P', '0', '1'};

}  // namespace

KtModel::KtModel(const data::Dataset& corpus, kc::QMatrix q, ModelConfig config,
                 std::shared_ptr<embed::Embedder> embedder)
    : KtModel(Tokenizer::train(tokenizer_corpus(corpus, q), config.vocab_size), std::move(q), config,
              std::move(embedder)) {
  register_problems(corpus.problems);
}

KtModel::KtModel(Tokenizer tokenizer, kc::QMatrix q, ModelConfig config, std::shared_ptr<embed::Embedder> embedder)
    : config_(config), q_(std::move(q)), embedder_(std::move(embedder)) {
  if (!embedder_) throw ValidationError("a code embedder is required");
  q_.validate();
  const int code_dim = static_cast<int>(embedder_->embed_code("x").dimension());
  backbone_ = std::make_unique<TinyTransformer>(std::move(tokenizer), config_.backbone, config_.seed);
  tracker_ = LstmTracker(backbone_->d_model() + code_dim, config_.state_dim, config_.trainable_h0, config_.seed);
  mastery_ = MasteryHead(config_.state_dim, kc_count(), config_.seed);
  correct_ = CorrectnessHead(backbone_->d_model(), config_.seed);
  true_id_ = first_token(backbone_->tokenizer(), "true");
  false_id_ = first_token(backbone_->tokenizer(), "false");
}

void KtModel::register_problems(const std::vector<data::Problem>& problems) {
  std::lock_guard lock(cache_mu_);
  for (const auto& p : problems) problems_[p.problem_id] = p;
}

const data::Problem& KtModel::problem(const std::string& id) const {
  std::lock_guard lock(cache_mu_);
  const auto it = problems_.find(id);
  if (it == problems_.end()) throw IntegrityError("unknown problem " + id);
  return it->second;
}

std::vector<Parameter*> KtModel::parameters() {
  auto out = backbone_parameters();
  for (auto* p : tracker_parameters()) out.push_back(p);
  for (auto* p : head_parameters()) out.push_back(p);
  return out;
}

std::vector<int> KtModel::q_row(const std::string& problem_id) const {
  const int r = q_.problem_index(problem_id);
  if (r < 0) throw IntegrityError("problem " + problem_id + " is not in the Q-matrix");
  return {q_.incidence[r].begin(), q_.incidence[r].end()};
}

const PromptPlan& KtModel::prompt_plan(const std::string& problem_id) {
  {
    std::lock_guard lock(cache_mu_);
    const auto it = plans_.find(problem_id);
    if (it != plans_.end()) return it->second;
  }
  const auto row = q_row(problem_id);
  std::vector<std::string> names;
  for (std::size_t c = 0; c < row.size(); ++c) {
    if (row[c]) names.push_back(q_.kcs[c]);
  }
  PromptPlan plan = plan_prompt(backbone_->tokenizer(), problem(problem_id).statement, names);
  if (static_cast<int>(plan.ids.size()) >= backbone_->max_len()) {
    throw DomainError("prompt for " + problem_id + " has " + std::to_string(plan.ids.size()) +
                      " tokens, beyond the context window of " + std::to_string(backbone_->max_len()));
  }
  std::lock_guard lock(cache_mu_);
  return plans_.emplace(problem_id, std::move(plan)).first->second;
}

std::vector<int> KtModel::code_targets(const PromptPlan& plan, const std::string& code, bool* truncated) const {
  std::vector<int> ids = backbone_->tokenizer().encode(code);
  ids.push_back(Tokenizer::kEnd);
  const std::size_t room = static_cast<std::size_t>(backbone_->max_len()) - plan.ids.size() + 1;
  if (truncated) *truncated = false;
  if (ids.size() > room) {
    ids.resize(room);
    if (truncated) *truncated = true;
  }
  return ids;
}

Matrix KtModel::problem_embedding(const std::string& problem_id) const {
  const auto ids = backbone_->tokenizer().encode(problem(problem_id).statement);
  if (ids.empty()) return Matrix::Zero(1, backbone_->d_model());
  return backbone_->embedding_values(ids).colwise().mean();
}

const std::vector<double>& KtModel::code_embedding(const std::string& code) {
  {
    std::lock_guard lock(cache_mu_);
    const auto it = code_cache_.find(code);
    if (it != code_cache_.end()) return it->second;
  }
  std::vector<double> v;
  if (code.find_first_not_of(" \t\r\n") == std::string::npos) {
    v.assign(static_cast<std::size_t>(tracker_.input_dim() - backbone_->d_model()), 0.0);
  } else {
    v = embedder_->embed_code(code).values;
  }
  std::lock_guard lock(cache_mu_);
  return code_cache_.emplace(code, std::move(v)).first->second;
}

std::vector<Var> KtModel::sequence_masteries(Binder& b, const data::StudentSequence& seq) {
  std::vector<Var> out;
  LstmTracker::State state = tracker_.initial(b);
  for (std::size_t t = 0; t < seq.responses.size(); ++t) {
    const data::Submission& r = seq.responses[t];
    q_row(r.problem_id);
    out.push_back(mastery_.forward(b, state.h));
    if (t + 1 < seq.responses.size()) {
      const auto& ce = code_embedding(r.code);
      const Var p = b.tape().constant(problem_embedding(r.problem_id));
      const Var c = b.tape().constant(Eigen::Map<const Eigen::RowVectorXd>(ce.data(), static_cast<Eigen::Index>(ce.size())));
      state = tracker_.step(b, state, p, c);
    }
  }
  return out;
}

StepTerms KtModel::submission_terms(Binder& b, const data::StudentSequence& seq, std::size_t t, Var mastery) {
  const data::Submission& r = seq.responses.at(t);
  const PromptPlan& plan = prompt_plan(r.problem_id);
  const auto row = q_row(r.problem_id);
  const Var emb_true = backbone_->embed(b, std::span<const int>(&true_id_, 1));
  const Var emb_false = backbone_->embed(b, std::span<const int>(&false_id_, 1));

  StepTerms st;
  st.label = r.correct ? 1.0 : 0.0;
  st.mastery = mastery;
  std::vector<Var> soft;
  for (std::size_t c = 0; c < row.size(); ++c) {
    if (row[c]) soft.push_back(soften_mastery(ad::slice_cols(mastery, static_cast<Eigen::Index>(c), 1), emb_true, emb_false));
  }
  Var prompt = assemble_prompt(b, *backbone_, plan, soft);
  const auto code = code_targets(plan, r.code, &st.truncated);
  if (st.truncated) {
    std::lock_guard lock(cache_mu_);
    if (truncation_warned_.insert(seq.student_id + "\t" + r.problem_id).second) {
      log().warn("code of {} on {} truncated to fit the context window", seq.student_id, r.problem_id);
    }
  }

  Var inputs = prompt;
  if (code.size() > 1) {
    const Var parts[] = {prompt, backbone_->embed(b, std::span<const int>(code.data(), code.size() - 1))};
    inputs = ad::concat_rows(parts);
  }
  const BackboneOutput out_bb = backbone_->forward(b, inputs);
  const auto P = static_cast<Eigen::Index>(plan.ids.size());
  std::vector<int> targets(static_cast<std::size_t>(inputs.rows()), -1);
  for (std::size_t i = 0; i < code.size(); ++i) targets[static_cast<std::size_t>(P) - 1 + i] = code[i];
  st.l_codegen = code_generation_loss(out_bb.logits, targets);
  st.a_hat = correct_.forward(b, ad::slice_rows(out_bb.hidden, 0, P));
  st.y_hat = aggregate_kc_mastery(mastery, row);
  return st;
}

std::vector<StepTerms> KtModel::forward_sequence(Binder& b, const data::StudentSequence& seq) {
  const auto masteries = sequence_masteries(b, seq);
  std::vector<StepTerms> out;
  for (std::size_t t = 0; t < masteries.size(); ++t) out.push_back(submission_terms(b, seq, t, masteries[t]));
  return out;
}

KtModel::PlainState KtModel::initial_state() const {
  return {tracker_.h0.value.row(0) * (tracker_.trainable_h0() ? 1.0 : 0.0),
          tracker_.c0.value.row(0) * (tracker_.trainable_h0() ? 1.0 : 0.0)};
}

KtModel::PlainState KtModel::advance(const PlainState& s, const std::string& problem_id, const std::string& code) {
  Tape tape(false);
  Binder b(tape);
  const auto& ce = code_embedding(code);
  LstmTracker::State st{tape.constant(s.h), tape.constant(s.c)};
  st = tracker_.step(b, st, tape.constant(problem_embedding(problem_id)),
                     tape.constant(Eigen::Map<const Eigen::RowVectorXd>(ce.data(), static_cast<Eigen::Index>(ce.size()))));
  return {st.h.value().row(0), st.c.value().row(0)};
}

Prediction KtModel::predict_from_state(const PlainState& s, const std::string& problem_id, bool generate_code) {
  const PromptPlan& plan = prompt_plan(problem_id);
  const auto row = q_row(problem_id);
  Prediction pr;
  pr.problem_id = problem_id;
  const Eigen::RowVectorXd pre = s.h * mastery_.w.value + mastery_.b.value.row(0);
  pr.mastery.resize(static_cast<std::size_t>(pre.size()));
  for (Eigen::Index j = 0; j < pre.size(); ++j) pr.mastery[static_cast<std::size_t>(j)] = sigmoid(pre(j));
  pr.y_hat = aggregate_kc_mastery(pr.mastery, row);

  std::vector<int> cols;
  for (std::size_t c = 0; c < row.size(); ++c)
    if (row[c]) cols.push_back(static_cast<int>(c));
  const Eigen::RowVectorXd e_true = backbone_->embedding_values(std::span<const int>(&true_id_, 1)).row(0);
  const Eigen::RowVectorXd e_false = backbone_->embedding_values(std::span<const int>(&false_id_, 1)).row(0);

  auto session = backbone_->start_session();
  Eigen::RowVectorXd hidden_sum = Eigen::RowVectorXd::Zero(backbone_->d_model());
  Eigen::RowVectorXd logits;
  std::size_t slot = 0;
  for (int id : plan.ids) {
    Eigen::RowVectorXd in;
    if (id < 0) {
      const double m = pr.mastery[static_cast<std::size_t>(cols[slot++])];
      in = m * e_true + (1.0 - m) * e_false;
    } else {
      in = backbone_->embedding_values(std::span<const int>(&id, 1)).row(0);
    }
    auto [h, lg] = session->step(in);
    hidden_sum += h;
    logits = std::move(lg);
  }
  const Eigen::RowVectorXd r = hidden_sum / static_cast<double>(plan.ids.size());
  pr.a_hat = sigmoid((r * correct_.w.value)(0, 0));

  if (generate_code) {
    std::vector<int> generated;
    while (static_cast<int>(generated.size()) < config_.max_new_tokens) {
      Eigen::Index next = 0;
      logits.maxCoeff(&next);
      if (next == Tokenizer::kEnd || session->length() >= backbone_->max_len()) break;
      const int id = static_cast<int>(next);
      generated.push_back(id);
      logits = session->step(backbone_->embedding_values(std::span<const int>(&id, 1)).row(0)).second;
    }
    pr.generated_code = backbone_->tokenizer().decode(generated);
  }
  return pr;
}

std::vector<Prediction> KtModel::predict_sequence(const data::StudentSequence& seq, bool generate_code) {
  std::vector<Prediction> out;
  PlainState s = initial_state();
  for (std::size_t t = 0; t < seq.responses.size(); ++t) {
    const auto& r = seq.responses[t];
    Prediction p = predict_from_state(s, r.problem_id, generate_code);
    p.student_id = seq.student_id;
    p.timestep = static_cast<int>(t);
    p.label = r.correct ? 1 : 0;
    p.true_code = r.code;
    out.push_back(std::move(p));
    if (t + 1 < seq.responses.size()) s = advance(s, r.problem_id, r.code);
  }
  return out;
}

Prediction KtModel::predict_student(const std::vector<data::Submission>& history, const std::string& next_problem,
                                    bool generate_code) {
  PlainState s = initial_state();
  for (const auto& r : history) s = advance(s, r.problem_id, r.code);
  Prediction p = predict_from_state(s, next_problem, generate_code);
  if (!history.empty()) p.student_id = history.front().student_id;
  p.timestep = static_cast<int>(history.size());
  return p;
}

void KtModel::save(const std::filesystem::path& target) const {
  auto dir = target;
  dir += ".partial";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json j;
  j["format"] = 1;
  j["backbone"] = {{"kind", backbone_->kind()},
                   {"d_model", config_.backbone.d_model},
                   {"n_layers", config_.backbone.n_layers},
                   {"n_heads", config_.backbone.n_heads},
                   {"d_ff", config_.backbone.d_ff},
                   {"max_len", config_.backbone.max_len},
                   {"init_std", config_.backbone.init_std}};
  j["vocab_size"] = config_.vocab_size;
  j["state_dim"] = config_.state_dim;
  j["trainable_h0"] = config_.trainable_h0;
  j["max_new_tokens"] = config_.max_new_tokens;
  j["seed"] = config_.seed;
  j["embedder"] = embedder_->tag();
  j["config_digest"] = sha256_hex(j.dump());
  j["q_matrix"] = {{"problems", q_.problems}, {"kcs", q_.kcs}, {"incidence", q_.incidence}};
  auto probs = nlohmann::ordered_json::array();
  {
    std::lock_guard lock(cache_mu_);
    for (const auto& [id, p] : problems_) {
      probs.push_back({{"problem_id", id}, {"statement", p.statement}, {"human_kc_tags", p.human_kc_tags}});
    }
  }
  j["problems"] = std::move(probs);
  atomic_write(dir / "model.json", j.dump(2) + "\n");
  atomic_write(dir / "tokenizer.json", nlohmann::json(backbone_->tokenizer().learned_pieces()).dump() + "\n");

  std::string blob(kMagic, sizeof kMagic);
  auto put = [&](const void* p, std::size_t n) { blob.append(static_cast<const char*>(p), n); };
  auto params = const_cast<KtModel*>(this)->parameters();
  std::vector<Parameter*> all = params;
  if (!tracker_.trainable_h0()) {
    all.push_back(const_cast<Parameter*>(&tracker_.h0));
    all.push_back(const_cast<Parameter*>(&tracker_.c0));
  }
  const std::uint32_t count = static_cast<std::uint32_t>(all.size());
  put(&count, sizeof count);
  for (const Parameter* p : all) {
    const std::uint32_t len = static_cast<std::uint32_t>(p->name.size());
    put(&len, sizeof len);
    put(p->name.data(), len);
    const std::int64_t rows = p->value.rows(), cols = p->value.cols();
    put(&rows, sizeof rows);
    put(&cols, sizeof cols);
    put(p->value.data(), static_cast<std::size_t>(rows * cols) * sizeof(double));
  }
  atomic_write(dir / "params.bin", blob);
  std::filesystem::remove_all(target);
  std::filesystem::rename(dir, target);
}

std::unique_ptr<KtModel> KtModel::load(const std::filesystem::path& dir, std::shared_ptr<embed::Embedder> embedder) {
  if (!std::filesystem::exists(dir / "model.json")) throw PrerequisiteError("no checkpoint at " + dir.string());
  const auto j = nlohmann::json::parse(read_file(dir / "model.json"));
  if (j.at("embedder").get<std::string>() != embedder->tag()) {
    throw ValidationError("checkpoint was trained with embedder " + j.at("embedder").get<std::string>() +
                          ", not " + embedder->tag());
  }
  ModelConfig cfg;
  const auto& bb = j.at("backbone");
  cfg.backbone = {bb.at("d_model"), bb.at("n_layers"), bb.at("n_heads"), bb.at("d_ff"), bb.at("max_len"),
                  bb.at("init_std")};
  cfg.vocab_size = j.at("vocab_size");
  cfg.state_dim = j.at("state_dim");
  cfg.trainable_h0 = j.at("trainable_h0");
  cfg.max_new_tokens = j.at("max_new_tokens");
  cfg.seed = j.at("seed");
  kc::QMatrix q;
  q.problems = j.at("q_matrix").at("problems").get<std::vector<std::string>>();
  q.kcs = j.at("q_matrix").at("kcs").get<std::vector<std::string>>();
  q.incidence = j.at("q_matrix").at("incidence").get<std::vector<std::vector<std::uint8_t>>>();
  const auto pieces = nlohmann::json::parse(read_file(dir / "tokenizer.json")).get<std::vector<std::string>>();

  std::unique_ptr<KtModel> m(new KtModel(Tokenizer::from_pieces(pieces), std::move(q), cfg, std::move(embedder)));
  std::vector<data::Problem> probs;
  for (const auto& p : j.at("problems")) {
    probs.push_back({p.at("problem_id"), p.at("statement"), p.at("human_kc_tags").get<std::vector<std::string>>()});
  }
  m->register_problems(probs);

  std::map<std::string, Parameter*> by_name;
  for (auto* p : m->parameters()) by_name[p->name] = p;
  by_name[m->tracker_.h0.name] = &m->tracker_.h0;
  by_name[m->tracker_.c0.name] = &m->tracker_.c0;
  const std::string blob = read_file(dir / "params.bin");
  std::size_t off = 0;
  auto get = [&](void* p, std::size_t n) {
    if (off + n > blob.size()) throw ParseError((dir / "params.bin").string() + ": truncated");
    std::memcpy(p, blob.data() + off, n);
    off += n;
  };
  char magic[sizeof kMagic];
  get(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw ParseError((dir / "params.bin").string() + ": bad magic");
  std::uint32_t count = 0;
  get(&count, sizeof count);
  std::set<std::string> loaded;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t len = 0;
    get(&len, sizeof len);
    std::string name(len, '\0');
    get(name.data(), len);
    std::int64_t rows = 0, cols = 0;
    get(&rows, sizeof rows);
    get(&cols, sizeof cols);
    const auto it = by_name.find(name);
    if (it == by_name.end() || it->second->value.rows() != rows || it->second->value.cols() != cols) {
      throw IntegrityError("checkpoint parameter " + name + " does not fit the model");
    }
    get(it->second->value.data(), static_cast<std::size_t>(rows * cols) * sizeof(double));
    loaded.insert(name);
  }
  if (loaded.size() != by_name.size()) throw IntegrityError("checkpoint is missing parameters");
  return m;
}

}  // namespace kcgen::kt
