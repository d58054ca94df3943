// SPDX-License-Identifier: Apache-2.0
#include "config.hpp"

#include "kcgen/util/assets.hpp"
#include "kcgen/util/digest.hpp"
#include "kcgen/util/error.hpp"
#include "kcgen/util/fs.hpp"
#include "kcgen/util/text.hpp"

namespace kcgen::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

const char* const kPathKeys[][2] = {{"run", "dir"}, {"data", "problems"}, {"data", "submissions"}};

json parse_jsonc(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ValidationError(origin + ": " + e.what());
  }
}

std::string type_name(const json& j) {
  if (j.is_null()) return "null";
  if (j.is_boolean()) return "boolean";
  if (j.is_number_integer() || j.is_number_unsigned()) return "integer";
  if (j.is_number()) return "number";
  if (j.is_string()) return "string";
  if (j.is_array()) return "array";
  return "object";
}

bool compatible(const json& base, const json& v) {
  if (base.is_null()) return v.is_null() || v.is_number_integer() || v.is_number_unsigned();
  if (base.is_number_integer() || base.is_number_unsigned()) return v.is_number_integer() || v.is_number_unsigned();
  if (base.is_number_float()) return v.is_number();
  if (base.is_string()) return v.is_string();
  if (base.is_boolean()) return v.is_boolean();
  if (base.is_array()) {
    if (!v.is_array()) return false;
    if (base.empty()) return true;
    for (const auto& e : v) {
      if (!compatible(base.front(), e)) return false;
    }
    return true;
  }
  return v.is_object();
}

void overlay(json& base, const json& user, const std::string& path) {
  if (!user.is_object()) throw ValidationError((path.empty() ? "config" : path) + ": expected an object");
  for (const auto& [key, value] : user.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (!base.contains(key)) throw ValidationError(here + ": unknown config key");
    json& slot = base[key];
    if (slot.is_object()) {
      overlay(slot, value, here);
    } else if (!compatible(slot, value)) {
      throw ValidationError(here + ": expected " + type_name(slot) + (slot.is_null() ? " or integer" : "") +
                            ", got " + type_name(value));
    } else {
      slot = value;
    }
  }
}

void resolve_paths(json& user, const fs::path& base_dir) {
  for (const auto& pk : kPathKeys) {
    if (!user.contains(pk[0]) || !user[pk[0]].is_object() || !user[pk[0]].contains(pk[1])) continue;
    json& v = user[pk[0]][pk[1]];
    if (!v.is_string()) continue;
    const fs::path p(v.get<std::string>());
    if (p.is_relative()) v = (base_dir / p).lexically_normal().string();
  }
}

json override_object(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ValidationError("--set expects key.path=value, got \"" + assignment + "\"");
  const auto keys = text::split(assignment.substr(0, eq), '.');
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  for (auto it = keys.rbegin(); it != keys.rend(); ++it) {
    if (it->empty()) throw ValidationError("--set: empty key in \"" + assignment + "\"");
    json wrap = json::object();
    wrap[*it] = std::move(value);
    value = std::move(wrap);
  }
  return value;
}

class Reader {
 public:
  explicit Reader(const json& root) : root_(root) {}

  const json& at(const std::string& path) const {
    const json* cur = &root_;
    for (const auto& k : text::split(path, '.')) cur = &cur->at(k);
    return *cur;
  }
  std::string str(const std::string& path) const { return at(path).get<std::string>(); }
  bool flag(const std::string& path) const { return at(path).get<bool>(); }
  double num(const std::string& path, double lo, double hi) const {
    const double v = at(path).get<double>();
    if (!(v >= lo && v <= hi)) throw ValidationError(path + ": " + std::to_string(v) + " outside [" + fmt(lo) + ", " + fmt(hi) + "]");
    return v;
  }
  int integer(const std::string& path, long long lo, long long hi) const {
    const long long v = at(path).get<long long>();
    if (v < lo || v > hi) {
      throw ValidationError(path + ": " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return static_cast<int>(v);
  }
  std::uint64_t seed(const std::string& path, std::uint64_t fallback) const {
    const json& j = at(path);
    if (j.is_null()) return fallback;
    if (j.is_number_integer() && j.get<long long>() < 0) throw ValidationError(path + ": seeds are non-negative");
    return j.get<std::uint64_t>();
  }
  std::string choice(const std::string& path, std::initializer_list<const char*> options) const {
    const std::string v = str(path);
    std::string all;
    for (const char* o : options) {
      if (v == o) return v;
      all += all.empty() ? o : std::string(", ") + o;
    }
    throw ValidationError(path + ": \"" + v + "\" is not one of " + all);
  }

 private:
  static std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
  }
  const json& root_;
};

}  // namespace

std::vector<int> Settings::split_indices() const {
  if (split_index >= 0) return {split_index};
  std::vector<int> all;
  for (int i = 0; i < n_splits; ++i) all.push_back(i);
  return all;
}

Settings load_settings(const std::optional<fs::path>& file, const std::vector<std::string>& overrides,
                       const std::optional<fs::path>& run_dir_override) {
  json cfg = parse_jsonc(assets::get("config/default.jsonc"), "default config");
  if (file) {
    if (!fs::exists(*file)) throw ValidationError("config file not found: " + file->string());
    json user = parse_jsonc(read_file(*file), file->string());
    resolve_paths(user, fs::absolute(*file).parent_path());
    overlay(cfg, user, "");
  }
  for (const auto& o : overrides) overlay(cfg, override_object(o), "");
  if (run_dir_override) cfg["run"]["dir"] = run_dir_override->string();

  Settings s;
  s.resolved = cfg;
  json digest_view = cfg;
  digest_view["run"].erase("dir");
  s.digest = sha256_hex(digest_view.dump());

  const Reader r(cfg);
  s.run_dir = r.str("run.dir");
  if (s.run_dir.empty()) throw ValidationError("run.dir: must not be empty");
  s.seed = r.seed("run.seed", 1);

  s.problems = r.str("data.problems");
  s.submissions = r.str("data.submissions");
  s.first_submissions_only = r.flag("data.first_submissions_only");
  s.n_splits = r.integer("data.n_splits", 1, 1000);
  s.ratios = {r.num("data.split_ratios.train", 0, 1), r.num("data.split_ratios.validation", 0, 1),
              r.num("data.split_ratios.test", 0, 1)};
  if (std::abs(s.ratios.train + s.ratios.validation + s.ratios.test - 1.0) > 1e-9) {
    throw ValidationError("data.split_ratios: ratios must sum to 1");
  }
  if (s.ratios.train <= 0 || s.ratios.test <= 0) throw ValidationError("data.split_ratios: train and test must be positive");
  s.split_index = r.integer("data.split_index", -1, s.n_splits - 1);

  auto& l = s.llm;
  l.provider = r.choice("llm.provider", {"mock", "http"});
  l.client.model_id = r.str("llm.model");
  l.client.sampling.temperature = r.num("llm.temperature", 0, 2);
  l.client.sampling.top_p = r.num("llm.top_p", 0, 1);
  l.client.sampling.max_tokens = r.integer("llm.max_tokens", 1, 1 << 20);
  if (!r.at("llm.seed").is_null()) l.client.seed = static_cast<std::int64_t>(r.seed("llm.seed", 0));
  l.client.retry.max_attempts = r.integer("llm.max_attempts", 1, 100);
  l.client.rate_limit_per_second = r.num("llm.rate_limit_per_second", 0, 1e6);
  l.http.base_url = r.str("llm.base_url");
  l.http.api_key_env = r.str("llm.api_key_env");
  l.http.timeout_seconds = r.integer("llm.timeout_seconds", 1, 86400);
  l.concurrency = r.integer("llm.concurrency", 1, 256);
  l.cache = r.flag("llm.cache");
  l.mock.seed = r.seed("llm.mock.seed", 7);
  l.mock.malformed_rate = r.num("llm.mock.malformed_rate", 0, 1);
  l.mock.paraphrase_rate = r.num("llm.mock.paraphrase_rate", 0, 1);
  l.mock.max_kcs = static_cast<std::size_t>(r.integer("llm.mock.max_kcs", 1, 64));
  if (l.provider == "mock") l.client.model_id = "mock-rules";

  auto& e = s.embed;
  e.kind = r.choice("embed.kind", {"hashing", "http"});
  e.dimension = static_cast<std::size_t>(r.integer("embed.dimension", 8, 1 << 16));
  e.base_url = r.str("embed.base_url");
  e.text_model = r.str("embed.text_model");
  e.code_model = r.str("embed.code_model");
  e.api_key_env = r.str("embed.api_key_env");
  e.cache = r.flag("embed.cache");

  auto& k = s.kc;
  k.language = r.str("kc.language");
  k.n_solutions = r.integer("kc.n_solutions", 1, 1000);
  k.n_clusters = r.integer("kc.n_clusters", 1, 100000);
  for (const auto& v : r.at("kc.ontology_levels")) {
    const int n = v.get<int>();
    if (n < 1) throw ValidationError("kc.ontology_levels: levels must be positive");
    k.ontology_levels.push_back(n);
  }
  k.examples_source = r.choice("kc.examples_source", {"bundled", "human-tags"});
  k.n_examples = r.integer("kc.n_examples", 0, 100);
  k.seed = s.seed;
  k.concurrency = l.concurrency;

  auto& m = s.model;
  m.backbone.d_model = r.integer("model.backbone.d_model", 2, 8192);
  m.backbone.n_layers = r.integer("model.backbone.n_layers", 1, 128);
  m.backbone.n_heads = r.integer("model.backbone.n_heads", 1, 256);
  m.backbone.d_ff = r.integer("model.backbone.d_ff", 1, 65536);
  m.backbone.max_len = r.integer("model.backbone.max_len", 8, 1 << 20);
  m.backbone.init_std = r.num("model.backbone.init_std", 0, 10);
  if (m.backbone.d_model % m.backbone.n_heads != 0) {
    throw ValidationError("model.backbone.n_heads: must divide d_model");
  }
  m.vocab_size = r.integer("model.vocab_size", 8, 1 << 20);
  m.state_dim = r.integer("model.state_dim", 1, 1 << 16);
  m.trainable_h0 = r.flag("model.trainable_h0");
  m.max_new_tokens = r.integer("model.max_new_tokens", 1, 1 << 20);
  m.seed = r.seed("model.seed", s.seed);

  auto& t = s.train;
  if (r.choice("train.preset", {"desk", "large"}) == "large") {
    t = kt::TrainingConfig::large_backbone_preset();
  } else {
    t.lr_backbone = r.num("train.lr_backbone", 0, 10);
    t.lr_tracker = r.num("train.lr_tracker", 0, 10);
    t.lr_heads = r.num("train.lr_heads", 0, 10);
  }
  t.lambda = r.num("train.lambda", 0, 1);
  t.weight_decay = r.num("train.weight_decay", 0, 10);
  t.clip_norm = r.num("train.clip_norm", 0, 1e9);
  t.batch_size = r.integer("train.batch_size", 1, 1 << 20);
  t.epochs = r.integer("train.epochs", 1, 1 << 20);
  t.patience = r.integer("train.patience", 0, 1 << 20);
  t.keep_all_checkpoints = r.flag("train.keep_all_checkpoints");
  t.seed = r.seed("train.seed", s.seed);
  t.validate();

  auto& ev = s.eval;
  ev.threshold = r.num("eval.threshold", 0, 1);
  ev.language = eval::parse_language(r.str("eval.language"));
  const auto& w = r.at("eval.codebleu_weights");
  if (w.size() != 4) throw ValidationError("eval.codebleu_weights: expected 4 weights");
  double sum = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    ev.codebleu.weights[i] = w[i].get<double>();
    if (ev.codebleu.weights[i] < 0) throw ValidationError("eval.codebleu_weights: weights must be non-negative");
    sum += ev.codebleu.weights[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("eval.codebleu_weights: weights must sum to 1");
  ev.generate_code = r.flag("eval.generate_code");
  for (const auto& b : r.at("eval.baselines")) {
    try {
      ev.baselines.push_back(kt::parse_baseline(b.get<std::string>()));
    } catch (const Error&) {
      throw ValidationError("eval.baselines: unknown baseline \"" + b.get<std::string>() + "\"");
    }
  }
  ev.random_uniform_draws = r.flag("eval.random_uniform_draws");

  auto& c = s.curves;
  c.pfa.min_students = r.integer("curves.min_students", 1, 1 << 20);
  c.pfa.min_observations = r.integer("curves.min_observations", 1, 1 << 20);
  c.pfa.l2 = r.num("curves.l2", 0, 1e6);
  c.trend_alpha = r.num("curves.trend_alpha", 0, 1);
  c.scope = r.choice("curves.scope", {"all", "test"});

  s.plot_kcs = r.integer("plots.learning_curve_kcs", 1, 1 << 20);
  s.heatmap_student = r.str("plots.heatmap_student");
  return s;
}

}  // namespace kcgen::cli
