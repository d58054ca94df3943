// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>

#include "kcgen/llm/client.hpp"
#include "kcgen/llm/parsers.hpp"
#include "kcgen/llm/prompt.hpp"
#include "kcgen/util/error.hpp"
#include "kcgen/util/text.hpp"

using namespace kcgen;
using namespace kcgen::llm;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("kcgen_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

class ScriptedProvider : public Provider {
 public:
  std::vector<std::string> replies;
  std::size_t calls = 0;
  int failures_before_success = 0;
  std::string complete(const ChatRequest&) override {
    ++calls;
    if (failures_before_success > 0) {
      --failures_before_success;
      throw TransportError("no response from test: timeout");
    }
    return replies.at(std::min(calls - 1, replies.size() - 1));
  }
  std::string name() const override { return "scripted"; }
};

const char* kLove6 =
    "public boolean love6(int a, int b){\n    if (a == 6 || b == 6){\n        return true;\n    }\n"
    "    else if ((a + b) == 6 || Math.abs(a - b) == 6){\n        return true;\n    }\n    else{\n"
    "        return false;\n    }\n}\n";

Slots kcgen_slots(std::vector<std::string> codes, std::string problem) {
  return {{"language", "Java"},
          {"n", std::to_string(codes.size())},
          {"examples", format_examples(default_examples())},
          {"problem", std::move(problem)},
          {"solutions", format_solutions(codes)}};
}

}  // namespace

TEST_CASE("render_prompt fills templates verbatim") {
  auto r = render_prompt(TemplateId::kc_generation, kcgen_slots({kLove6}, "The number 6 is a truly great number."));
  CHECK(text::contains(r.user_message, "First sample solution is:"));
  CHECK(text::contains(r.user_message, kLove6));
  CHECK(text::contains(r.system_message, "along with 1 sample solutions"));
  CHECK(text::contains(r.system_message, "\"KC 1\": {\"reasoning\""));
  CHECK(!text::contains(r.system_message, "{{"));
  CHECK(text::contains(r.user_message, "KC 8: String equality comparison"));
  CHECK(r.template_id == "kc-generation");

  auto c = render_prompt(TemplateId::cluster_label,
                         {{"kcs", format_list({"for loop iteration", "while loop", "array iteration"})}});
  CHECK(text::contains(c.user_message, "[for loop iteration, while loop, array iteration]"));

  Slots missing = kcgen_slots({kLove6}, "x");
  missing.erase("problem");
  try {
    render_prompt(TemplateId::kc_generation, missing);
    FAIL("expected a template error");
  } catch (const TemplateError& e) {
    CHECK(text::contains(e.what(), "'problem'"));
  }
  CHECK(render_template("a {x} {{y}} b", {{"x", "{z}"}}) == "a {z} {y} b");
  CHECK(template_slots("{a} {{b}} {c} {a}") == std::vector<std::string>{"a", "c"});
  CHECK_THROWS_AS(render_template("{oops", {}), TemplateError);
}

TEST_CASE("parse_kc_json") {
  const std::string ok =
      "```json\n{\"KC 2\": {\"reasoning\": \"r2\", \"name\": \"B\"}, \"KC 1\": {\"reasoning\": \"r1\", \"name\": \"A\"},"
      " \"KC 10\": {\"reasoning\": \"r10\", \"name\": \"J\"}}\n```";
  auto kcs = parse_kc_json(ok);
  REQUIRE(kcs.size() == 3);
  CHECK(kcs[0].name == "A");
  CHECK(kcs[1].name == "B");
  CHECK(kcs[2].name == "J");
  CHECK_THROWS_AS(parse_kc_json("{\"KC 1\": {\"reasoning\": \"r\", \"name\": \"A\"}, \"KC 2\": {\"reasoning\": \"r\"}}"),
                  StructuredOutputError);
  CHECK_THROWS_AS(parse_kc_json("no json here"), StructuredOutputError);
  try {
    parse_kc_json("{\"KC 1\": 3}");
  } catch (const StructuredOutputError& e) {
    CHECK(e.raw() == "{\"KC 1\": 3}");
  }
  // Trailing comma from a sloppy provider.
  CHECK(parse_kc_json("{\"KC 1\": {\"reasoning\": \"r\", \"name\": \"A\"},}").size() == 1);
}

TEST_CASE("parse_cluster_label_json") {
  auto a = parse_cluster_label_json(
      "{\"reasoning\": \"r\", \"representative kc\": \"array iteration\", \"summary name\": null}");
  CHECK(a.representative_kc.value() == "array iteration");
  CHECK(!a.summary_name);
  auto b = parse_cluster_label_json(
      "{\"reasoning\": \"r\", // one sentence\n \"representative kc\": null, \"summary name\": \"Loop iteration\",\n}");
  CHECK(b.label() == "Loop iteration");
  CHECK_THROWS_AS(parse_cluster_label_json("{\"reasoning\": \"r\", \"representative kc\": null, \"summary name\": null}"),
                  StructuredOutputError);
  CHECK_THROWS_AS(parse_cluster_label_json("{\"reasoning\": \"r\", \"representative kc\": \"a\", \"summary name\": \"b\"}"),
                  StructuredOutputError);
}

TEST_CASE("parse_kc_error_json") {
  std::vector<std::string> kcs{"Basic arithmetic operations", "Logical operators", "If and else if statement",
                               "Numerical comparisons"};
  auto r = parse_kc_error_json(
      "{\"error reasoning\": [\"e\"], \"KC error\": {\"Basic arithmetic operations\": 0, \"logical  operators\": 1,"
      " \" If and else if statement\": 0, \"Numerical Comparisons\": 1}}",
      kcs);
  CHECK(r.labels.size() == 4);
  CHECK(r.labels.at("Logical operators") == 1);
  CHECK(r.labels.at("Numerical comparisons") == 1);
  CHECK(r.labels.at("Basic arithmetic operations") == 0);
  CHECK_THROWS_AS(parse_kc_error_json("{\"KC error\": {\"Basic arithmetic operations\": 2, \"Logical operators\": 1,"
                                      " \"If and else if statement\": 0, \"Numerical comparisons\": 1}}",
                                      kcs),
                  StructuredOutputError);
  CHECK_THROWS_AS(parse_kc_error_json("{\"KC error\": {\"Logical operators\": 1}}", kcs), StructuredOutputError);
  CHECK_THROWS_AS(parse_kc_error_json("{\"KC error\": {\"Basic arithmetic operations\": 0, \"Logical operators\": 1,"
                                      " \"If and else if statement\": 0, \"Numerical comparisons\": 1, \"Extra\": 0}}",
                                      kcs),
                  StructuredOutputError);
}

TEST_CASE("mock provider fixtures are deterministic") {
  auto mock = std::make_shared<MockProvider>(MockConfig{.seed = 7});
  LlmClient client(mock, {});
  auto req = render_prompt(TemplateId::kc_generation,
                           kcgen_slots({kLove6}, "The number 6 is a truly great number. Given two int values..."));
  auto kcs = client.complete_structured(req, [](const std::string& s) { return parse_kc_json(s); });
  REQUIRE(kcs.size() == 5);
  CHECK(kcs[0].name == "If and else if statement");
  CHECK(kcs[4].name == "Absolute value computation");

  MockProvider again(MockConfig{.seed = 7});
  CHECK(again.complete(req) == MockProvider(MockConfig{.seed = 7}).complete(req));

  auto label = parse_cluster_label_json(mock->complete(
      render_prompt(TemplateId::cluster_label, {{"kcs", format_list({"for loop iteration", "while loop", "array iteration"})}})));
  CHECK(label.summary_name.value() == "Loop iteration");

  std::vector<std::string> ekcs{"Basic arithmetic operations", "Logical operators", "If and else if statement",
                                "Numerical comparisons"};
  auto err = render_prompt(TemplateId::kc_error_label,
                           {{"language", "Java"},
                            {"problem", "Given 2 ints, a and b, return their sum."},
                            {"code", "public int sortaSum(int a, int b){\n    if (a + b <= 10 && a + b >= 20)\n"
                                     "        return 20;\n    else\n        return a + b;\n}"},
                            {"kcs", format_list(ekcs)}});
  auto labels = parse_kc_error_json(mock->complete(err), ekcs).labels;
  CHECK(labels["Numerical comparisons"] == 1);
  CHECK(labels["Logical operators"] == 1);
  CHECK(labels["Basic arithmetic operations"] == 0);
  CHECK(labels["If and else if statement"] == 0);

  std::vector<std::string> tags{"If/Else", "Math%", "LogicAndNotOr", "SomethingNew"};
  auto tr = parse_tag_conversion_json(
      mock->complete(render_prompt(TemplateId::tag_conversion, {{"tags", format_list(tags)}})), tags);
  CHECK(tr["If/Else"] == "If and else statement");
  CHECK(tr["SomethingNew"] == "Something new");
}

TEST_CASE("cache serves repeats without provider calls and survives restarts") {
  const auto dir = fresh_dir("cache");
  auto mock = std::make_shared<MockProvider>();
  auto req = render_prompt(TemplateId::cluster_label, {{"kcs", format_list({"String length", "Length of a string"})}});
  std::string first;
  {
    LlmClient c(mock, {.cache_dir = dir});
    first = c.complete(req);
    CHECK(c.complete(req) == first);
    CHECK(c.provider_calls() == 1);
    CHECK(c.cache_hits() == 1);
  }
  LlmClient c2(mock, {.cache_dir = dir});
  CHECK(c2.complete(req) == first);
  CHECK(c2.provider_calls() == 0);
  CHECK(mock->calls() == 1);

  ChatRequest other = req;
  other.sampling.temperature = 0.7;
  CHECK(cache_key(other) != cache_key(req));
}

TEST_CASE("transport errors: retry then surface, nothing cached") {
  const auto dir = fresh_dir("retry");
  auto p = std::make_shared<ScriptedProvider>();
  p->replies = {"{\"ok\": 1}"};
  p->failures_before_success = 2;
  ClientConfig cfg;
  cfg.cache_dir = dir;
  cfg.retry = {3, std::chrono::milliseconds(1), std::chrono::milliseconds(2)};
  LlmClient c(p, cfg);
  auto req = render_prompt(TemplateId::tag_conversion, {{"tags", "For"}});
  CHECK(c.complete(req) == "{\"ok\": 1}");
  CHECK(p->calls == 3);

  auto q = std::make_shared<ScriptedProvider>();
  q->replies = {"x"};
  q->failures_before_success = 10;
  LlmClient c3(q, cfg);
  auto req2 = render_prompt(TemplateId::tag_conversion, {{"tags", "While"}});
  CHECK_THROWS_AS(c3.complete(req2), TransportError);
  CHECK(q->calls == 3);
  CHECK(!c3.lookup(cache_key([&] {
              auto r = req2;
              r.provider_model_id = cfg.model_id;
              return r;
            }()))
             .has_value());
}

TEST_CASE("structured completion re-prompts once") {
  auto p = std::make_shared<ScriptedProvider>();
  p->replies = {"garbage", "{\"KC 1\": {\"reasoning\": \"r\", \"name\": \"A\"}}"};
  LlmClient c(p, {});
  auto req = render_prompt(TemplateId::kc_generation, kcgen_slots({"int x;"}, "p"));
  auto kcs = c.complete_structured(req, [](const std::string& s) { return parse_kc_json(s); });
  CHECK(kcs.size() == 1);
  CHECK(c.reprompts() == 1);

  auto bad = std::make_shared<ScriptedProvider>();
  bad->replies = {"garbage"};
  LlmClient c2(bad, {});
  CHECK_THROWS_AS(c2.complete_structured(req, [](const std::string& s) { return parse_kc_json(s); }),
                  StructuredOutputError);
  CHECK(bad->calls == 2);
}

TEST_CASE("request validation") {
  ChatRequest r;
  r.system_message = "s";
  r.user_message = "u";
  r.sampling.temperature = -1;
  CHECK_THROWS_AS(r.validate(), ValidationError);
  r.sampling.temperature = 0;
  r.user_message.clear();
  CHECK_THROWS_AS(r.validate(), ValidationError);
}
