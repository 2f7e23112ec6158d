#include <gtest/gtest.h>

#include "biasforge/pipeline/pipeline.hpp"
#include "support.hpp"

using namespace biasforge;
using namespace biasforge::pipeline;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path data(const std::string& rel) { return testsupport::source_dir() / "data" / rel; }

json small_config(const fs::path& out) {
  return {{"seed", 7},
          {"out", out.string()},
          {"dataset", data("corpus/mini.jsonl").string()},
          {"languages", {"python", "go"}},
          {"problems", {"p01"}},
          {"templates", {data("templates/authority.jsonl").string(), data("templates/reverse_authority.jsonl").string()}},
          {"dummy_pool", data("dummy/pool.jsonl").string()},
          {"generator", {{"kind", "mock"}}},
          {"validation", {{"enabled", false}}},
          {"prompts", data("prompts").string()},
          {"judges", {{{"id", "echo"}, {"kind", "mock"}, {"mock", {{"base", "label"}}}}}}};
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

ErrorCode config_error(json raw) {
  return code_of([&] { parse_run_config(raw, testsupport::source_dir()); });
}

/// Runs the CLI and returns (exit status, stderr).
std::pair<int, std::string> cli_stderr(const std::string& args) {
  return testsupport::shell(std::string(BIASFORGE_CLI) + " " + args + " 2>&1 >/dev/null");
}

}  // namespace

TEST(Override, SetsNestedKeysAndParsesJson) {
  json j = {{"judges", {{{"id", "a"}, {"rate_limit", 1}}}}, {"seed", 1}};
  apply_override(j, "judges.0.rate_limit=2.5");
  apply_override(j, "languages=[\"go\"]");
  apply_override(j, "out=/tmp/x");
  apply_override(j, "validation.enabled=false");
  EXPECT_EQ(j["judges"][0]["rate_limit"], 2.5);
  EXPECT_EQ(j["languages"], json({"go"}));
  EXPECT_EQ(j["out"], "/tmp/x");
  EXPECT_EQ(j["validation"]["enabled"], false);
  EXPECT_EQ(code_of([&] { apply_override(j, "judges.3.id=b"); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([&] { apply_override(j, "novalue"); }), ErrorCode::ConfigError);
}

TEST(Config, Defaults) {
  auto c = parse_run_config(small_config("/tmp/o"), "/");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.biases.size(), 6u);
  EXPECT_EQ(c.paradigms, std::vector<judge::Paradigm>{judge::Paradigm::Direct});
  EXPECT_FALSE(c.validate);
  EXPECT_EQ(c.generator.kind, GeneratorConfig::Kind::Mock);
}

TEST(Config, Errors) {
  auto base = small_config("/tmp/o");
  auto without = [&](const char* key) {
    json j = base;
    j.erase(key);
    return j;
  };
  EXPECT_EQ(config_error(without("seed")), ErrorCode::ConfigError);
  EXPECT_EQ(config_error(without("out")), ErrorCode::ConfigError);
  EXPECT_EQ(config_error(without("templates")), ErrorCode::ConfigError);
  EXPECT_EQ(config_error(without("dummy_pool")), ErrorCode::ConfigError);
  EXPECT_EQ(config_error(without("generator")), ErrorCode::ConfigError);

  json j = base;
  j["colour"] = "blue";
  EXPECT_EQ(config_error(j), ErrorCode::ConfigError);
  j = base;
  j["languages"] = {"cobol"};
  EXPECT_EQ(config_error(j), ErrorCode::ConfigError);
  j = base;
  j["seed"] = -3;
  EXPECT_EQ(config_error(j), ErrorCode::ConfigError);
  j = base;
  j["judges"].push_back(j["judges"][0]);
  EXPECT_EQ(config_error(j), ErrorCode::ConfigError);
  j = base;
  j["judges"][0]["id"] = "has space";
  EXPECT_EQ(config_error(j), ErrorCode::ConfigError);
  j = base;
  j["judges"] = {{{"id", "m"}, {"kind", "http"}, {"endpoint", "http://x"}, {"api_key_env", "K"}, {"api_key", "sk"}}};
  EXPECT_EQ(config_error(j), ErrorCode::ConfigError);
  j = base;
  j["validation"] = {{"enabled", true}};
  EXPECT_EQ(config_error(j), ErrorCode::ConfigError);
  j = base;
  j["generator"] = "nobody";
  EXPECT_EQ(config_error(j), ErrorCode::ConfigError);
}

TEST(Config, RelativePathsFollowTheConfigFile) {
  auto c = load_run_config(data("configs/mock_run.json"));
  EXPECT_TRUE(fs::equivalent(c.dataset, data("corpus/mini.jsonl")));
  EXPECT_TRUE(fs::equivalent(c.dummy_pool, data("dummy/pool.jsonl")));
  auto o = load_run_config(data("configs/mock_run.json"), {"seed=9", "paradigms=[\"testcase\"]"});
  EXPECT_EQ(o.seed, 9u);
  EXPECT_EQ(o.paradigms, std::vector<judge::Paradigm>{judge::Paradigm::TestCaseBased});
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code_for(ErrorCode::ConfigError), kUsage);
  EXPECT_EQ(exit_code_for(ErrorCode::ToolchainMissing), kUsage);
  EXPECT_EQ(exit_code_for(ErrorCode::MalformedRecord), kDataError);
  EXPECT_EQ(exit_code_for(ErrorCode::EmptyInput), kDataError);
}

TEST(Stages, IngestIsStableAndInjectIsSeeded) {
  auto dir = testsupport::fresh_dir("pipe-stages");
  Pipeline a(parse_run_config(small_config(dir / "a"), dir));
  EXPECT_EQ(a.ingest().exit_code, kOk);
  const auto first = io::read_file(dir / "a" / "dataset" / "manifest.json");
  a.ingest();
  EXPECT_EQ(io::read_file(dir / "a" / "dataset" / "manifest.json"), first);

  auto r = a.inject();
  EXPECT_EQ(r.exit_code, kOk);
  auto variants = transforms::parse_variants(io::read_file(dir / "a" / "variants" / "variants.jsonl"));
  EXPECT_EQ(variants.size(), 24u);  // 4 samples x 6 biases

  Pipeline b(parse_run_config(small_config(dir / "b"), dir));
  b.ingest();
  b.inject();
  EXPECT_EQ(io::read_file(dir / "b" / "variants" / "variants.jsonl"),
            io::read_file(dir / "a" / "variants" / "variants.jsonl"));

  auto other = small_config(dir / "c");
  other["seed"] = 8;
  Pipeline c(parse_run_config(other, dir));
  c.ingest();
  c.inject();
  EXPECT_NE(io::read_file(dir / "c" / "variants" / "variants.jsonl"),
            io::read_file(dir / "a" / "variants" / "variants.jsonl"));
  fs::remove_all(dir);
}

TEST(Stages, StagesNeedTheirInputs) {
  auto dir = testsupport::fresh_dir("pipe-order");
  Pipeline p(parse_run_config(small_config(dir / "o"), dir));
  EXPECT_EQ(code_of([&] { p.inject(); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([&] { p.report(); }), ErrorCode::EmptyInput);
  p.ingest();
  p.inject();
  EXPECT_EQ(p.evaluate().exit_code, kOk);
  // Emptied stores are an input error, not an empty report.
  io::atomic_write(dir / "o" / "judgments" / "echo" / "direct.jsonl", "");
  EXPECT_EQ(code_of([&] { p.report(); }), ErrorCode::EmptyInput);
  fs::remove_all(dir);
}

TEST(Stages, RunWritesReportsAndManifest) {
  auto dir = testsupport::fresh_dir("pipe-run");
  auto raw = small_config(dir / "o");
  raw["paradigms"] = {"direct", "testcase"};
  Pipeline p(parse_run_config(raw, dir));
  EXPECT_EQ(p.run().exit_code, kOk);
  for (const char* f : {"config.json", "manifest.json", "reports/conditions.csv", "reports/mad.csv", "reports/table.txt",
                        "judgments/echo/testcases.jsonl", "logs/run.log"}) {
    EXPECT_TRUE(fs::exists(dir / "o" / f)) << f;
  }
  EXPECT_FALSE(fs::exists(dir / "o" / "logs" / "journal"));
  auto manifest = json::parse(io::read_file(dir / "o" / "manifest.json"));
  for (const char* s : {"dataset", "variants", "judgments", "reports"}) {
    EXPECT_EQ(manifest[s], io::sha256_hex(io::read_file(dir / "o" / s / "files.sha256"))) << s;
  }
  EXPECT_FALSE(json::parse(io::read_file(dir / "o" / "config.json")).contains("out"));
  fs::remove_all(dir);
}

TEST(Cli, ErrorsAreJsonOnStderrWithExitCodes) {
  auto dir = testsupport::fresh_dir("pipe-cli");
  auto corpus = io::read_file(data("corpus/mini.jsonl"));
  testsupport::write(dir / "bad.jsonl", corpus.substr(0, corpus.find('\n') + 1) + "{\"kind\": \"sample\", oops\n");
  const std::string cfg = data("configs/mock_run.json").string();

  auto [rc, err] = cli_stderr("ingest --config " + cfg + " --out " + (dir / "o").string() + " --set dataset=" +
                              (dir / "bad.jsonl").string());
  EXPECT_EQ(rc, kDataError);
  auto j = json::parse(err);
  EXPECT_EQ(j["error"], "MalformedRecord");
  EXPECT_EQ(j["line"], 2);

  std::tie(rc, err) = cli_stderr("ingest --config " + cfg + " --out " + (dir / "o").string() + " --set colour=1");
  EXPECT_EQ(rc, kUsage);
  EXPECT_EQ(json::parse(err)["error"], "ConfigError");

  std::tie(rc, err) = cli_stderr("report --config " + cfg + " --out " + (dir / "empty").string());
  EXPECT_EQ(rc, kDataError);
  EXPECT_EQ(json::parse(err)["error"], "EmptyInput");

  EXPECT_EQ(cli_stderr("").first, kUsage);
  EXPECT_EQ(cli_stderr("ingest").first, kUsage);
  fs::remove_all(dir);
}

TEST(Cli, SummaryOnStdout) {
  auto dir = testsupport::fresh_dir("pipe-cli-ok");
  auto [rc, out] = testsupport::shell(std::string(BIASFORGE_CLI) + " ingest --config " +
                                      data("configs/mock_run.json").string() + " --out " + dir.string() +
                                      " --seed 3 --set 'languages=[\"go\"]' 2>/dev/null");
  EXPECT_EQ(rc, kOk);
  auto j = json::parse(out);
  EXPECT_EQ(j["stage"], "ingest");
  EXPECT_EQ(json::parse(io::read_file(dir / "config.json"))["seed"], 3);
  fs::remove_all(dir);
}
