#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "adaptrl/cli.hpp"
#include "adaptrl/harness.hpp"
#include "adaptrl/io.hpp"

using namespace adaptrl;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args, const std::string& input = "") {
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = run_cli(args, in, out, err);
  return {code, out.str(), err.str()};
}

struct Workspace {
  fs::path root;
  fs::path config;
  Workspace() {
    root = fs::temp_directory_path() / ("adaptrl_cli_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    config = root / "config.json";
    write_file(config,
               R"({"num_runs": 2, "training": {"epochs": 2, "sessions_per_epoch": 10}, "jobs": 2})");
  }
  ~Workspace() { fs::remove_all(root); }
  std::string dir(const std::string& name) const { return (root / name).string(); }
};

}  // namespace

TEST_CASE("usage errors exit with 1") {
  Run r = cli({"frobnicate"});
  CHECK(r.code == 1);
  CHECK(r.err.find("Usage") != std::string::npos);
  r = cli({});
  CHECK(r.code == 1);
  r = cli({"report"});
  CHECK(r.code == 1);
  r = cli({"train", "--reward", "sometimes"});
  CHECK(r.code == 1);
  r = cli({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("compare-rewards") != std::string::npos);
}

TEST_CASE("bad inputs exit with 1") {
  Workspace ws;
  write_file(ws.root / "broken.json", "{\"num_runs\": ");
  CHECK(cli({"train", "--config", (ws.root / "broken.json").string()}).code == 1);
  CHECK(cli({"report", "--metrics", ws.dir("missing.csv")}).code == 1);
  CHECK(cli({"fit-users", "--config", ws.config.string(), "--logs", ws.dir("nowhere"),
             "--out", ws.dir("o")}).code == 1);
}

TEST_CASE("train twice with the same seed gives identical artifacts") {
  Workspace ws;
  const std::string cfg = ws.config.string();
  REQUIRE(cli({"train", "--config", cfg, "--seed", "7", "--out", ws.dir("a")}).code == 0);
  REQUIRE(cli({"train", "--config", cfg, "--seed", "7", "--out", ws.dir("b")}).code == 0);
  for (const char* f : {"qtable.json", "metrics.csv"}) {
    CHECK(read_file(ws.root / "a" / f) == read_file(ws.root / "b" / f));
  }
  REQUIRE(cli({"train", "--config", cfg, "--seed", "8", "--out", ws.dir("c")}).code == 0);
  CHECK(read_file(ws.root / "a" / "qtable.json") != read_file(ws.root / "c" / "qtable.json"));
}

TEST_CASE("seed precedence: flag over environment over config") {
  Workspace ws;
  const std::string cfg = ws.config.string();
  ::setenv("ADAPT_RL_SEED", "7", 1);
  REQUIRE(cli({"train", "--config", cfg, "--out", ws.dir("env")}).code == 0);
  REQUIRE(cli({"train", "--config", cfg, "--seed", "9", "--out", ws.dir("flag")}).code == 0);
  ::setenv("ADAPT_RL_SEED", "x7", 1);
  CHECK(cli({"train", "--config", cfg, "--out", ws.dir("bad")}).code == 1);
  ::unsetenv("ADAPT_RL_SEED");
  REQUIRE(cli({"train", "--config", cfg, "--seed", "7", "--out", ws.dir("seven")}).code == 0);
  REQUIRE(cli({"train", "--config", cfg, "--seed", "9", "--out", ws.dir("nine")}).code == 0);
  CHECK(read_file(ws.root / "env" / "qtable.json") == read_file(ws.root / "seven" / "qtable.json"));
  CHECK(read_file(ws.root / "flag" / "qtable.json") == read_file(ws.root / "nine" / "qtable.json"));
}

TEST_CASE("compare-rewards writes all three variants") {
  Workspace ws;
  const Run r = cli({"compare-rewards", "--config", ws.config.string(), "--out", ws.dir("cmp")});
  REQUIRE(r.code == 0);
  const std::string csv = read_file(ws.root / "cmp" / "metrics.csv");
  for (const char* v : {"RE_only", "RE_plus_E", "E_only"}) CHECK(csv.find(v) != std::string::npos);
  CHECK(fs::exists(ws.root / "cmp" / "summary.csv"));
  CHECK(fs::exists(ws.root / "cmp" / "models" / "model_1.json"));
  CHECK(fs::exists(ws.root / "cmp" / "clusters.json"));

  const Run rep = cli({"report", "--metrics", (ws.root / "cmp" / "metrics.csv").string(),
                       "--gnuplot", ws.dir("plot.gp"), "--summary", ws.dir("sum.csv")});
  CHECK(rep.code == 0);
  CHECK(read_file(ws.root / "sum.csv") == read_file(ws.root / "cmp" / "summary.csv"));
  CHECK(fs::file_size(ws.root / "plot.gp") > 0);
}

TEST_CASE("gen-population, fit-users and train from a model file") {
  Workspace ws;
  const std::string cfg = ws.config.string();
  REQUIRE(cli({"gen-population", "--config", cfg, "--out", ws.dir("pop")}).code == 0);
  CHECK(ingest_logs(ws.root / "pop" / "logs").size() == 40);
  const Run fit = cli({"fit-users", "--config", cfg, "--logs", ws.dir("pop/logs"), "--out", ws.dir("fit")});
  REQUIRE(fit.code == 0);
  CHECK(fit.out.find("cluster 1: 11 users") != std::string::npos);
  CHECK(fit.out.find("cluster 2: 9 users") != std::string::npos);
  const std::string model = (ws.root / "fit" / "models" / "model_2.json").string();
  REQUIRE(cli({"train", "--config", cfg, "--model", model, "--reward", "E_only", "--out",
               ws.dir("tr")}).code == 0);
  const std::string q = (ws.root / "tr" / "qtable.json").string();
  REQUIRE(cli({"train", "--config", cfg, "--model", model, "--init-qtable", q, "--out",
               ws.dir("warm")}).code == 0);
  CHECK(parse_metrics_csv(read_file(ws.root / "warm" / "metrics.csv")).size() == 2);
}

TEST_CASE("transfer writes its artifacts") {
  Workspace ws;
  const Run r = cli({"transfer", "--config", ws.config.string(), "--out", ws.dir("t"),
                     "--source", "1", "--target", "2"});
  REQUIRE(r.code == 0);
  for (const char* f : {"pretraining_metrics.csv", "transfer_metrics.csv", "selected_qtable.json",
                        "transfer_summary.csv"}) {
    CHECK(fs::exists(ws.root / "t" / f));
  }
  CHECK(cli({"transfer", "--config", ws.config.string(), "--out", ws.dir("t2"), "--target", "5"})
            .code == 1);
}

TEST_CASE("simulate plays a text session") {
  Workspace ws;
  std::string answers;
  for (int i = 0; i < 10; ++i) answers += "happy happy happy\n";
  const Run r = cli({"simulate", "--config", ws.config.string()}, answers);
  CHECK(r.code == 0);
  CHECK(r.out.find("[10/10]") != std::string::npos);
  CHECK(r.out.find("Final score:") != std::string::npos);

  const Run early = cli({"simulate", "--config", ws.config.string()}, "sad\n");
  CHECK(early.code == 0);
  CHECK(early.out.find("Session ended early") != std::string::npos);
}

TEST_CASE("the installed binary reports exit codes") {
  const std::string bin = ADAPTRL_CLI_PATH;
  auto status = [&](const std::string& args) {
    const int raw = std::system((bin + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status("--help") == 0);
  CHECK(status("no-such-command") == 1);
  CHECK(status("report --metrics /nonexistent/metrics.csv") == 1);
}
