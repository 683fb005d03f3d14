#include <gtest/gtest.h>

#include <sstream>

#include "gridsynth/cli.hpp"
#include "gridsynth/curriculum.hpp"
#include "test_util.hpp"

using namespace gridsynth;
using namespace testutil;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome cli(std::vector<std::string> args) {
  args.insert(args.begin(), "gridsynth");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  Outcome o;
  o.code = cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

std::vector<std::string> tiny_run(const std::string& out) {
  return {"run",         "--env",          "maze", "--profile",        "desk", "--seed",           "7",
          "--out",       out,              "--corpus-size", "30",      "--max-tasks", "10",        "--max-iterations",
          "2",           "--max-candidates", "3000", "--oracle-episodes", "1",   "--eval-episodes", "1",
          "--jobs",      "2"};
}

int line_count(const std::string& text) { return static_cast<int>(std::count(text.begin(), text.end(), '\n')); }

}  // namespace

TEST(Cli, UsageErrorsExitOne) {
  const Outcome none = cli({});
  EXPECT_EQ(none.code, 1);
  EXPECT_NE(none.err.find("error:"), std::string::npos);

  const Outcome unknown = cli({"frobnicate"});
  EXPECT_EQ(unknown.code, 1);

  const Outcome missing = cli({"run", "--out", "/tmp/x"});
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("--env"), std::string::npos);
  EXPECT_NE(missing.err.find("Run the curriculum loop"), std::string::npos);  // subcommand help

  EXPECT_EQ(cli({"explain", "somewhere", "--task", "t", "--format", "png"}).code, 1);
  EXPECT_EQ(cli({"run", "--env", "maze", "--out", "/tmp/x", "--max-arity", "4"}).code, 1);
}

TEST(Cli, HelpExitsZero) {
  const Outcome help = cli({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("export-prompts"), std::string::npos);
  const Outcome run_help = cli({"run", "--help"});
  EXPECT_EQ(run_help.code, 0);
  EXPECT_NE(run_help.out.find("two consecutive iterations"), std::string::npos);
}

TEST(Cli, RuntimeFailuresExitTwo) {
  const auto dir = temp_dir("cli-fail");
  EXPECT_EQ(cli({"collect", "--env", "pong", "--out", (dir / "x.json").string()}).code, 2);
  EXPECT_EQ(cli({"library", (dir / "no-run").string()}).code, 2);
  EXPECT_EQ(cli({"run", "--env", "maze", "--out", (dir / "r").string(), "--t-min", "9", "--t-max", "3"}).code, 2);
}

TEST(Cli, EnvsListsEverySpec) {
  const Outcome o = cli({"envs"});
  EXPECT_EQ(o.code, 0);
  for (const char* s : {"maze", "asterix", "spaceinvaders", "map -> direction -> action", "no-op"}) {
    EXPECT_NE(o.out.find(s), std::string::npos) << s;
  }
}

TEST(Cli, CollectAndExportPrompts) {
  const auto dir = temp_dir("cli-collect");
  const auto file = (dir / "maze.json").string();
  const Outcome c = cli({"collect", "--env", "maze", "--episodes", "2", "--seed", "3", "--max-steps", "12", "--out", file});
  ASSERT_EQ(c.code, 0) << c.err;
  const auto trajs = trajectories_from_json(read_json(file));
  ASSERT_EQ(trajs.size(), 2u);

  const Outcome p = cli({"export-prompts", file, "--out", (dir / "maze").string(), "--length", "3"});
  ASSERT_EQ(p.code, 0) << p.err;
  const std::string text = read_text(dir / "maze.prompts.txt");
  EXPECT_EQ(line_count(text), static_cast<int>(slice(trajs, 3).tasks.size()));
  EXPECT_EQ(text.substr(0, text.find('\n')), encode_prompt(slice(trajs, 3).tasks.front()));

  const Outcome whole = cli({"export-prompts", file, "--out", (dir / "whole.prompts.txt").string()});
  ASSERT_EQ(whole.code, 0);
  EXPECT_EQ(line_count(read_text(dir / "whole.prompts.txt")), 2);
}

TEST(Cli, ConfigFileWithFlagsWinning) {
  const auto dir = temp_dir("cli-config");
  write_text(dir / "run.cfg",
             "# tiny maze run\nenv = maze\ncorpus-size=25\nmax-iterations=3\nmax-tasks=8\nmax-candidates=2000\n"
             "oracle-episodes=1\neval-episodes=1\n");
  const Outcome o = cli({"run", "--config", (dir / "run.cfg").string(), "--max-iterations", "1", "--out",
                         (dir / "run").string()});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto cfg = read_json(dir / "run" / "run.json").at("config");
  EXPECT_EQ(cfg.at("corpusSize"), 25);
  EXPECT_EQ(cfg.at("maxIterations"), 1);
  EXPECT_EQ(cfg.at("maxTasks"), 8);
  write_text(dir / "bad.cfg", "env maze\n");
  EXPECT_EQ(cli({"run", "--config", (dir / "bad.cfg").string(), "--out", (dir / "run2").string()}).code, 1);
}

TEST(Cli, RunLibraryEvalExplain) {
  const auto dir = temp_dir("cli-run");
  const auto run_dir = (dir / "m7").string();
  const Outcome r = cli(tiny_run(run_dir));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("iter 0: L=3"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "m7" / "run.json"));

  const Outcome lib = cli({"library", run_dir});
  ASSERT_EQ(lib.code, 0) << lib.err;
  EXPECT_NE(lib.out.find("Number of extracted functions: "), std::string::npos);

  const Outcome ev = cli({"eval", run_dir, "--seeds", "fresh", "--jobs", "2"});
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_EQ(ev.out.rfind("L,accuracy,n_tasks\n", 0), 0u);
  EXPECT_EQ(read_text(dir / "m7" / "eval.csv"), ev.out);
  std::istringstream rows(ev.out);
  std::string line;
  std::getline(rows, line);
  while (std::getline(rows, line)) {
    const double acc = std::stod(line.substr(line.find(',') + 1));
    EXPECT_GE(acc, 0.0);
    EXPECT_LE(acc, 1.0);
  }

  const auto solved = read_json(dir / "m7" / "iter-0" / "solved.json");
  std::string task;
  for (const auto& t : solved.at("tasks")) {
    if (!t.at("programs").empty()) {
      task = t.at("taskId").get<std::string>();
      break;
    }
  }
  ASSERT_FALSE(task.empty());
  const Outcome ex = cli({"explain", run_dir, "--task", task, "--format", "ascii"});
  ASSERT_EQ(ex.code, 0) << ex.err;
  std::string safe = task;
  std::replace(safe.begin(), safe.end(), '@', '_');
  EXPECT_TRUE(std::filesystem::exists(dir / "m7" / "explain" / safe / "manifest.json"));
  EXPECT_EQ(cli({"explain", run_dir, "--task", "nope@0"}).code, 2);
}
