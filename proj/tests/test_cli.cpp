#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "lmp/io.hpp"

namespace fs = std::filesystem;
using namespace lmp;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("lmp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) const {
    const std::string cmd = "LMP_LOG=quiet \"" + std::string(LMP_CLI_PATH) + "\" " + args + " 2>" +
                            (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SynthDetectEvalIsExact) {
  // Sinusoidal cycles of 20 frames put every extremum on a sample.
  ASSERT_EQ(run("synth-traj --profile sinusoid --out " + path("t.csv") + " --gt " + path("gt.json")), 0);
  ASSERT_EQ(run("detect --traj " + path("t.csv") + " --out " + path("pred.json") + " --diagnostics " +
                path("diag.json")),
            0);
  ASSERT_EQ(run("eval --gt " + path("gt.json") + " --pred " + path("pred.json") + " --fps 50 --csv " +
                path("rep.csv") + " --json " + path("rep.json")),
            0);
  const auto rep = io::report_from_csv(io::read_text(path("rep.csv")));
  ASSERT_EQ(rep.rows.size(), 12u);
  for (const auto& r : rep.rows) {
    EXPECT_EQ(r.frames.mean, 0.0);
    EXPECT_EQ(r.unmatched_gt, 0u);
    EXPECT_EQ(r.unmatched_pred, 0u);
  }
  const auto j = nlohmann::json::parse(io::read_text(path("rep.json")));
  EXPECT_EQ(j.at("rows").size(), 12u);
  EXPECT_EQ(io::read_annotation(path("pred.json")), io::read_annotation(path("gt.json")));
  const auto diag = io::diagnostics_from_json(nlohmann::json::parse(io::read_text(path("diag.json"))));
  EXPECT_EQ(diag.phases, io::read_annotation(path("gt.json")));
}

TEST_F(Cli, ShortTrajectoryIsContractViolation) {
  io::write_text(path("short.csv"), "# fps=20\nt,a1,a2\n0,0,0\n1,1,0\n2,0,0\n");
  EXPECT_EQ(run("detect --traj " + path("short.csv") + " --out " + path("o.json")), 4);
}

TEST_F(Cli, IdenticalAnnotationsScoreZero) {
  io::write_annotation(path("a.json"), {{4, 30, 56}, {12, 38, 64}});
  ASSERT_EQ(run("eval --gt " + path("a.json") + " --pred " + path("a.json") + " --fps 30 --csv " + path("r.csv")),
            0);
  for (const auto& r : io::report_from_csv(io::read_text(path("r.csv"))).rows) {
    EXPECT_EQ(r.frames.mean, 0.0);
    EXPECT_EQ(r.ms.mean, 0.0);
  }
}

TEST_F(Cli, ExitCodesDistinguishFailures) {
  EXPECT_EQ(run("detect --bogus"), 2);
  EXPECT_EQ(run(""), 2);
  io::write_text(path("bad.csv"), "# fps=20\nx,y\n");
  EXPECT_EQ(run("detect --traj " + path("bad.csv") + " --out " + path("o.json")), 3);
  EXPECT_EQ(run("detect --traj " + path("missing.csv") + " --out " + path("o.json")), 3);
  ASSERT_EQ(run("synth-traj --out " + path("t.csv") + " --gt " + path("gt.json")), 0);
  EXPECT_EQ(run("detect --traj " + path("t.csv") + " --out " + path("o.json") + " --savgol-window 8"), 4);
  EXPECT_EQ(run("detect --traj " + path("t.csv") + " --out " + path("o.json") + " --policy sideways"), 4);
  ASSERT_EQ(run("synth-frames --out-dir " + path("frames") + " --sequences 2"), 0);
  EXPECT_EQ(run("train --frames " + path("frames") + " --checkpoint " + path("m.ckpt") + " --history " +
                path("h.csv") + " --epochs 30 --lr 100"),
            5);
}

TEST_F(Cli, FullPipelineIsDeterministic) {
  auto pipeline = [&](const std::string& tag) {
    const std::string d = path(tag);
    EXPECT_EQ(run("synth-frames --out-dir " + d + " --sequences 2 --noise 0.01 --seed 3 --pgm"), 0);
    EXPECT_EQ(run("train --frames " + d + " --checkpoint " + d + "/m.ckpt --history " + d + "/h.csv --epochs 5"),
              0);
    EXPECT_EQ(run("extract --checkpoint " + d + "/m.ckpt --frames " + d + "/seq_000.frames --out " + d + "/t.csv"),
              0);
    EXPECT_EQ(run("detect --traj " + d + "/t.csv --out " + d + "/p.json --diagnostics " + d + "/diag.json"), 0);
    EXPECT_EQ(run("eval --gt " + d + "/seq_000.gt.json --pred " + d + "/p.json --fps 50 --csv " + d + "/r.csv"), 0);
    EXPECT_EQ(run("plot --traj " + d + "/t.csv --diagnostics " + d + "/diag.json --gt " + d +
                  "/seq_000.gt.json --out " + d + "/plot.svg"),
              0);
  };
  pipeline("a");
  pipeline("b");
  for (const char* f : {"seq_000.frames", "seq_001.gt.json", "seq_000.pgm", "m.ckpt", "h.csv", "t.csv", "p.json",
                        "diag.json", "r.csv", "plot.svg"}) {
    EXPECT_EQ(io::read_text(path("a") + "/" + f), io::read_text(path("b") + "/" + f)) << f;
  }
  // Every written file is readable by its reader.
  EXPECT_NO_THROW(io::read_frames(path("a") + "/seq_000.frames"));
  EXPECT_NO_THROW(io::read_checkpoint(path("a") + "/m.ckpt"));
  EXPECT_NO_THROW(io::read_trajectory(path("a") + "/t.csv"));
  EXPECT_NO_THROW(io::read_annotation(path("a") + "/p.json"));
  EXPECT_NO_THROW(io::report_from_csv(io::read_text(path("a") + "/r.csv")));
  EXPECT_EQ(io::read_text(path("a") + "/plot.svg").rfind("<svg", 0), 0u);
}
