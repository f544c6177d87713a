#include <cstdlib>
#include <string>
#include <sys/wait.h>

#include <doctest.h>
#include <json.hpp>

#include "driftmon/io.hpp"
#include "driftmon/online.hpp"
#include "helpers.hpp"

using namespace driftmon;
using namespace dmtest;
using nlohmann::json;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const ScopedDir& dir, const std::string& args) {
  const char* binary = std::getenv("DRIFTMON_CLI");
  REQUIRE_MESSAGE(binary != nullptr, "DRIFTMON_CLI must point at the built binary");
  const std::string out_path = dir.file("cli_out.txt");
  const std::string err_path = dir.file("cli_err.txt");
  const std::string cmd =
      std::string("\"") + binary + "\" " + args + " >" + out_path + " 2>" + err_path;
  const int status = std::system(cmd.c_str());
  CliResult result;
  result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = read_file(out_path);
  result.err = read_file(err_path);
  return result;
}

constexpr const char* kSynth = " --synth-labels 3 --synth-d 16 --synth-rows 2500 --drift-shift 8";

// One fitted model with thresholds, shared across the suite.
struct CliFixture {
  ScopedDir dir{"cli_fix"};
  std::string hist, model, model_t;
};

const CliFixture& fixture() {
  static CliFixture f;
  static bool built = false;
  if (!built) {
    f.hist = f.dir.file("hist");
    f.model = f.dir.file("m.dmdl");
    f.model_t = f.dir.file("mt.dmdl");
    auto sim = run_cli(f.dir, "simulate --out " + f.hist +
                                  " --pattern sudden --total 2 --onset 2 --level 0"
                                  " --window-size 2400 --seed 21" +
                                  kSynth);
    REQUIRE(sim.code == 0);
    auto fit = run_cli(f.dir, "fit-baseline --embeddings " + f.hist +
                                  "/window_0000.dlem --output " + f.model +
                                  " --d-prime 6 --d-prime-label 4 --seed 21");
    REQUIRE(fit.code == 0);
    REQUIRE(fit.out.find("baseline") != std::string::npos);
    auto est = run_cli(f.dir, "estimate-threshold --model " + f.model + " --embeddings " +
                                  f.hist + "/window_0001.dlem --output " + f.model_t +
                                  " --window-size 150 --n-th 300 --t-alpha 0.01 --seed 22");
    REQUIRE(est.code == 0);
    built = true;
  }
  return f;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("nondrift stream stays unflagged through the pipeline") {
    const auto& fix = fixture();
    ScopedDir dir("cli_clean");
    auto sim = run_cli(dir, "simulate --out " + dir.file("stream") +
                                " --pattern sudden --total 20 --onset 20 --level 0"
                                " --window-size 150 --seed 33" +
                                kSynth);
    REQUIRE(sim.code == 0);
    auto mon = run_cli(dir, "monitor --model " + fix.model_t + " --stream " +
                                dir.file("stream") + " --out " + dir.file("mon"));
    REQUIRE(mon.code == 0);

    const MonitorLog log = read_monitor_csv(dir.file("mon") + "/curves.csv");
    REQUIRE(log.reports.size() == 20);
    int flagged = 0;
    for (const auto& report : log.reports) {
      CHECK(report.batch_distance.has_value());
      flagged += report.batch_drift;
    }
    CHECK(flagged <= 2);  // t_alpha 0.01 over 20 windows

    const json meta = json::parse(read_file(dir.file("mon") + "/meta.json"));
    CHECK(meta.at("metric") == "fdd");
    CHECK(meta.at("m_w") == 150);
    CHECK(meta.at("t_batch").is_number());
  }

  TEST_CASE("window size comes from flag or config file, else usage error") {
    const auto& fix = fixture();
    ScopedDir dir("cli_cfg");
    auto bare = run_cli(dir, "estimate-threshold --model " + fix.model + " --embeddings " +
                                 fix.hist + "/window_0001.dlem --output " + dir.file("x.dmdl"));
    CHECK(bare.code != 0);
    CHECK(bare.err.find("--window-size") != std::string::npos);

    atomic_write_file(dir.file("cfg.json"),
                      "{\"window-size\": 150, \"n-th\": 200, \"t-alpha\": 0.05}\n");
    auto cfg = run_cli(dir, "estimate-threshold --model " + fix.model + " --embeddings " +
                                fix.hist + "/window_0001.dlem --output " + dir.file("a.dmdl") +
                                " --config " + dir.file("cfg.json") + " --seed 5");
    REQUIRE(cfg.code == 0);
    CHECK(cfg.out.find("t_alpha 0.05") != std::string::npos);
    CHECK(cfg.out.find("m_w 150") != std::string::npos);

    // flags outrank the config file
    auto override_run = run_cli(
        dir, "estimate-threshold --model " + fix.model + " --embeddings " + fix.hist +
                 "/window_0001.dlem --output " + dir.file("b.dmdl") + " --config " +
                 dir.file("cfg.json") + " --t-alpha 0.25 --seed 5");
    REQUIRE(override_run.code == 0);
    CHECK(override_run.out.find("t_alpha 0.25") != std::string::npos);

    const auto a = load_bundle(dir.file("a.dmdl"));
    const auto b = load_bundle(dir.file("b.dmdl"));
    CHECK(b.bundle.thresholds->t_batch <= a.bundle.thresholds->t_batch);
  }

  TEST_CASE("alternate metric is plumbed through and recorded") {
    const auto& fix = fixture();
    ScopedDir dir("cli_metric");
    auto est = run_cli(dir, "estimate-threshold --model " + fix.model + " --embeddings " +
                                fix.hist + "/window_0001.dlem --output " + dir.file("kl.dmdl") +
                                " --window-size 150 --n-th 200 --metric kl --seed 9");
    REQUIRE(est.code == 0);
    auto sim = run_cli(dir, "simulate --out " + dir.file("stream") +
                                " --pattern sudden --total 4 --onset 4 --level 0"
                                " --window-size 150 --seed 41" +
                                kSynth);
    REQUIRE(sim.code == 0);
    auto mon = run_cli(dir, "monitor --model " + dir.file("kl.dmdl") + " --stream " +
                                dir.file("stream") + " --out " + dir.file("mon"));
    REQUIRE(mon.code == 0);
    const json meta = json::parse(read_file(dir.file("mon") + "/meta.json"));
    CHECK(meta.at("metric") == "kl");

    auto bad = run_cli(dir, "estimate-threshold --model " + fix.model + " --embeddings " +
                               fix.hist + "/window_0001.dlem --output " + dir.file("x.dmdl") +
                               " --window-size 150 --metric warp");
    CHECK(bad.code == 10 + static_cast<int>(ErrorKind::FormatError));
  }

  TEST_CASE("pipeline outputs are byte-identical across reruns") {
    const auto& fix = fixture();
    ScopedDir dir("cli_repro");
    auto sim = run_cli(dir, "simulate --out " + dir.file("stream") +
                                " --pattern periodic --total 8 --block 2 --level 30"
                                " --window-size 150 --seed 52" +
                                kSynth);
    REQUIRE(sim.code == 0);
    for (const char* out : {"m1", "m2"}) {
      auto mon = run_cli(dir, "monitor --model " + fix.model_t + " --stream " +
                                  dir.file("stream") + " --out " + dir.file(out));
      REQUIRE(mon.code == 0);
    }
    for (const char* name :
         {"/curves.csv", "/meta.json", "/batch_chart.svg", "/labels_chart.svg"}) {
      CHECK(read_file(dir.file("m1") + name) == read_file(dir.file("m2") + name));
    }

    const std::string fit_args = "fit-baseline --embeddings " + fix.hist +
                                 "/window_0000.dlem --d-prime 6 --d-prime-label 4 --seed 21"
                                 " --timestamp 2026-08-16T00:00:00Z --output ";
    REQUIRE(run_cli(dir, fit_args + dir.file("f1.dmdl")).code == 0);
    REQUIRE(run_cli(dir, fit_args + dir.file("f2.dmdl")).code == 0);
    CHECK(read_file(dir.file("f1.dmdl")) == read_file(dir.file("f2.dmdl")));
  }

  TEST_CASE("failures carry distinct nonzero exit codes") {
    const auto& fix = fixture();
    ScopedDir dir("cli_err");
    auto missing = run_cli(dir, "fit-baseline --embeddings " + dir.file("nope.dlem") +
                                    " --output " + dir.file("x.dmdl"));
    CHECK(missing.code == 10 + static_cast<int>(ErrorKind::IoError));
    CHECK(missing.err.find("error:") != std::string::npos);

    auto bare = run_cli(dir, "monitor --model " + fix.model + " --stream " + dir.file("s") +
                                 " --out " + dir.file("o"));
    CHECK(bare.code == 10 + static_cast<int>(ErrorKind::InvalidInput));
    CHECK(bare.err.find("thresholds") != std::string::npos);

    atomic_write_file(dir.file("bad.json"), "{\"mystery\": 1}\n");
    auto bad_cfg = run_cli(dir, "fit-baseline --embeddings " + fix.hist +
                                    "/window_0000.dlem --output " + dir.file("x.dmdl") +
                                    " --config " + dir.file("bad.json"));
    CHECK(bad_cfg.code == 10 + static_cast<int>(ErrorKind::FormatError));

    atomic_write_file(dir.file("junk.dlem"), "XXXXjunkjunkjunkjunk");
    auto junk = run_cli(dir, "fit-baseline --embeddings " + dir.file("junk.dlem") +
                                 " --output " + dir.file("x.dmdl"));
    CHECK(junk.code == 10 + static_cast<int>(ErrorKind::FormatError));

    auto usage = run_cli(dir, "frobnicate");
    CHECK(usage.code != 0);
    CHECK(usage.code != missing.code);
  }

  TEST_CASE("evaluate scores a drifted stream") {
    const auto& fix = fixture();
    ScopedDir dir("cli_eval");
    auto sim = run_cli(dir, "simulate --out " + dir.file("stream") +
                                " --pattern sudden --total 20 --onset 10 --level 40"
                                " --window-size 150 --seed 61" +
                                kSynth);
    REQUIRE(sim.code == 0);
    auto eva = run_cli(dir, "evaluate --model " + fix.model_t + " --stream " +
                                dir.file("stream") + " --out " + dir.file("ev"));
    REQUIRE(eva.code == 0);

    const json summary = json::parse(read_file(dir.file("ev") + "/summary.json"));
    CHECK(summary.at("windows") == 20);
    CHECK(summary.at("accuracy").contains("0"));
    CHECK(summary.at("accuracy").contains("40"));
    CHECK(summary.at("h_dd").get<double>() >= 0.9);
    CHECK(summary.at("spearman").get<double>() > 0.5);

    const auto rows = parse_csv(read_file(dir.file("ev") + "/eval_windows.csv"));
    REQUIRE(rows.size() == 21);
    CHECK(rows[0][0] == "window_id");
    CHECK(rows[0][4] == "batch_drift");
  }

  TEST_CASE("explain resolves prototype ids through the sidecar") {
    ScopedDir dir("cli_explain");
    auto sim = run_cli(dir, "simulate --out " + dir.file("stream") +
                                " --pattern sudden --total 1 --onset 0 --level 40"
                                " --window-size 200 --seed 71" +
                                kSynth);
    REQUIRE(sim.code == 0);
    std::string ids;
    for (int i = 0; i < 200; ++i) ids += "row-" + std::to_string(i) + "\n";
    atomic_write_file(dir.file("ids.txt"), ids);

    auto exp = run_cli(dir, "explain --window " + dir.file("stream") +
                                "/window_0000.dlem --output " + dir.file("report.json") +
                                " --k-max 6 --top-n 3 --ids " + dir.file("ids.txt") +
                                " --seed 7");
    REQUIRE(exp.code == 0);

    const json report = json::parse(read_file(dir.file("report.json")));
    CHECK(report.at("scope") == "batch");
    CHECK(report.at("k").get<int>() >= 2);
    CHECK(report.at("clusters").size() == report.at("k").get<std::size_t>());
    for (const auto& cluster : report.at("clusters")) {
      REQUIRE(cluster.at("prototypes").size() >= 1);
      double last = -1.0;
      for (const auto& prototype : cluster.at("prototypes")) {
        const auto source = prototype.at("source_row").get<int>();
        CHECK(prototype.at("id") == "row-" + std::to_string(source));
        CHECK(prototype.at("distance").get<double>() >= last);
        last = prototype.at("distance").get<double>();
      }
    }
  }
}
