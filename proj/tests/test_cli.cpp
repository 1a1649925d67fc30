#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "ppgad/cli.hpp"
#include "ppgad/data.hpp"

using namespace ppgad;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome ppgad_run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// A scratch directory removed when the test case ends.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name)
      : dir(fs::temp_directory_path() / ("ppgad-cli-" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& leaf) const { return (dir / leaf).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t line_count(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

// Three short subjects; small enough for fast end-to-end runs.
std::string tiny_cohort(const Scratch& s, std::size_t subjects = 3) {
  const auto r = ppgad_run({"synth", "--n-subjects", std::to_string(subjects), "--duration-s", "20",
                            "--seed", "4", "--out", s / "cohort"});
  REQUIRE(r.code == cli::kOk);
  return s / "cohort/manifest.txt";
}

const std::vector<std::string> kTinyNet = {"--target-len", "64", "--kernel", "5", "--channels", "2",
                                          "--blocks", "1", "--latent-dim", "2", "--batch", "16"};

std::vector<std::string> with(std::vector<std::string> args, const std::vector<std::string>& more) {
  args.insert(args.end(), more.begin(), more.end());
  return args;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("argument errors exit with the configuration code") {
  CHECK(ppgad_run({}).code == cli::kConfig);
  CHECK(ppgad_run({"frobnicate"}).code == cli::kConfig);
  CHECK(ppgad_run({"synth", "--no-such-flag"}).code == cli::kConfig);
  CHECK(ppgad_run({"synth", "--n-subjects", "three"}).code == cli::kConfig);
  const auto help = ppgad_run({"--help"});
  CHECK(help.code == cli::kOk);
  CHECK(help.out.find("scenario") != std::string::npos);
  const auto version = ppgad_run({"--version"});
  CHECK(version.code == cli::kOk);
}

TEST_CASE("synth writes a cohort and rejects an empty one before touching disk") {
  Scratch s("synth");
  const auto bad = ppgad_run({"synth", "--n-subjects", "0", "--out", s / "none"});
  CHECK(bad.code == cli::kConfig);
  CHECK(bad.err.find("n-subjects") != std::string::npos);
  CHECK_FALSE(fs::exists(s / "none"));

  CHECK(ppgad_run({"synth", "--band", "5:1", "--out", s / "band"}).code == cli::kConfig);
  CHECK_FALSE(fs::exists(s / "band"));

  const auto ok = ppgad_run({"synth", "--n-subjects", "5", "--duration-s", "30", "--out", s / "c"});
  REQUIRE(ok.code == cli::kOk);
  std::size_t samples = 0;
  for (const auto& e : fs::directory_iterator(s.dir / "c")) samples += e.path().extension() == ".txt";
  CHECK(samples == 11);  // ten recordings plus the manifest
  const auto m = data::read_manifest(s / "c/manifest.txt");
  CHECK(m.records.size() == 10);
}

TEST_CASE("preprocess: window counts, byte-identical reruns, error codes") {
  Scratch s("preprocess");
  REQUIRE(ppgad_run({"synth", "--n-subjects", "2", "--out", s / "c"}).code == cli::kOk);
  const auto r = ppgad_run({"preprocess", "--manifest", s / "c/manifest.txt", "--out", s / "a.win"});
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out.find("S01 Sitting 225 windows") != std::string::npos);
  const auto archive = data::load_windows(s / "a.win");
  CHECK(archive.windows.size() == 4 * 225);
  CHECK(r.out.find("total 900 windows") != std::string::npos);

  REQUIRE(ppgad_run({"preprocess", "--manifest", s / "c/manifest.txt", "--out", s / "b.win"}).code ==
          cli::kOk);
  CHECK(slurp(s / "a.win") == slurp(s / "b.win"));

  CHECK(ppgad_run({"preprocess", "--manifest", s / "missing.txt", "--out", s / "x.win"}).code ==
        cli::kIngestion);
  CHECK(ppgad_run({"preprocess", "--manifest", s / "c/manifest.txt", "--overlap-s", "8", "--out",
                   s / "y.win"})
            .code == cli::kConfig);
  CHECK_FALSE(fs::exists(s / "y.win"));
  CHECK(ppgad_run({"preprocess", "--manifest", s / "c/manifest.txt", "--band", "0.1:40", "--out",
                   s / "z.win"})
            .code == cli::kConfig);
  CHECK(ppgad_run({"preprocess", "--manifest", s / "c/manifest.txt"}).code == cli::kConfig);

  // A corrupt sample surfaces as an ingestion error naming the record.
  std::ofstream(s / "c/S01_Walking.txt", std::ios::app) << "nan\n";
  const auto corrupt =
      ppgad_run({"preprocess", "--manifest", s / "c/manifest.txt", "--out", s / "w.win"});
  CHECK(corrupt.code == cli::kIngestion);
  CHECK(corrupt.err.find("S01") != std::string::npos);
}

TEST_CASE("train, extract, fit and score round trip") {
  Scratch s("train");
  const auto manifest = tiny_cohort(s);
  REQUIRE(ppgad_run({"preprocess", "--manifest", manifest, "--target-len", "64", "--out",
                     s / "w.win"})
              .code == cli::kOk);

  const auto t = ppgad_run(with({"train", "--windows", s / "w.win", "--epochs", "3", "--out",
                                 s / "model"},
                                kTinyNet));
  REQUIRE(t.code == cli::kOk);
  CHECK(fs::exists(s / "model/checkpoint-r0.ckpt"));
  CHECK(line_count(slurp(s / "model/trace-r0.csv")) == 4);

  // Validation of training flags happens before anything is read or written.
  CHECK(ppgad_run(with({"train", "--windows", s / "w.win", "--lr", "-1", "--out", s / "bad"},
                       kTinyNet))
            .code == cli::kConfig);
  CHECK_FALSE(fs::exists(s / "bad"));
  CHECK(ppgad_run({"train", "--out", s / "bad"}).code == cli::kConfig);

  const auto archive = data::load_windows(s / "w.win");
  const auto e = ppgad_run({"extract", "--windows", s / "w.win", "--checkpoint",
                            s / "model/checkpoint-r0.ckpt", "--out", s / "f.csv"});
  REQUIRE(e.code == cli::kOk);
  const auto features = slurp(s / "f.csv");
  CHECK(line_count(features) == archive.windows.size() + 1);
  CHECK(features.substr(0, features.find('\n')) == "subject,activity,record,index,h0,h1");

  const auto f = ppgad_run({"fit", "--windows", s / "w.win", "--representation", "original",
                            "--detector", "pca", "--subject", "S01", "--out", s / "pca.json"});
  REQUIRE(f.code == cli::kOk);
  const auto sc = ppgad_run({"score", "--windows", s / "w.win", "--representation", "original",
                             "--model", s / "pca.json", "--out", s / "scores.csv"});
  REQUIRE(sc.code == cli::kOk);
  CHECK(line_count(slurp(s / "scores.csv")) == archive.windows.size() + 1);

  // Detector and representation must agree on the feature size.
  CHECK(ppgad_run({"score", "--windows", s / "w.win", "--checkpoint", s / "model/checkpoint-r0.ckpt",
                   "--model", s / "pca.json", "--out", s / "bad.csv"})
            .code == cli::kConfig);
  CHECK(ppgad_run({"fit", "--windows", s / "w.win", "--representation", "original", "--subject",
                   "nobody", "--out", s / "none.json"})
            .code == cli::kConfig);
  // A checkpoint for another window length is refused.
  REQUIRE(ppgad_run({"preprocess", "--manifest", manifest, "--target-len", "128", "--out",
                     s / "w128.win"})
              .code == cli::kOk);
  CHECK(ppgad_run({"extract", "--windows", s / "w128.win", "--checkpoint",
                   s / "model/checkpoint-r0.ckpt", "--out", s / "g.csv"})
            .code == cli::kConfig);
}

TEST_CASE("scenario: full grid, reports, reruns and errors") {
  Scratch s("scenario");
  const auto manifest = tiny_cohort(s);
  REQUIRE(ppgad_run({"preprocess", "--manifest", manifest, "--target-len", "64", "--out",
                     s / "w.win"})
              .code == cli::kOk);
  REQUIRE(ppgad_run(with({"train", "--windows", s / "w.win", "--epochs", "2", "--out", s / "m"},
                         kTinyNet))
              .code == cli::kOk);
  const std::string ckpt = s / "m/checkpoint-r0.ckpt";

  const auto missing = ppgad_run({"scenario", "--windows", s / "w.win", "--out", s / "nope"});
  CHECK(missing.code == cli::kConfig);
  CHECK_FALSE(fs::exists(s / "nope"));
  CHECK(ppgad_run({"scenario", "--windows", s / "w.win", "--folds", "1", "--representation",
                   "original", "--out", s / "nope"})
            .code == cli::kConfig);
  CHECK(ppgad_run({"scenario", "--windows", s / "w.win", "--task", "sleeping", "--representation",
                   "original", "--out", s / "nope"})
            .code == cli::kConfig);
  CHECK_FALSE(fs::exists(s / "nope"));

  const auto grid = ppgad_run({"scenario", "--windows", s / "w.win", "--checkpoint", ckpt, "--trees",
                               "20", "--out", s / "grid"});
  REQUIRE(grid.code == cli::kOk);
  const json doc = json::parse(slurp(s / "grid/report.json"));
  CHECK(doc["format"] == "ppgad-report");
  const auto& results = doc["results"];
  REQUIRE(results.size() == 24);
  std::set<std::string> combos;
  for (const auto& r : results) {
    const auto& c = r["config"];
    combos.insert(c["task"].get<std::string>() + c["mode"].get<std::string>() +
                  c["detector"].get<std::string>() + c["representation"].get<std::string>());
    double sum = 0.0;
    for (const auto& [unit, auc] : r["per_unit_auc"].items()) sum += auc.get<double>();
    CHECK(r["mean_auc"].get<double>() ==
          doctest::Approx(sum / static_cast<double>(r["per_unit_auc"].size())));
    CHECK(r["feature_dim"] == (c["representation"] == "learned" ? 2 : 64));
  }
  CHECK(combos.size() == 24);
  CHECK(line_count(slurp(s / "grid/report.txt")) == 24 + 3);

  const auto again = ppgad_run({"scenario", "--windows", s / "w.win", "--checkpoint", ckpt,
                                "--trees", "20", "--jobs", "2", "--out", s / "again"});
  REQUIRE(again.code == cli::kOk);
  CHECK(slurp(s / "grid/report.json") == slurp(s / "again/report.json"));
  CHECK(slurp(s / "grid/report.txt") == slurp(s / "again/report.txt"));

  // Two subjects cannot support the biometric generalized protocol.
  Scratch two("scenario-two");
  const auto m2 = tiny_cohort(two, 2);
  const auto r2 = ppgad_run({"scenario", "--manifest", m2, "--target-len", "64", "--task",
                             "biometric", "--mode", "generalized", "--representation", "original",
                             "--out", two / "r"});
  CHECK(r2.code == cli::kComputation);
}

TEST_CASE("scenario trains encoders inside the protocol") {
  Scratch s("scenario-train");
  const auto manifest = tiny_cohort(s);
  const auto r = ppgad_run(with({"scenario", "--manifest", manifest, "--train-encoder", "--epochs",
                                 "1", "--pretext-stride", "4", "--task", "movement", "--mode",
                                 "generalized", "--detector", "mvn", "--representation", "learned",
                                 "--out", s / "r"},
                                kTinyNet));
  REQUIRE(r.code == cli::kOk);
  const json doc = json::parse(slurp(s / "r/report.json"));
  REQUIRE(doc["results"].size() == 1);
  CHECK(doc["results"][0]["per_unit_auc"].size() == 3);
  CHECK(doc["run"]["learned"]["pretext_activities"] == json::array({"Sitting"}));
}

TEST_CASE("sweep: entries, baseline, duplicate warning, bad lists") {
  Scratch s("sweep");
  const auto manifest = tiny_cohort(s);
  REQUIRE(ppgad_run({"preprocess", "--manifest", manifest, "--target-len", "64", "--out",
                     s / "w.win"})
              .code == cli::kOk);
  const auto base = with({"sweep", "--windows", s / "w.win", "--epochs", "1", "--pretext-stride", "4",
                          "--mode", "personalized", "--folds", "2"},
                         kTinyNet);

  const auto r = ppgad_run(with(base, {"--dims", "2,8,2", "--out", s / "r"}));
  REQUIRE(r.code == cli::kOk);
  CHECK(r.err.find("duplicate dimension 2 ignored") != std::string::npos);
  const json doc = json::parse(slurp(s / "r/sweep.json"));
  REQUIRE(doc["dims"].size() == 2);
  CHECK(doc["dims"][0]["dim"] == 2);
  CHECK(doc["dims"][0]["feature_dim"] == 2);
  CHECK(doc["dims"][1]["dim"] == 8);
  CHECK(doc["baseline"]["feature_dim"] == 64);
  CHECK(line_count(slurp(s / "r/sweep.csv")) == 3);

  CHECK(ppgad_run(with(base, {"--dims", "", "--out", s / "e"})).code == cli::kConfig);
  CHECK(ppgad_run(with(base, {"--dims", "0,2", "--out", s / "e"})).code == cli::kConfig);
  CHECK(ppgad_run(with(base, {"--dims", "2,x", "--out", s / "e"})).code == cli::kConfig);
  CHECK_FALSE(fs::exists(s / "e"));
}

}  // TEST_SUITE
