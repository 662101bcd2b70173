#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cfpn/cli.hpp"
#include "cfpn/epoch_file.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "cfpn");
  std::ostringstream out, err;
  const int code = cfpn::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "cfpn_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(cli({}).code == cfpn::cli::usage);
  CHECK(cli({"frobnicate"}).code == cfpn::cli::usage);
  const auto r = cli({"synth", "--n", "3"});
  CHECK(r.code == cfpn::cli::usage);
  CHECK(r.err.find("--out") != std::string::npos);
  CHECK(cli({"synth", "--out", "x", "--bogus", "1"}).code == cfpn::cli::usage);
  CHECK(cli({"--help"}).code == cfpn::cli::ok);
}

TEST_CASE("synth writes epochs and a manifest") {
  const auto dir = fresh_dir("synth");
  const auto r = cli({"synth", "--out", dir.string(), "--n", "4", "--ch", "3", "--t", "32", "--seed", "7"});
  REQUIRE(r.code == cfpn::cli::ok);
  CHECK(cfpn::read_manifest(dir / "manifest.txt").size() == 8);
  CHECK(cfpn::load_dataset(dir / "manifest.txt").size() == 8);
}

TEST_CASE("filter leaves its input untouched") {
  const auto dir = fresh_dir("filter");
  REQUIRE(cli({"synth", "--out", (dir / "raw").string(), "--n", "2", "--ch", "2", "--t", "64"}).code == 0);
  const auto before = cfpn::read_file(dir / "raw" / "epoch_00000.eeg");
  const auto r = cli({"filter", "--data", (dir / "raw" / "manifest.txt").string(), "--out", (dir / "f").string()});
  REQUIRE(r.code == cfpn::cli::ok);
  CHECK(cfpn::read_file(dir / "raw" / "epoch_00000.eeg") == before);
  CHECK(cfpn::read_file(dir / "f" / "epoch_00000.eeg") != before);
  CHECK(cli({"filter", "--data", (dir / "raw" / "manifest.txt").string(), "--out", (dir / "g").string(),
             "--order", "3"})
            .code == cfpn::cli::usage);
}

TEST_CASE("train, eval, cost and export") {
  const auto dir = fresh_dir("train");
  REQUIRE(cli({"synth", "--out", (dir / "data").string(), "--n", "10", "--ch", "4", "--t", "32", "--seed", "2"}).code == 0);
  std::ofstream(dir / "cfg.txt") << "e1 = 16\ne2 = 8\nz = 4\nbranches = 2\nhidden = 6\nmax_epochs = 2\n";
  const auto manifest = (dir / "data" / "manifest.txt").string();

  for (const char* run : {"run1", "run2"})
    REQUIRE(cli({"train", "--data", manifest, "--config", (dir / "cfg.txt").string(), "--out", (dir / run).string(),
                 "--quiet"})
                .code == cfpn::cli::ok);
  for (const char* f : {"config.txt", "history.csv", "best.cfpn", "cost.txt"}) CHECK(fs::exists(dir / "run1" / f));
  CHECK(cfpn::read_file(dir / "run1" / "best.cfpn") == cfpn::read_file(dir / "run2" / "best.cfpn"));
  CHECK(cfpn::read_file(dir / "run1" / "history.csv") == cfpn::read_file(dir / "run2" / "history.csv"));
  CHECK(lines(cfpn::read_file(dir / "run1" / "history.csv")).size() == 3);

  const auto ckpt = (dir / "run1" / "best.cfpn").string();
  const auto ev = cli({"eval", "--ckpt", ckpt, "--data", manifest, "--per-subject"});
  REQUIRE(ev.code == cfpn::cli::ok);
  const auto rows = lines(ev.out);
  REQUIRE(rows.size() >= 2);
  CHECK(rows.front() == "subject_id,accuracy,precision,recall,f1");
  for (const auto& row : rows) CHECK(std::count(row.begin(), row.end(), ',') == 4);
  CHECK(rows.back().rfind("all,", 0) == 0);

  const auto cost = cli({"cost", "--ckpt", ckpt});
  CHECK(cost.code == cfpn::cli::ok);
  CHECK(cost.out.find("flops_per_inference: ") != std::string::npos);

  const auto ex = cli({"export-embeddings", "--ckpt", ckpt, "--data", manifest, "--stage", "latent"});
  CHECK(ex.code == cfpn::cli::ok);
  CHECK(lines(ex.out).size() == 21);
  CHECK(cli({"export-embeddings", "--ckpt", ckpt, "--data", manifest, "--stage", "middle"}).code ==
        cfpn::cli::usage);

  std::ofstream(dir / "bad.txt") << "learning_rate = fast\n";
  const auto bad = cli({"train", "--data", manifest, "--config", (dir / "bad.txt").string(), "--out",
                        (dir / "run3").string()});
  CHECK(bad.code == cfpn::cli::usage);
  CHECK(bad.err.find("line 1") != std::string::npos);
}

TEST_CASE("data errors exit 2") {
  const auto dir = fresh_dir("bad");
  std::ofstream(dir / "junk.cfpn") << "XXXXjunk";
  std::ofstream(dir / "m.txt") << "nothing.eeg\n";
  CHECK(cli({"eval", "--ckpt", (dir / "junk.cfpn").string(), "--data", (dir / "m.txt").string()}).code ==
        cfpn::cli::data);
  CHECK(cli({"train", "--data", (dir / "m.txt").string(), "--out", (dir / "r").string()}).code == cfpn::cli::data);
}

TEST_CASE("gradcheck exit status follows the tolerance") {
  const auto r = cli({"gradcheck", "--toy"});
  CHECK(r.code == cfpn::cli::ok);
  CHECK(r.out.find("max_relative_error") != std::string::npos);
  CHECK(cli({"gradcheck", "--toy", "--tolerance", "1e-30"}).code == cfpn::cli::numeric);
  CHECK(cli({"gradcheck"}).code == cfpn::cli::usage);
}

TEST_CASE("cost from defaults") {
  const auto r = cli({"cost", "--reps", "3"});
  CHECK(r.code == cfpn::cli::ok);
  CHECK(r.out.find("trainable_params: 568763") != std::string::npos);
  CHECK(cli({"cost", "--reps", "2"}).code == cfpn::cli::usage);
}
