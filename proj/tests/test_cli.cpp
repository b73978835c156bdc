#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "temp_dir.hpp"
#include "vda/cli.hpp"
#include "vda/report.hpp"

using vda::run_command;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "vda");
  return run_command(args);
}

std::size_t line_count(const std::filesystem::path& p) {
  const std::string s = read_bytes(p);
  std::size_t c = 0;
  for (char ch : s) c += ch == '\n';
  return c;
}

}  // namespace

TEST_CASE("usage and exit codes") {
  TempDir dir;
  CHECK(run({"--help"}) == vda::kExitOk);
  CHECK(run({"sweep", "--help"}) == vda::kExitOk);
  CHECK(run({}) == vda::kExitUsage);
  CHECK(run({"frobnicate"}) == vda::kExitUsage);
  CHECK(run({"gen", "--no-such-flag"}) == vda::kExitUsage);
  CHECK(run({"gen", "--steps", "many"}) == vda::kExitUsage);

  const auto data = dir / "d.vdaf";
  CHECK(run({"gen", "--grid", "0", "4", "4", "--steps", "10", "-o", data.string()}) == vda::kExitConfig);
  CHECK_FALSE(std::filesystem::exists(data));

  write_bytes(dir / "bad.json", "{\"sigma0\": -1}");
  CHECK(run({"gen", "-c", (dir / "bad.json").string(), "-o", data.string()}) == vda::kExitConfig);
  write_bytes(dir / "bad.json", "{\"assimilation\": {\"sigma0\": -1}, \"synth\": {\"grid\": [4, 4, 2], \"steps\": 10}}");
  CHECK(run({"gen", "-c", (dir / "bad.json").string(), "-o", data.string()}) == vda::kExitConfig);
  write_bytes(dir / "bad.json", "not json");
  CHECK(run({"gen", "-c", (dir / "bad.json").string(), "-o", data.string()}) == vda::kExitConfig);
  CHECK_FALSE(std::filesystem::exists(data));

  CHECK(run({"basis", "--data", (dir / "missing.vdaf").string(), "-o", (dir / "b.vdab").string()}) == vda::kExitFormat);
  write_bytes(dir / "junk.vdaf", "JUNKJUNKJUNKJUNKJUNKJUNK");
  CHECK(run({"basis", "--data", (dir / "junk.vdaf").string(), "-o", (dir / "b.vdab").string()}) == vda::kExitFormat);
  CHECK_FALSE(std::filesystem::exists(dir / "b.vdab"));
}

TEST_CASE("end-to-end mono run") {
  TempDir dir;
  const std::string data = (dir / "d.vdaf").string();
  const std::string basis = (dir / "b.vdab").string();
  const std::string report = (dir / "r.csv").string();
  REQUIRE(run({"gen", "--grid", "16", "16", "8", "--steps", "200", "--seed", "3", "-o", data}) == vda::kExitOk);
  REQUIRE(run({"basis", "--data", data, "--tau", "8", "-o", basis}) == vda::kExitOk);
  REQUIRE(run({"assimilate", "--data", data, "--basis", basis, "--pipeline", "mono", "--obs-fraction", "0.25", "-o", report}) ==
          vda::kExitOk);
  CHECK(line_count(report) == 41);
  const auto rows = vda::import_report(report);
  REQUIRE(rows.size() == 40);
  for (const auto& r : rows) {
    CHECK(r.tau == 8);
    CHECK(r.M == 512);
    CHECK(r.da_mse < r.ref_mse);
  }

  SUBCASE("repeat runs are bit-identical") {
    const std::string again = (dir / "r2.csv").string();
    REQUIRE(run({"assimilate", "--data", data, "--basis", basis, "--pipeline", "mono", "--obs-fraction", "0.25", "-o", again}) ==
            vda::kExitOk);
    const auto a = vda::import_report(report);
    const auto b = vda::import_report(again);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].da_mse == b[i].da_mse);
      CHECK(a[i].iterations == b[i].iterations);
    }
  }
  SUBCASE("bi needs full observation") {
    CHECK(run({"assimilate", "--data", data, "--basis", basis, "--pipeline", "bi", "--obs-fraction", "0.5", "-o",
               (dir / "x.csv").string()}) != vda::kExitOk);
  }
  SUBCASE("linear-codec comparison") {
    const std::string cmp = (dir / "c.csv").string();
    REQUIRE(run({"compare", "--data", data, "--basis", basis, "--linear-codec", "--solver", "closed", "--max-steps", "5", "-o",
                 cmp}) == vda::kExitOk);
    const std::string text = read_bytes(cmp);
    CHECK(text.rfind(vda::kCompareHeader, 0) == 0);
    CHECK(line_count(cmp) == 6);
    // w_maxdiff is the sixth column. The synthetic background is
    // ill-conditioned (cond(I + A) around 1e9), so the two mathematically
    // equal solves agree to rounding amplified by that condition number.
    std::size_t pos = text.find('\n') + 1;
    while (pos < text.size()) {
      const std::size_t end = text.find('\n', pos);
      const auto cols = vda::split_csv_line(text.substr(pos, end - pos));
      REQUIRE(cols.size() == 12);
      CHECK(vda::parse_double(cols[5]) <= 1e-5);
      CHECK(std::abs(vda::parse_double(cols[4])) <= 1e-9);
      pos = end + 1;
    }
  }
  SUBCASE("sweep") {
    const std::string out = (dir / "s.csv").string();
    REQUIRE(run({"sweep", "--data", data, "--basis", basis, "--taus", "2", "8", "--obs-counts", "100", "2048", "--max-steps", "2",
                 "-o", out}) == vda::kExitOk);
    CHECK(line_count(out) == 1 + 4 * 3);
  }
}

TEST_CASE("train writes a codec and a loss log") {
  TempDir dir;
  const std::string data = (dir / "d.vdaf").string();
  REQUIRE(run({"gen", "--grid", "4", "4", "2", "--steps", "40", "-o", data}) == vda::kExitOk);
  const std::string codec = (dir / "c.vdac").string();
  const std::string log = (dir / "l.csv").string();
  REQUIRE(run({"train", "--data", data, "--latent", "3", "--epochs", "4", "-o", codec, "--log", log}) == vda::kExitOk);
  CHECK(std::filesystem::exists(codec));
  CHECK(line_count(log) == 5);
  CHECK(read_bytes(log).rfind("epoch,train_loss,held_loss\n", 0) == 0);
  const std::string basis = (dir / "b.vdab").string();
  REQUIRE(run({"basis", "--data", data, "-o", basis}) == vda::kExitOk);
  const std::string report = (dir / "r.csv").string();
  CHECK(run({"assimilate", "--data", data, "--basis", basis, "--codec", codec, "--pipeline", "bi", "-o", report}) == vda::kExitOk);
  CHECK(line_count(report) == 9);
}
