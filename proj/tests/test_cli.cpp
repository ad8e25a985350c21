#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "locrb/cli.hpp"
#include "locrb/errors.hpp"

using namespace locrb;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("locrb_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& s) const { return (path / s).string(); }
};

}  // namespace

TEST_CASE("parameter overrides") {
  const ParameterVector base{4.0, 4.0, 4.0};
  CHECK(parse_mu_spec("0=5,2=4.5", base) == ParameterVector{5.0, 4.0, 4.5});
  CHECK(parse_mu_spec("1=6", base) == ParameterVector{4.0, 6.0, 4.0});
  for (const char* bad : {"3=5", "x=1", "0=", "0:5", "-1=4", "0=abc"})
    CHECK_THROWS_AS(parse_mu_spec(bad, base), ParameterError);
}

TEST_CASE("offline, online and validate runs") {
  TempDir tmp("runs");
  const auto off = run({"offline", "--preset", "tiny-channels", "--seed", "3", "--out", tmp / "off"});
  REQUIRE(off.code == kExitOk);
  const auto manifest = nlohmann::json::parse(slurp(tmp / "off/manifest.json"));
  for (const auto& f : manifest.at("files")) CHECK(fs::exists(tmp.path / "off" / f.get<std::string>()));
  CHECK(manifest.at("command") == "offline");
  CHECK(manifest.at("seed") == 3);

  // Bit-reproducible payloads.
  REQUIRE(run({"offline", "--preset", "tiny-channels", "--seed", "3", "--out", tmp / "off2"}).code == kExitOk);
  for (const char* f : {"basis.lrb", "offline_basis_counts.csv", "range_finder_reports.json"})
    CHECK(slurp(tmp.path / "off" / f) == slurp(tmp.path / "off2" / f));
  const auto m2 = nlohmann::json::parse(slurp(tmp / "off2/manifest.json"));
  CHECK(m2.at("fingerprint") == manifest.at("fingerprint"));
  REQUIRE(run({"offline", "--preset", "tiny-channels", "--seed", "4", "--out", tmp / "off3"}).code == kExitOk);
  CHECK(slurp(tmp.path / "off" / "basis.lrb") != slurp(tmp.path / "off3" / "basis.lrb"));

  const std::vector<std::string> online{"online", "--preset", "tiny-channels", "--basis", tmp / "off/basis.lrb",
                                        "--mu", "1=5.5", "--stop", "true-error:1e-3"};
  auto a = online;
  a.insert(a.end(), {"--out", tmp / "on"});
  const auto on = run(a);
  CHECK(on.code == kExitOk);
  for (const char* f : {"enrichment_log.jsonl", "online_basis_counts.csv", "solution.csv", "basis.lrb", "manifest.json"})
    CHECK(fs::exists(tmp.path / "on" / f));
  const auto om = nlohmann::json::parse(slurp(tmp / "on/manifest.json"));
  CHECK(om.at("extra").at("converged") == true);
  CHECK(om.at("config").at("mu") == std::vector<double>{4.0, 5.5, 4.0});
  CHECK(om.at("extra").at("iteration_seconds").size() == om.at("extra").at("iterations").get<int>() + 1);

  auto b = online;
  b.insert(b.end(), {"--out", tmp / "on2"});
  REQUIRE(run(b).code == kExitOk);
  for (const char* f : {"enrichment_log.jsonl", "online_basis_counts.csv", "solution.csv", "basis.lrb"})
    CHECK(slurp(tmp.path / "on" / f) == slurp(tmp.path / "on2" / f));

  // The enriched container can seed another online run.
  const auto chained = run({"online", "--preset", "tiny-channels", "--basis", tmp / "on/basis.lrb", "--mu", "1=5.5",
                            "--stop", "true-error:1e-3", "--out", tmp / "on3"});
  CHECK(chained.code == kExitOk);

  const auto val = run({"validate", "--preset", "tiny-channels", "--basis", tmp / "off/basis.lrb", "--mu",
                        "0=5,1=5,2=5", "--mu", "0=6,1=4,2=5", "--out", tmp / "val"});
  REQUIRE(val.code == kExitOk);
  const auto report = nlohmann::json::parse(slurp(tmp / "val/validation_report.json"));
  CHECK(report.at("rows").size() == 2);
  CHECK(report.at("reliability") == "pass");
  CHECK(report.at("range_finder_svd").size() == 9);
  for (const auto& r : report.at("range_finder_svd")) CHECK(r.at("within_tol") == true);

  // Not converged within the iteration budget.
  const auto stuck = run({"online", "--preset", "tiny-channels", "--basis", tmp / "off/basis.lrb", "--max-iter", "0",
                          "--stop", "estimator:1e-12", "--out", tmp / "on4"});
  CHECK(stuck.code == kExitNotConverged);
  CHECK(fs::exists(tmp.path / "on4" / "manifest.json"));
}

TEST_CASE("errors and exit codes") {
  TempDir tmp("errors");
  const auto none = run({"offline", "--out", tmp / "none"});
  CHECK(none.code == kExitUsage);
  CHECK_FALSE(fs::exists(tmp.path / "none"));
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({"offline", "--preset", "tiny-channels"}).code == kExitUsage);
  CHECK(run({"offline", "--preset", "nope", "--out", tmp / "x"}).code == kExitConfig);
  CHECK(run({"offline", "--preset", "tiny-channels", "--tol", "-1", "--out", tmp / "x"}).code == kExitUsage);

  {
    std::ofstream(tmp / "bad.json") << "{\"preset\": \"tiny-channels\", \"colour\": 1}";
  }
  CHECK(run({"offline", "--config", tmp / "bad.json", "--out", tmp / "x"}).code == kExitConfig);
  {
    std::ofstream(tmp / "broken.json") << "{ not json";
  }
  CHECK(run({"offline", "--config", tmp / "broken.json", "--out", tmp / "x"}).code == kExitConfig);

  REQUIRE(run({"offline", "--preset", "tiny-channels", "--out", tmp / "off"}).code == kExitOk);
  {
    std::ofstream(tmp / "other.json") << "{\"preset\": \"tiny-channels\", \"penalty\": 20}";
  }
  const auto mismatch =
      run({"online", "--config", tmp / "other.json", "--basis", tmp / "off/basis.lrb", "--out", tmp / "on"});
  CHECK(mismatch.code == kExitConfig);
  CHECK(mismatch.err.find("fingerprint") != std::string::npos);

  const std::string basis = tmp / "off/basis.lrb";
  CHECK(run({"online", "--preset", "tiny-channels", "--basis", basis, "--stop", "sometimes:1", "--out", tmp / "on"})
            .code == kExitUsage);
  CHECK(run({"online", "--preset", "tiny-channels", "--basis", basis, "--theta", "0", "--out", tmp / "on"}).code ==
        kExitUsage);
  CHECK(run({"online", "--preset", "tiny-channels", "--basis", basis, "--mu", "0=9", "--out", tmp / "on"}).code ==
        kExitConfig);
  CHECK(run({"online", "--preset", "unit-poisson", "--basis", basis, "--out", tmp / "on"}).code == kExitConfig);
}
