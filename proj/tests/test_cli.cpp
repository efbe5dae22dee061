#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "kgqp/io.hpp"

namespace fs = std::filesystem;
using kgqp::Json;

namespace {

struct Run {
  int code = -1;
  std::string output;
};

fs::path workdir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "kgqp_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Run kgqp_cli(const std::string& args) {
  const fs::path log = workdir() / "last.log";
  const std::string cmd = "cd '" + workdir().string() + "' && SOURCE_DATE_EPOCH=1700000000 '" KGQP_CLI_PATH "' " +
                          args + " > '" + log.string() + "' 2>&1";
  int st = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  r.output = kgqp::read_text_file(log.string());
  return r;
}

std::string slurp(const std::string& rel) { return kgqp::read_text_file((workdir() / rel).string()); }
Json load(const std::string& rel) { return Json::parse(slurp(rel)); }

void write(const std::string& rel, const std::string& text) { kgqp::write_text_file((workdir() / rel).string(), text); }

// required top-level keys of a shipped schema are present
void check_required(const std::string& schema, const Json& doc) {
  Json s = Json::parse(kgqp::read_text_file(std::string(KGQP_SCHEMA_DIR) + "/" + schema));
  for (auto& k : s.value("required", Json::array())) CHECK_MESSAGE(doc.contains(k.get<std::string>()), schema, " ", k);
}

}  // namespace

TEST_CASE("schemas ship with the tree") {
  for (auto name : {"basis", "series", "config", "trace_record", "solution", "manifest"}) {
    fs::path p = fs::path(KGQP_SCHEMA_DIR) / (std::string(name) + ".schema.json");
    REQUIRE(fs::exists(p));
    CHECK_NOTHROW(Json::parse(kgqp::read_text_file(p.string())));
  }
}

TEST_CASE("select") {
  Run r = kgqp_cli("--out sel select --d 1 --b 3 --p 2 --bound 10");
  REQUIRE(r.code == 0);
  Json b = load("sel/basis.json");
  CHECK(b["radicands"] == Json::array({2, 10, 17}));
  CHECK(b["conditions"]["iii"] == "pass");
  check_required("basis.schema.json", b);
  Json m = load("sel/manifest.json");
  check_required("manifest.schema.json", m);
  CHECK(m["outputs"].size() == 1);
  CHECK(m["created"] == "2023-11-14T22:13:20Z");

  const std::string first = slurp("sel/basis.json");
  REQUIRE(kgqp_cli("--out sel select --d 1 --b 3 --p 2 --bound 10").code == 0);
  CHECK(slurp("sel/basis.json") == first);

  CHECK(kgqp_cli("--out sel2 select --d 1 --b 2 --bound 1").code == 2);
  CHECK(kgqp_cli("--out sel2 select --d 1 --b 2").code == 3);
}

TEST_CASE("verify") {
  write("tampered.json", R"({"d": 1, "p": 2, "modes": [[1], [7]]})");
  Run r = kgqp_cli("--out ver verify tampered.json");
  CHECK(r.code == 1);
  CHECK(r.output.find("condition (ii)") != std::string::npos);
  CHECK(load("ver/verify.json").dump().find("fail") != std::string::npos);

  REQUIRE(kgqp_cli("--out pell select --d 1 --b 1 --bound 10 --name pell.json").code == 0);
  Run ok = kgqp_cli("--out ver verify pell/pell.json");
  CHECK(ok.code == 0);
  CHECK(kgqp_cli("--out ver verify missing.json").code == 3);
}

TEST_CASE("characteristics") {
  REQUIRE(kgqp_cli("--out pell select --d 1 --b 1 --bound 10 --name pell.json").code == 0);
  Run r = kgqp_cli("--out ch characteristics pell/pell.json --N 50");
  REQUIRE(r.code == 0);
  std::istringstream csv(slurp("ch/clusters.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line.rfind("cluster,theta,size,exceptional_S,positive,members", 0) == 0);
  int rows = 0, positive = 0;
  while (std::getline(csv, line)) {
    if (line.empty() || line == "\r") continue;
    ++rows;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string x;
    while (std::getline(ss, x, ',')) f.push_back(x);
    REQUIRE(f.size() >= 5);
    positive += f[4] == "1";
  }
  CHECK(rows == 11);
  CHECK(positive == 3);

  write("unverified.json", R"({"d": 1, "p": 2, "modes": [[1]]})");
  CHECK(kgqp_cli("--out ch2 characteristics unverified.json --N 10").code == 3);
}

TEST_CASE("solve and report") {
  REQUIRE(kgqp_cli("--out sel select --d 1 --b 3 --bound 10").code == 0);
  write("zero.json", "{\n  \"basis_file\": \"sel/basis.json\",\n  \"delta\": 0.01,\n  \"params\": {\"r_max\": 0}\n}\n");
  Run r = kgqp_cli("--out sol solve zero.json");
  REQUIRE(r.code == 0);
  std::istringstream trace(slurp("sol/trace.jsonl"));
  std::string line;
  int records = 0;
  while (std::getline(trace, line))
    if (!line.empty()) {
      ++records;
      check_required("trace_record.schema.json", Json::parse(line));
    }
  CHECK(records == 1);
  Json sol = load("sol/solution.json");
  check_required("solution.schema.json", sol);
  CHECK(sol["status"] == "r_max");
  Json m = load("sol/manifest.json");
  CHECK(m["outputs"].size() == 3);
  CHECK(m["inputs"].size() == 2);  // config and the referenced basis

  // identical inputs give identical results apart from timings
  const std::string first_solution = slurp("sol/solution.json");
  REQUIRE(kgqp_cli("--out sol solve zero.json").code == 0);
  CHECK(slurp("sol/solution.json") == first_solution);

  Run rep = kgqp_cli("--out rep report sol/trace.jsonl");
  CHECK(rep.code == 0);
  CHECK(fs::exists(workdir() / "rep/report.csv"));

  write("bad.json", "{\n  \"basis_file\": \"sel/basis.json\",\n  \"params\": {\n    \"r_max\": \"two\"\n  }\n}\n");
  Run bad = kgqp_cli("--out bad solve bad.json");
  CHECK(bad.code == 3);
  CHECK(bad.output.find("line 4") != std::string::npos);
}

TEST_CASE("output directory from the environment") {
  REQUIRE(kgqp_cli("--out pell select --d 1 --b 1 --bound 10 --name pell.json").code == 0);
  fs::remove_all(workdir() / "envout");
  std::string cmd = "cd '" + workdir().string() + "' && KGQP_OUT_DIR=envout '" KGQP_CLI_PATH
                    "' verify pell/pell.json > /dev/null 2>&1";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(workdir() / "envout/verify.json"));
}
