#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "kgqp/io.hpp"
#include "oracles.hpp"

using namespace kgqp;

TEST_CASE("basis round trip") {
  auto fb = FrequencyBasis::from_modes(1, 2, {{1}, {3}, {4}});
  fb.cond_i = fb.cond_ii = fb.cond_iii = "pass";
  fb.created = "2024-01-01T00:00:00Z";
  Json j = to_json(fb);
  CHECK(j["radicands"] == Json::array({2, 10, 17}));
  auto back = basis_from_json(j);
  CHECK(back.modes == fb.modes);
  CHECK(back.omega0 == fb.omega0);
  CHECK(back.verified());
  CHECK(back.created == fb.created);

  j["radicands"] = Json::array({2, 5, 17});
  CHECK_THROWS_AS(basis_from_json(j), InputError);
  CHECK_THROWS_AS(basis_from_json(Json::parse(R"({"modes": [[1]]})")), InputError);
}

TEST_CASE("series round trip is exact") {
  std::mt19937_64 rng(41);
  for (Dims dims : {Dims{1, 1}, Dims{2, 1}, Dims{1, 2}}) {
    CosineSeries u = oracle::random_series(dims, 4, 10, rng);
    CHECK(series_from_json(Json::parse(to_json(u).dump())) == u);
    CosineSeriesL ul = u.cast<long double>();
    ul.set(ul.terms()[0].first, 1.0L / 3.0L);
    CHECK(series_l_from_json(Json::parse(to_json(ul).dump())) == ul);
  }
}

TEST_CASE("nonlinearity parsing") {
  Dims dims{3, 1};
  auto nl = nonlinearity_from_json(Json::parse(R"({"p": 2, "higher": [{"m": 4, "alpha": 0.01}]})"), dims);
  REQUIRE(nl.higher.size() == 1);
  CHECK(nl.higher[0].first == 4);
  CHECK(nl.higher[0].second.at(Point::make({0, 0, 0}, {0}, dims)) == 0.01);
  auto back = nonlinearity_from_json(Json::parse(to_json(nl).dump()), dims);
  CHECK(back.higher[0].second == nl.higher[0].second);
  CHECK_THROWS_AS(nonlinearity_from_json(Json::parse(R"({"higher": [{"m": 3, "alpha": 1}]})"), dims), InputError);
}

TEST_CASE("config parsing reports the offending line") {
  const std::string good = R"({
  "basis": {"d": 1, "p": 2, "modes": [[1], [3], [4]]},
  "delta": 0.01,
  "params": {"r_max": 2, "M": 2}
})";
  auto cfg = run_config_from_text(good);
  CHECK(cfg.params.r_max == 2);
  CHECK(cfg.params.delta == 0.01);
  CHECK(cfg.basis.b == 3);

  auto line_of = [](const std::string& text) {
    try {
      run_config_from_text(text);
    } catch (const InputError& e) {
      return e.line;
    }
    return -1;
  };
  CHECK(line_of("{\n  \"basis\": {\"d\": 1, \"modes\": [[1]]},\n  \"delta\": \"x\"\n}") == 3);
  CHECK(line_of("{\n  \"basis\": {\"d\": 1, \"modes\": [[1]]},\n  \"params\": {\n    \"r_max\": 1.5\n  }\n}") == 4);
  CHECK(line_of("{\n  \"basis\": {\"d\": 1, \"modes\": [[1]]},\n\n  \"bogus\": 1\n}") == 4);
  CHECK(line_of("{\n  \"basis\": {\"d\": 1, \"modes\": [[1]]},\n  \"delta\": 0.01,\n  oops\n}") == 4);
  CHECK(line_of("{\n  \"basis\": {\"d\": 1, \"modes\": [[1]]},\n  \"params\": {\"kappa\": 0.95}\n}") == 3);
  CHECK(line_of("{\"delta\": 0.01}") == 1);

  try {
    run_config_from_text("{\n\"basis\": {\"d\": 1, \"modes\": [[1]]},\n\"delta\": []\n}");
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).rfind("line 3: ", 0) == 0);
  }
}

TEST_CASE("basis by reference") {
  auto dir = std::filesystem::temp_directory_path() / "kgqp_io_test";
  std::filesystem::create_directories(dir);
  write_text_file((dir / "b.json").string(), to_json(FrequencyBasis::from_modes(1, 2, {{1}})).dump());
  auto cfg = run_config_from_text(R"({"basis_file": "b.json"})", dir.string());
  CHECK(cfg.basis.modes == std::vector<IVec>{{1}});
  CHECK(cfg.basis_ref == (dir / "b.json").string());
  CHECK_THROWS_AS(run_config_from_text(R"({"basis_file": "missing.json"})", dir.string()), InputError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("trace records and CSV") {
  TraceRecord r;
  r.r = 2;
  r.N = 24;
  r.residual = 2.95e-16;
  r.omega = {1.4142, 3.1623, 4.1231};
  r.excisions = {"attempt 1: gate, a jittered"};
  auto back = trace_record_from_json(Json::parse(to_json(r).dump()));
  CHECK(back.N == 24);
  CHECK(back.residual == r.residual);
  CHECK(back.omega == r.omega);
  CHECK(back.excisions == r.excisions);

  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_field("two\nlines") == "\"two\nlines\"");
  CHECK(csv_row({"a", "b,c"}) == "a,\"b,c\"\r\n");
  CHECK(std::stod(fmt_double(0.1)) == 0.1);
  CHECK(fmt_double(0.1) == "0.1");
  std::string csv = trace_csv({r, back});
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
