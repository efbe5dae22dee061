#include <CLI11.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "kgqp/amplitude.hpp"
#include "kgqp/characteristics.hpp"
#include "kgqp/io.hpp"
#include "kgqp/kernels.hpp"
#include "kgqp/newton.hpp"
#include "kgqp/nondegen.hpp"
#include "kgqp/parallel.hpp"
#include "kgqp/sweep.hpp"

namespace fs = std::filesystem;
using namespace kgqp;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kAssert = 1, kExhausted = 2, kBadInput = 3 };

// Assertion failure inside a command: outputs are still written.
struct AssertionFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct Exhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

// ISO-8601 UTC; SOURCE_DATE_EPOCH pins it for reproducible files.
std::string timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* e = std::getenv("SOURCE_DATE_EPOCH")) t = static_cast<std::time_t>(std::strtoll(e, nullptr, 10));
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

class Run {
 public:
  Run(std::string command, std::string out_dir, std::vector<std::string> argv)
      : command_(std::move(command)), out_(std::move(out_dir)), argv_(std::move(argv)),
        t0_(std::chrono::steady_clock::now()) {}

  std::string input(const std::string& path) {
    std::string text = read_text_file(path);
    inputs_.push_back({{"path", path}, {"sha256", sha256_hex(text)}});
    return text;
  }
  void output(const std::string& name, const std::string& text) {
    const std::string path = (fs::path(out_) / name).string();
    write_text_file(path, text);
    outputs_.push_back({{"path", path}, {"sha256", sha256_hex(text)}});
  }
  void config(Json c) { config_ = std::move(c); }
  const std::string& dir() const { return out_; }

  void finish(int code) {
    Json m;
    m["command"] = command_;
    m["argv"] = argv_;
    m["config"] = config_;
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    m["versions"] = {{"kgqp", kVersion},
                     {"compiler", __VERSION__},
                     {"isa", kernels::isa_name(kernels::active_isa())},
                     {"jobs", jobs()}};
    m["exit_code"] = code;
    m["created"] = timestamp();
    m["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    write_text_file((fs::path(out_) / "manifest.json").string(), m.dump(2) + "\n");
  }

 private:
  std::string command_, out_;
  std::vector<std::string> argv_;
  std::chrono::steady_clock::time_point t0_;
  Json config_ = Json::object(), inputs_ = Json::array(), outputs_ = Json::array();
};

FrequencyBasis load_basis(Run& run, const std::string& path, bool require_verified) {
  FrequencyBasis fb = basis_from_json(parse_json_text(run.input(path), path));
  if (require_verified && !fb.verified())
    throw InputError(path + ": basis lacks passing verification flags (run `kgqp verify --in-place`)");
  return fb;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// ---- commands ----------------------------------------------------------------

int cmd_select(Run& run, const SelectOptions& opt, const std::string& name) {
  run.config({{"d", opt.d}, {"b", opt.b}, {"p", opt.p}, {"bound", opt.bound}, {"seed", opt.seed}});
  FrequencyBasis fb;
  try {
    fb = select_basis(opt);
  } catch (const ExhaustionError& e) {
    throw Exhausted(e.what());
  }
  fb.created = timestamp();
  run.output(name, dump(to_json(fb)));
  std::cout << "selected modes";
  for (auto& m : fb.modes) std::cout << " " << Json(m).dump();
  std::cout << ", s =";
  for (auto s : fb.radicands) std::cout << " " << s;
  std::cout << "\n";
  return kOk;
}

int cmd_verify(Run& run, const std::string& path, std::uint64_t cap, bool in_place) {
  FrequencyBasis fb = load_basis(run, path, false);
  run.config({{"basis", path}, {"cap", cap}});
  Json rep;
  rep["basis"] = path;
  CheckResult r2 = check_condition_ii(fb), r1, r3;
  rep["condition_ii"] = {{"status", to_string(r2.status)}, {"witness", r2.witness}};
  fb.cond_ii = to_string(r2.status);
  if (r2.ok()) {
    r1 = check_condition_i(fb);
    fb.cond_i = to_string(r1.status);
    rep["condition_i"] = {{"status", to_string(r1.status)}, {"witness", r1.witness}};
  }
  if (r2.ok() && r1.ok()) {
    r3 = check_condition_iii(fb, cap);
    fb.cond_iii = to_string(r3.status);
    rep["condition_iii"] = {{"status", to_string(r3.status)},
                            {"witness", r3.witness},
                            {"nodes", r3.nodes},
                            {"shortcut_hits", r3.shortcut_hits}};
  }
  rep["verified"] = fb.verified();
  run.output("verify.json", dump(rep));
  run.output("basis.verified.json", dump(to_json(fb)));
  if (in_place && fb.verified()) write_text_file(path, dump(to_json(fb)));
  if (!r2.ok()) throw AssertionFailure("condition (ii) " + std::string(to_string(r2.status)) + ": " + r2.witness);
  if (!r1.ok()) throw AssertionFailure("condition (i) " + std::string(to_string(r1.status)) + ": " + r1.witness);
  if (r3.status == CheckStatus::cap) throw Exhausted("condition (iii) hit the search cap");
  if (!r3.ok()) throw AssertionFailure("condition (iii) failed: " + r3.witness);
  std::cout << "basis verified: conditions (i), (ii), (iii) pass\n";
  return kOk;
}

int cmd_characteristics(Run& run, const std::string& path, long N, const std::string& mode, long theta) {
  FrequencyBasis fb = load_basis(run, path, true);
  run.config({{"basis", path}, {"N", N}, {"theta_mode", mode}, {"theta", theta}});
  const Dims dims{fb.b, fb.d};
  Json rep;
  std::string csv = csv_row({"cluster", "theta", "size", "exceptional_S", "positive", "members"});
  auto emit = [&](const std::vector<Cluster>& cl, const QuadField& th, Json& list) {
    for (std::size_t i = 0; i < cl.size(); ++i) {
      const Cluster& c = cl[i];
      bool positive = true;
      std::string members;
      for (auto& x : c.members) {
        for (int k = 0; k < dims.total(); ++k) positive = positive && x.c[k] >= 0;
        if (!members.empty()) members += ";";
        members += Json(x.n(dims)).dump() + Json(x.j(dims)).dump();
      }
      csv += csv_row({std::to_string(i), th.to_string(), std::to_string(c.members.size()),
                      c.is_exceptional_S ? "1" : "0", positive ? "1" : "0", members});
      list.push_back(to_json(c, dims));
    }
  };
  bool ok = true;
  if (mode == "all") {
    ClusterBoundReport r = verify_cluster_bounds(fb, N);
    rep = to_json(r, dims);
    ok = r.ok();
    std::vector<Point> pts = enumerate_characteristics(fb, QuadField(0), N);
    Json list = Json::array();
    emit(cluster_decomposition(pts, adjacency_set(fb), &fb, QuadField(0)), QuadField(0), list);
    rep["clusters_theta0"] = list;
  } else {
    const QuadField th = mode == "zero" ? QuadField(0) : QuadField(theta);
    std::vector<Point> pts = enumerate_characteristics(fb, th, N);
    auto cl = cluster_decomposition(pts, adjacency_set(fb), &fb, th);
    Json list = Json::array();
    emit(cl, th, list);
    std::size_t mx = 0;
    for (auto& c : cl) mx = std::max(mx, c.members.size());
    const std::size_t bound = th.is_zero() ? std::max<std::size_t>(2 * fb.d, 2 * fb.b) : 4 * fb.b;
    ok = mx <= bound;
    rep = {{"N", N}, {"theta", th.to_string()}, {"points", pts.size()}, {"max_size", mx}, {"bound", bound},
           {"clusters", list}, {"ok", ok}};
  }
  run.output("characteristics.json", dump(rep));
  run.output("clusters.csv", csv);
  if (!ok) throw AssertionFailure("cluster bound violated");
  std::cout << "cluster bounds hold\n";
  return kOk;
}

int cmd_sweep(Run& run, const std::string& path, std::vector<long> Ns, double delta, double eps,
              const std::string& eta_mode, double sigma, double step, int verify) {
  FrequencyBasis fb = load_basis(run, path, true);
  run.config({{"basis", path}, {"N", Ns}, {"delta", delta}, {"epsilon", eps}, {"eta_mode", eta_mode},
              {"sigma", sigma}, {"step", step}, {"verify", verify}});
  Nonlinearity nl;
  nl.p = fb.p;
  std::vector<double> a(fb.b, delta * (1 - 1e-9));
  CosineSeries u = initial_series(fb, a);
  std::vector<double> omega = q_solve(u, a, fb, nl);
  ThetaGrid grid;
  grid.step = step;
  Json reps = Json::array();
  std::string csv = csv_row({"N", "eta", "grid_points", "bad_points", "fraction", "interval_measure", "intervals"});
  for (long N : Ns) {
    const double eta = eta_mode == "exp" ? eta_exp_scale(N, sigma) : eta_delta_power(delta, fb.p, eps);
    SweepReport r = theta_bad_sweep(u, omega, N, grid, eta, nl, verify);
    reps.push_back(to_json(r));
    csv += csv_row({std::to_string(N), fmt_double(eta), std::to_string(r.grid_points), std::to_string(r.bad_points),
                    fmt_double(r.fraction), fmt_double(r.interval_measure), std::to_string(r.intervals.size())});
    std::cout << "N=" << N << " bad fraction " << r.fraction << "\n";
    if (r.verify_mismatch) throw AssertionFailure("direct check disagrees with the interval classification");
  }
  run.output("sweep.json", dump(reps));
  run.output("sweep.csv", csv);
  return kOk;
}

int cmd_solve(Run& run, const std::string& path) {
  const std::string text = run.input(path);
  RunConfig cfg = run_config_from_text(text, fs::path(path).parent_path().string());
  if (!cfg.basis_ref.empty()) run.input(cfg.basis_ref);
  if (!cfg.basis.verified()) throw InputError(path + ": basis lacks passing verification flags");
  Json snap;
  snap["basis"] = to_json(cfg.basis);
  snap["nl"] = to_json(cfg.nl);
  snap["params"] = to_json(cfg.params);
  run.config(snap);
  NewtonResult res = run_newton(cfg.params, cfg.basis, cfg.nl);
  std::string jsonl;
  for (auto& t : res.trace) jsonl += to_json(t).dump() + "\n";
  run.output("trace.jsonl", jsonl);
  run.output("trace.csv", trace_csv(res.trace));
  Json sol;
  sol["status"] = res.status;
  sol["floor"] = res.floor;
  sol["a"] = res.a_used;
  if (res.status != "excision_budget") {
    sol["omega"] = std::vector<double>(res.state.omega.begin(), res.state.omega.end());
    sol["r"] = res.state.r;
    sol["u"] = to_json(res.state.u);
    sol["pde_check"] = to_json(pde_check(res.state, cfg.basis, cfg.nl));
  }
  run.output("solution.json", dump(sol));
  for (auto& t : res.trace)
    std::cout << "r=" << t.r << " N=" << t.N << " |F|=" << t.residual << (t.accepted ? "" : " (rejected)") << "\n";
  std::cout << "status " << res.status << "\n";
  if (res.status == "excision_budget") throw Exhausted("excision budget exhausted");
  return kOk;
}

int cmd_report(Run& run, const std::string& path) {
  const std::string text = run.input(path);
  std::vector<TraceRecord> trace;
  std::istringstream in(text);
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      trace.push_back(trace_record_from_json(parse_json_text(line, path)));
    } catch (const InputError& e) {
      throw InputError(e.what(), no);
    }
  }
  if (trace.empty()) throw InputError(path + ": empty trace");
  run.config({{"trace", path}});
  std::string csv = csv_row({"r", "N", "residual", "ratio", "du_l2", "accepted", "wall_seconds"});
  std::printf("%3s %6s %12s %10s %12s %s\n", "r", "N", "|F|", "ratio", "|du|", "accepted");
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& t = trace[i];
    const double ratio = i ? t.residual / trace[i - 1].residual : NAN;
    std::printf("%3d %6ld %12.4e %10.3e %12.4e %s\n", t.r, t.N, t.residual, ratio, t.du_l2, t.accepted ? "yes" : "no");
    csv += csv_row({std::to_string(t.r), std::to_string(t.N), fmt_double(t.residual), i ? fmt_double(ratio) : "",
                    fmt_double(t.du_l2), t.accepted ? "1" : "0", fmt_double(t.wall_seconds)});
  }
  run.output("report.csv", csv);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasi-periodic solutions of nonlinear Klein-Gordon equations: lattice Newton solver"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  unsigned n_jobs = 0;
  std::string out_dir;
  app.add_option("--jobs", n_jobs, "worker threads (0: all logical cores)");
  app.add_option("--out", out_dir, "output directory (default: $KGQP_OUT_DIR or ./kgqp-out)");

  SelectOptions sel;
  std::string sel_name = "basis.json";
  auto* s_select = app.add_subcommand("select", "pick a non-degenerate frequency basis");
  s_select->add_option("--d", sel.d)->check(CLI::Range(1, 3));
  s_select->add_option("--b", sel.b)->check(CLI::Range(1, 6));
  s_select->add_option("--p", sel.p);
  s_select->add_option("--bound", sel.bound)->required();
  s_select->add_option("--seed", sel.seed);
  s_select->add_option("--cap", sel.cap);
  s_select->add_option("--name", sel_name, "output file name");

  std::string basis_path;
  std::uint64_t cap = 1000000;
  bool in_place = false;
  auto* s_verify = app.add_subcommand("verify", "check conditions (i)-(iii) exactly");
  s_verify->add_option("basis", basis_path)->required();
  s_verify->add_option("--cap", cap);
  s_verify->add_flag("--in-place", in_place, "store the verification flags in the basis file");

  long N = 20, theta = 0;
  std::string theta_mode = "zero";
  auto* s_char = app.add_subcommand("characteristics", "enumerate characteristics and clusters");
  s_char->add_option("basis", basis_path)->required();
  s_char->add_option("--N", N)->check(CLI::Range(1L, 2000L));
  s_char->add_option("--theta-mode", theta_mode)->check(CLI::IsMember({"zero", "all", "value"}));
  s_char->add_option("--theta", theta, "integer Theta for --theta-mode value");

  std::vector<long> Ns{6, 8, 10};
  double delta = 1e-2, eps = 0.25, sigma = 0.8, step = 5e-7;
  std::string eta_mode = "delta";
  int verify_samples = 0;
  auto* s_sweep = app.add_subcommand("sweep-theta", "measure the bad set of the shift parameter");
  s_sweep->add_option("basis", basis_path)->required();
  s_sweep->add_option("--N", Ns)->delimiter(',');
  s_sweep->add_option("--delta", delta);
  s_sweep->add_option("--epsilon", eps);
  s_sweep->add_option("--eta-mode", eta_mode)->check(CLI::IsMember({"delta", "exp"}));
  s_sweep->add_option("--sigma", sigma);
  s_sweep->add_option("--step", step);
  s_sweep->add_option("--verify", verify_samples, "direct checks at random grid points");

  std::string config_path;
  auto* s_solve = app.add_subcommand("solve", "run the Newton iteration from a config file");
  s_solve->add_option("config", config_path)->required();

  std::string trace_path;
  auto* s_report = app.add_subcommand("report", "summarize a trace");
  s_report->add_option("trace", trace_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kBadInput;
  }

  if (out_dir.empty()) {
    const char* env = std::getenv("KGQP_OUT_DIR");
    out_dir = env && *env ? env : "kgqp-out";
  }
  set_jobs(n_jobs);
  CLI::App* sub = app.get_subcommands().front();
  Run run(sub->get_name(), out_dir, std::vector<std::string>(argv, argv + argc));
  int code = kOk;
  try {
    if (sub == s_select) code = cmd_select(run, sel, sel_name);
    else if (sub == s_verify) code = cmd_verify(run, basis_path, cap, in_place);
    else if (sub == s_char) code = cmd_characteristics(run, basis_path, N, theta_mode, theta);
    else if (sub == s_sweep) code = cmd_sweep(run, basis_path, Ns, delta, eps, eta_mode, sigma, step, verify_samples);
    else if (sub == s_solve) code = cmd_solve(run, config_path);
    else if (sub == s_report) code = cmd_report(run, trace_path);
  } catch (const AssertionFailure& e) {
    std::cerr << "assertion failure: " << e.what() << "\n";
    code = kAssert;
  } catch (const Exhausted& e) {
    std::cerr << "exhausted: " << e.what() << "\n";
    code = kExhausted;
  } catch (const InputError& e) {
    std::cerr << "bad input: " << e.what() << "\n";
    code = kBadInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "bad input: " << e.what() << "\n";
    code = kBadInput;
  } catch (const std::bad_alloc&) {
    std::cerr << "out of memory\n";
    code = kExhausted;
  }
  try {
    run.finish(code);
  } catch (const std::exception& e) {
    std::cerr << "cannot write manifest: " << e.what() << "\n";
    if (code == kOk) code = kExhausted;
  }
  return code;
}
