#include "kgqp/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace kgqp {

InputError::InputError(const std::string& msg, int line_no)
    : std::runtime_error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + msg : msg), line(line_no) {}

namespace {

int line_at(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

// Line of the first occurrence of "key" as an object key; 0 when not found.
int line_of_key(const std::string& text, const std::string& key) {
  const std::string pat = "\"" + key + "\"";
  std::size_t pos = 0;
  while ((pos = text.find(pat, pos)) != std::string::npos) {
    std::size_t k = pos + pat.size();
    while (k < text.size() && std::isspace(static_cast<unsigned char>(text[k]))) ++k;
    if (k < text.size() && text[k] == ':') return line_at(text, pos);
    pos = k;
  }
  return 0;
}

std::string ld_to_string(long double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.21Lg", v);
  return buf;
}

long double ld_from_json(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    char* end = nullptr;
    long double v = std::strtold(s.c_str(), &end);
    if (end == s.c_str() || *end) throw InputError("bad numeric string '" + s + "'");
    return v;
  }
  throw InputError("coefficient must be a number or a numeric string");
}

template <class T>
Json series_json(const BasicCosineSeries<T>& u) {
  Json out;
  const Dims dims = u.dims();
  out["b"] = dims.b;
  out["d"] = dims.d;
  Json terms = Json::array();
  for (auto& [x, v] : u.terms()) {
    Json t;
    t["n"] = x.n(dims);
    t["j"] = x.j(dims);
    if constexpr (std::is_same_v<T, long double>) t["c"] = ld_to_string(v);
    else t["c"] = v;
    terms.push_back(std::move(t));
  }
  out["terms"] = std::move(terms);
  return out;
}

template <class T>
BasicCosineSeries<T> series_parse(const Json& j) {
  try {
    const Dims dims{j.at("b").get<int>(), j.at("d").get<int>()};
    if (dims.b < 1 || dims.d < 1 || dims.total() > kMaxDim) throw InputError("series: bad dimensions");
    std::vector<typename BasicCosineSeries<T>::Term> terms;
    for (auto& t : j.at("terms")) {
      IVec n = t.at("n").get<IVec>(), jj = t.at("j").get<IVec>();
      if (static_cast<int>(n.size()) != dims.b || static_cast<int>(jj.size()) != dims.d)
        throw InputError("series: term dimension mismatch");
      terms.emplace_back(Point::make(n, jj, dims), static_cast<T>(ld_from_json(t.at("c"))));
    }
    return BasicCosineSeries<T>::from_terms(dims, terms);
  } catch (const Json::exception& e) {
    throw InputError(std::string("series: ") + e.what());
  }
}

}  // namespace

Json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InputError(what + ": " + e.what(), line_at(text, e.byte ? e.byte - 1 : 0));
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Json read_json_file(const std::string& path) { return parse_json_text(read_text_file(path), path); }

void write_text_file(const std::string& path, const std::string& text) {
  auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

// ---- basis -------------------------------------------------------------------

Json to_json(const FrequencyBasis& basis) {
  Json j;
  j["d"] = basis.d;
  j["b"] = basis.b;
  j["p"] = basis.p;
  j["modes"] = basis.modes;
  j["radicands"] = basis.radicands;
  Json w = Json::array();
  for (auto& q : basis.omega0) w.push_back(q.to_string());
  j["omega0"] = w;
  j["conditions"] = {{"i", basis.cond_i}, {"ii", basis.cond_ii}, {"iii", basis.cond_iii}};
  j["created"] = basis.created;
  return j;
}

FrequencyBasis basis_from_json(const Json& j) {
  try {
    FrequencyBasis fb = FrequencyBasis::from_modes(j.at("d").get<int>(), j.value("p", 2),
                                                   j.at("modes").get<std::vector<IVec>>());
    if (j.contains("b") && j["b"].get<int>() != fb.b) throw InputError("basis: b disagrees with the modes");
    if (j.contains("radicands") && j["radicands"].get<std::vector<std::uint64_t>>() != fb.radicands)
      throw InputError("basis: stored radicands disagree with the modes");
    if (j.contains("conditions")) {
      auto& c = j["conditions"];
      fb.cond_i = c.value("i", "");
      fb.cond_ii = c.value("ii", "");
      fb.cond_iii = c.value("iii", "");
    }
    fb.created = j.value("created", "");
    return fb;
  } catch (const Json::exception& e) {
    throw InputError(std::string("basis: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
}

// ---- series ----------------------------------------------------------------

Json to_json(const CosineSeries& u) { return series_json(u); }
Json to_json(const CosineSeriesL& u) { return series_json(u); }
CosineSeries series_from_json(const Json& j) { return series_parse<double>(j); }
CosineSeriesL series_l_from_json(const Json& j) { return series_parse<long double>(j); }

Json to_json(const Nonlinearity& nl) {
  Json j;
  j["p"] = nl.p;
  Json h = Json::array();
  for (auto& [m, alpha] : nl.higher) h.push_back({{"m", m}, {"alpha", to_json(alpha)}});
  j["higher"] = h;
  return j;
}

Nonlinearity nonlinearity_from_json(const Json& j, Dims dims) {
  Nonlinearity nl;
  try {
    nl.p = j.value("p", 2);
    if (j.contains("higher"))
      for (auto& h : j["higher"]) {
        const int m = h.at("m").get<int>();
        const Json& a = h.at("alpha");
        CosineSeries alpha(dims);
        if (a.is_number()) {
          // constant coefficient
          std::vector<CosineSeries::Term> t{{Point::make(IVec(dims.b, 0), IVec(dims.d, 0), dims), a.get<double>()}};
          alpha = CosineSeries::from_terms(dims, t);
        } else {
          alpha = series_from_json(a);
        }
        nl.higher.emplace_back(m, std::move(alpha));
      }
    nl.validate(dims);
  } catch (const Json::exception& e) {
    throw InputError(std::string("nl: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  return nl;
}

// ---- config -----------------------------------------------------------------

Json to_json(const SolverParameters& p) {
  Json j;
  j["delta"] = p.delta;
  j["a"] = p.a;
  j["epsilon"] = p.epsilon;
  j["epsilon_prime"] = p.epsilon_prime;
  j["s"] = p.s;
  j["sigma"] = p.sigma;
  j["kappa"] = p.kappa;
  j["tau"] = p.tau;
  j["c"] = p.c;
  j["beta"] = p.beta;
  j["xi"] = p.xi;
  j["gamma"] = p.gamma;
  j["M"] = p.M;
  j["r_max"] = p.r_max;
  j["W"] = p.W;
  j["B"] = p.B;
  j["Cprime"] = p.Cprime;
  j["quadratic_samples"] = p.quadratic_samples;
  j["seed"] = p.seed;
  j["excision_budget"] = p.excision_budget;
  j["target"] = p.target;
  j["kernel_rel_tol"] = p.kernel_rel_tol;
  j["drop_rel"] = p.drop_rel;
  return j;
}

RunConfig run_config_from_text(const std::string& text, const std::string& base_dir) {
  const Json j = parse_json_text(text, "config");
  if (!j.is_object()) throw InputError("config: top level must be an object", 1);
  static const std::set<std::string> top{"basis", "basis_file", "delta", "a", "seed", "nl", "params"};
  for (auto& [k, v] : j.items())
    if (!top.count(k)) throw InputError("config: unknown key '" + k + "'", line_of_key(text, k));

  auto fail = [&](const std::string& key, const std::string& msg) -> InputError {
    return InputError("config: '" + key + "' " + msg, line_of_key(text, key));
  };
  auto number = [&](const Json& obj, const std::string& key, auto& dst) {
    if (!obj.contains(key)) return;
    if (!obj[key].is_number()) throw fail(key, "must be a number");
    dst = obj[key].get<std::remove_reference_t<decltype(dst)>>();
  };

  RunConfig cfg;
  if (j.contains("basis") == j.contains("basis_file"))
    throw InputError("config: exactly one of 'basis' and 'basis_file' is required", 1);
  try {
    if (j.contains("basis")) {
      cfg.basis = basis_from_json(j["basis"]);
    } else {
      if (!j["basis_file"].is_string()) throw fail("basis_file", "must be a string");
      std::filesystem::path p = j["basis_file"].get<std::string>();
      if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
      cfg.basis_ref = p.string();
      cfg.basis = basis_from_json(read_json_file(cfg.basis_ref));
    }
  } catch (const InputError& e) {
    if (e.line) throw;
    throw InputError(e.what(), line_of_key(text, j.contains("basis") ? "basis" : "basis_file"));
  }
  const Dims dims{cfg.basis.b, cfg.basis.d};
  if (j.contains("nl")) {
    if (!j["nl"].is_object()) throw fail("nl", "must be an object");
    try {
      cfg.nl = nonlinearity_from_json(j["nl"], dims);
    } catch (const InputError& e) {
      throw InputError(e.what(), line_of_key(text, "nl"));
    }
  } else {
    cfg.nl.p = cfg.basis.p;
  }
  if (cfg.nl.p != cfg.basis.p) throw fail("nl", "power p differs from the basis");

  SolverParameters& p = cfg.params;
  number(j, "delta", p.delta);
  if (j.contains("a")) {
    if (!j["a"].is_array()) throw fail("a", "must be an array of numbers");
    for (auto& v : j["a"]) {
      if (!v.is_number()) throw fail("a", "must be an array of numbers");
      p.a.push_back(v.get<double>());
    }
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw fail("seed", "must be a non-negative integer");
    p.seed = j["seed"].get<unsigned>();
  }
  if (j.contains("params")) {
    const Json& q = j["params"];
    if (!q.is_object()) throw fail("params", "must be an object");
    static const std::set<std::string> known{"epsilon", "epsilon_prime", "s", "sigma", "kappa", "tau", "c",
                                             "beta", "xi", "gamma", "M", "r_max", "W", "B", "Cprime",
                                             "quadratic_samples", "excision_budget", "target",
                                             "kernel_rel_tol", "drop_rel"};
    for (auto& [k, v] : q.items()) {
      if (!known.count(k)) throw fail(k, "is not a solver parameter");
      if (!v.is_number()) throw fail(k, "must be a number");
    }
    for (auto& [k, v] : q.items())
      if ((k == "M" || k == "r_max" || k == "B" || k == "quadratic_samples" || k == "excision_budget") &&
          !v.is_number_integer())
        throw fail(k, "must be an integer");
    number(q, "epsilon", p.epsilon);
    number(q, "epsilon_prime", p.epsilon_prime);
    number(q, "s", p.s);
    number(q, "sigma", p.sigma);
    number(q, "kappa", p.kappa);
    number(q, "tau", p.tau);
    number(q, "c", p.c);
    number(q, "beta", p.beta);
    number(q, "xi", p.xi);
    number(q, "gamma", p.gamma);
    number(q, "M", p.M);
    number(q, "r_max", p.r_max);
    number(q, "W", p.W);
    number(q, "B", p.B);
    number(q, "Cprime", p.Cprime);
    number(q, "quadratic_samples", p.quadratic_samples);
    number(q, "excision_budget", p.excision_budget);
    number(q, "target", p.target);
    number(q, "kernel_rel_tol", p.kernel_rel_tol);
    number(q, "drop_rel", p.drop_rel);
  }
  try {
    p.validate(cfg.basis.b);
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("config: ") + e.what(), line_of_key(text, "params"));
  }
  return cfg;
}

// ---- reports -------------------------------------------------------------------

Json to_json(const TraceRecord& r) {
  Json j;
  j["r"] = r.r;
  j["N"] = r.N;
  j["du_l2"] = r.du_l2;
  j["du_weighted"] = r.du_weighted;
  j["residual"] = r.residual;
  j["residual_weighted"] = r.residual_weighted;
  j["omega"] = r.omega;
  j["jacobian_det"] = r.jacobian_det;
  j["gate_diophantine"] = r.gate_diophantine;
  j["gate_quadratic"] = r.gate_quadratic;
  j["excisions"] = r.excisions;
  j["wall_seconds"] = r.wall_seconds;
  j["points"] = r.points;
  j["near"] = r.near;
  j["accepted"] = r.accepted;
  return j;
}

TraceRecord trace_record_from_json(const Json& j) {
  TraceRecord r;
  try {
    r.r = j.at("r").get<int>();
    r.N = j.at("N").get<long>();
    r.du_l2 = j.at("du_l2").get<double>();
    r.du_weighted = j.at("du_weighted").get<double>();
    r.residual = j.at("residual").get<double>();
    r.residual_weighted = j.at("residual_weighted").get<double>();
    r.omega = j.at("omega").get<std::vector<double>>();
    r.jacobian_det = j.at("jacobian_det").get<double>();
    r.gate_diophantine = j.at("gate_diophantine").get<bool>();
    r.gate_quadratic = j.at("gate_quadratic").get<bool>();
    r.excisions = j.at("excisions").get<std::vector<std::string>>();
    r.wall_seconds = j.at("wall_seconds").get<double>();
    r.points = j.at("points").get<std::size_t>();
    r.near = j.at("near").get<std::size_t>();
    r.accepted = j.at("accepted").get<bool>();
  } catch (const Json::exception& e) {
    throw InputError(std::string("trace record: ") + e.what());
  }
  return r;
}

Json to_json(const GateResult& g) {
  return {{"pass", g.pass}, {"worst_ratio", g.worst}, {"worst", g.worst_n}, {"detail", g.detail}};
}

namespace {

Json cluster_json(const Cluster& c, Dims dims) {
  Json m = Json::array();
  for (auto& x : c.members) m.push_back({{"n", x.n(dims)}, {"j", x.j(dims)}});
  return {{"theta", c.theta.to_string()}, {"size", c.members.size()}, {"members", m},
          {"exceptional_S", c.is_exceptional_S}};
}

Json histogram_json(const std::map<std::size_t, std::size_t>& h) {
  Json out = Json::object();
  for (auto& [k, v] : h) out[std::to_string(k)] = v;
  return out;
}

}  // namespace

Json to_json(const Cluster& c, Dims dims) { return cluster_json(c, dims); }

Json to_json(const ClusterBoundReport& r, Dims dims) {
  Json j;
  j["N"] = r.N;
  j["c0_points"] = r.c0_points;
  j["c0_max"] = r.c0_max;
  j["s_unique"] = r.s_unique;
  j["c0_histogram"] = histogram_json(r.c0_histogram);
  j["levels"] = r.levels;
  j["levels_nontrivial"] = r.levels_nontrivial;
  j["theta_max"] = r.theta_max;
  if (r.theta_argmax) j["theta_argmax"] = cluster_json(*r.theta_argmax, dims);
  j["theta_histogram"] = histogram_json(r.theta_histogram);
  j["violations"] = r.violations;
  j["ok"] = r.ok();
  return j;
}

Json to_json(const SweepReport& r) {
  Json j;
  j["N"] = r.N;
  j["eta"] = r.eta;
  j["grid"] = {{"lo", r.grid.lo}, {"hi", r.grid.hi}, {"step", r.grid.step}};
  j["grid_points"] = r.grid_points;
  j["bad_points"] = r.bad_points;
  j["fraction"] = r.fraction;
  j["measure"] = r.measure;
  j["interval_measure"] = r.interval_measure;
  Json iv = Json::array();
  for (auto& b : r.intervals)
    iv.push_back({{"lo", b.lo}, {"hi", b.hi}, {"nearest_root", b.nearest_root}, {"root_distance", b.root_distance}});
  j["intervals"] = iv;
  j["max_root_distance"] = r.max_root_distance;
  j["components"] = r.components;
  j["largest_component"] = r.largest_component;
  j["verified"] = r.verified;
  j["verify_mismatch"] = r.verify_mismatch;
  return j;
}

Json to_json(const PdeCheck& pc) {
  return {{"max_residual", pc.max_residual}, {"residual_l1", pc.residual_l1}, {"nt", pc.nt}, {"nx", pc.nx},
          {"ok", pc.ok()}};
}

// ---- CSV ------------------------------------------------------------------------

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_field(fields[i]);
  }
  return out + "\r\n";
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trace_csv(const std::vector<TraceRecord>& trace) {
  std::string out = csv_row({"r", "N", "du_l2", "du_weighted", "residual", "residual_weighted", "omega",
                             "jacobian_det", "gate_diophantine", "gate_quadratic", "excisions", "wall_seconds",
                             "points", "near", "accepted"});
  for (auto& t : trace) {
    std::string om, ex;
    for (std::size_t i = 0; i < t.omega.size(); ++i) om += (i ? ";" : "") + fmt_double(t.omega[i]);
    for (std::size_t i = 0; i < t.excisions.size(); ++i) ex += (i ? "\n" : "") + t.excisions[i];
    out += csv_row({std::to_string(t.r), std::to_string(t.N), fmt_double(t.du_l2), fmt_double(t.du_weighted),
                    fmt_double(t.residual), fmt_double(t.residual_weighted), om, fmt_double(t.jacobian_det),
                    t.gate_diophantine ? "1" : "0", t.gate_quadratic ? "1" : "0", ex, fmt_double(t.wall_seconds),
                    std::to_string(t.points), std::to_string(t.near), t.accepted ? "1" : "0"});
  }
  return out;
}

}  // namespace kgqp
