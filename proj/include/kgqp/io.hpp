#pragma once

#include <json.hpp>

#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgqp/basis.hpp"
#include "kgqp/characteristics.hpp"
#include "kgqp/lattice.hpp"
#include "kgqp/newton.hpp"
#include "kgqp/sweep.hpp"

namespace kgqp {

using Json = nlohmann::ordered_json;

// Malformed input; line is 1-based, 0 when unknown.
struct InputError : std::runtime_error {
  int line = 0;
  InputError(const std::string& msg, int line_no = 0);
};

// Parses text, reporting syntax errors with their line number.
Json parse_json_text(const std::string& text, const std::string& what);
Json read_json_file(const std::string& path);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// ---- basis ---------------------------------------------------------------

Json to_json(const FrequencyBasis& basis);
// Recomputes radicands and frequencies from the modes; rejects files whose
// stored radicands disagree.
FrequencyBasis basis_from_json(const Json& j);

// ---- series --------------------------------------------------------------

// {"b", "d", "terms": [{"n": [...], "j": [...], "c": value}]}, canonical
// points only. Long double coefficients are written as decimal strings with
// enough digits to round-trip.
Json to_json(const CosineSeries& u);
Json to_json(const CosineSeriesL& u);
CosineSeries series_from_json(const Json& j);
CosineSeriesL series_l_from_json(const Json& j);

Json to_json(const Nonlinearity& nl);
Nonlinearity nonlinearity_from_json(const Json& j, Dims dims);

// ---- solver config --------------------------------------------------------

struct RunConfig {
  FrequencyBasis basis;
  std::string basis_ref;  // path when the basis was given by reference
  Nonlinearity nl;
  SolverParameters params;
};

// Config schema: {"basis": {...} | "basis_file": path, "delta", "a" | "seed",
// "nl": {...}, "params": {...}}. Unknown keys and wrong types are rejected
// with the line of the offending key.
RunConfig run_config_from_text(const std::string& text, const std::string& base_dir = ".");
Json to_json(const SolverParameters& prm);

// ---- reports ---------------------------------------------------------------

Json to_json(const TraceRecord& rec);
TraceRecord trace_record_from_json(const Json& j);
Json to_json(const GateResult& g);
Json to_json(const ClusterBoundReport& rep, Dims dims);
Json to_json(const Cluster& c, Dims dims);
Json to_json(const SweepReport& rep);
Json to_json(const PdeCheck& pc);

// ---- CSV -------------------------------------------------------------------

// RFC-4180: CRLF row ends, fields quoted when they hold a comma, quote or line break.
std::string csv_field(const std::string& s);
std::string csv_row(const std::vector<std::string>& fields);
std::string fmt_double(double v);  // shortest round-trip text

std::string trace_csv(const std::vector<TraceRecord>& trace);

}  // namespace kgqp
