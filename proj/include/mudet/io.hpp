#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "mudet/montecarlo.hpp"
#include "mudet/snrmodel.hpp"

namespace mudet::io {

using Json = nlohmann::ordered_json;

inline constexpr const char* kCsvHeader =
    "K,algorithm,phi2,aleph,gamma_linear,gamma_db,ber,ber_ci95,empirical_snr_db,"
    "mean_metric_evals,symbols,seed";

/// Union row schema shared by model curves and Monte Carlo sweeps.  Absent
/// fields serialize empty in CSV and null in JSON; a model point whose
/// gamma_db is out of domain carries the literal `undefined`.
struct OutputRow {
    std::optional<int> K;
    std::string algorithm;
    std::optional<double> phi2;
    std::optional<double> aleph;
    std::optional<double> gamma_linear;
    std::optional<double> gamma_db;
    bool gamma_db_undefined = false;
    std::optional<double> ber;
    std::optional<double> ber_ci95;
    std::optional<double> empirical_snr_db;
    std::optional<double> mean_metric_evals;
    std::optional<std::int64_t> symbols;
    std::optional<std::uint64_t> seed;
};

OutputRow to_row(const snrmodel::SnrCurvePoint& p, std::uint64_t seed);
OutputRow to_row(const mc::MonteCarloStats& s);

/// Doubles in CSV carry 10 significant digits, trailing zeros trimmed.
std::string format_double(double v);

std::string to_csv(const std::vector<OutputRow>& rows);
Json to_json(const std::vector<OutputRow>& rows, const Json& meta);

/// Writes rows at `path`.  csv: the fixed-header table, and when meta is
/// non-null a sidecar `<path>.meta.json`.  json: one document with `meta` and
/// `rows`.  Identical inputs produce byte-identical files.
void write_rows(const std::vector<OutputRow>& rows, const std::string& format,
                const std::string& path, const Json& meta = Json());

}  // namespace mudet::io
