#include "mudet/io.hpp"

#include <cstdio>
#include <fstream>

namespace mudet::io {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

OutputRow to_row(const snrmodel::SnrCurvePoint& p, std::uint64_t seed) {
    OutputRow row;
    row.K = p.K;
    row.algorithm = to_string(p.algorithm);
    row.phi2 = p.phi2;
    row.aleph = p.aleph;
    row.gamma_linear = p.gamma_linear;
    if (p.gamma_db_defined)
        row.gamma_db = p.gamma_db;
    else
        row.gamma_db_undefined = true;
    row.seed = seed;
    return row;
}

OutputRow to_row(const mc::MonteCarloStats& s) {
    OutputRow row;
    row.K = s.K;
    row.algorithm = to_string(s.detector);
    row.symbols = s.symbols;
    row.seed = s.seed;
    if (!s.skipped) {
        row.ber = s.ber;
        row.ber_ci95 = s.ber_ci95;
        row.empirical_snr_db = s.empirical_snr_db;
        row.mean_metric_evals = s.mean_metric_evals;
    }
    return row;
}

namespace {

void append_field(std::string& out, const std::optional<double>& v) {
    if (v) out += format_double(*v);
}

}  // namespace

std::string to_csv(const std::vector<OutputRow>& rows) {
    std::string out = kCsvHeader;
    out += '\n';
    for (const OutputRow& r : rows) {
        if (r.K) out += std::to_string(*r.K);
        out += ',';
        out += r.algorithm;
        out += ',';
        append_field(out, r.phi2);
        out += ',';
        append_field(out, r.aleph);
        out += ',';
        append_field(out, r.gamma_linear);
        out += ',';
        if (r.gamma_db_undefined)
            out += "undefined";
        else
            append_field(out, r.gamma_db);
        out += ',';
        append_field(out, r.ber);
        out += ',';
        append_field(out, r.ber_ci95);
        out += ',';
        append_field(out, r.empirical_snr_db);
        out += ',';
        append_field(out, r.mean_metric_evals);
        out += ',';
        if (r.symbols) out += std::to_string(*r.symbols);
        out += ',';
        if (r.seed) out += std::to_string(*r.seed);
        out += '\n';
    }
    return out;
}

namespace {

Json json_value(const std::optional<double>& v) {
    if (!v) return nullptr;
    return *v;
}

}  // namespace

Json to_json(const std::vector<OutputRow>& rows, const Json& meta) {
    Json doc;
    doc["meta"] = meta.is_null() ? Json::object() : meta;
    Json arr = Json::array();
    for (const OutputRow& r : rows) {
        Json o;
        o["K"] = r.K ? Json(*r.K) : Json(nullptr);
        o["algorithm"] = r.algorithm;
        o["phi2"] = json_value(r.phi2);
        o["aleph"] = json_value(r.aleph);
        o["gamma_linear"] = json_value(r.gamma_linear);
        if (r.gamma_db_undefined)
            o["gamma_db"] = "undefined";
        else
            o["gamma_db"] = json_value(r.gamma_db);
        o["ber"] = json_value(r.ber);
        o["ber_ci95"] = json_value(r.ber_ci95);
        o["empirical_snr_db"] = json_value(r.empirical_snr_db);
        o["mean_metric_evals"] = json_value(r.mean_metric_evals);
        o["symbols"] = r.symbols ? Json(*r.symbols) : Json(nullptr);
        o["seed"] = r.seed ? Json(*r.seed) : Json(nullptr);
        arr.push_back(std::move(o));
    }
    doc["rows"] = std::move(arr);
    return doc;
}

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open output file: " + path);
    f << content;
    if (!f) throw Error("write failed: " + path);
}

}  // namespace

void write_rows(const std::vector<OutputRow>& rows, const std::string& format,
                const std::string& path, const Json& meta) {
    if (format == "csv") {
        write_file(path, to_csv(rows));
        if (!meta.is_null())
            write_file(path + ".meta.json", meta.dump(2) + "\n");
    } else if (format == "json") {
        write_file(path, to_json(rows, meta).dump(2) + "\n");
    } else {
        throw ConfigError("unknown output format: " + format);
    }
}

}  // namespace mudet::io
