#include "mudet/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>

#include "mudet/io.hpp"

namespace mudet::cli {

namespace {

constexpr const char* kVersion = "0.1.0";

std::pair<int, int> parse_k_spec(const std::string& spec, int def_lo, int def_hi) {
    if (spec.empty()) return {def_lo, def_hi};
    const auto colon = spec.find(':');
    try {
        if (colon == std::string::npos) {
            const int k = std::stoi(spec);
            return {k, k};
        }
        return {std::stoi(spec.substr(0, colon)), std::stoi(spec.substr(colon + 1))};
    } catch (const std::exception&) {
        throw UsageError("--k: expected K or MIN:MAX, got '" + spec + "'");
    }
}

snrmodel::Phi2Policy parse_phi2_policy(const std::string& text, const std::string& flag) {
    snrmodel::Phi2Policy policy;
    if (text.rfind("fixed:", 0) == 0) {
        policy.kind = snrmodel::Phi2Policy::Kind::fixed;
        try {
            policy.fixed_value = std::stod(text.substr(6));
        } catch (const std::exception&) {
            throw UsageError(flag + ": bad fixed value in '" + text + "'");
        }
        if (policy.fixed_value < 0)
            throw UsageError(flag + ": variance must be >= 0");
    } else if (text == "sampled") {
        policy.kind = snrmodel::Phi2Policy::Kind::sampled;
    } else if (text == "calibrated") {
        policy.kind = snrmodel::Phi2Policy::Kind::calibrated;
    } else {
        throw UsageError(flag + ": expected fixed:V, sampled or calibrated, got '" +
                         text + "'");
    }
    return policy;
}

std::vector<DetectorId> parse_detectors(const std::vector<std::string>& names) {
    std::vector<DetectorId> out;
    for (const std::string& name : names) {
        try {
            out.push_back(detector_from_string(name));
        } catch (const ConfigError& e) {
            throw UsageError(std::string("--detectors: ") + e.what());
        }
    }
    return out;
}

snrmodel::LoadClass parse_scenario(const std::string& s) {
    if (s == "light") return snrmodel::LoadClass::light;
    if (s == "heavy") return snrmodel::LoadClass::heavy;
    throw UsageError("--scenario: expected light or heavy, got '" + s + "'");
}

baseband::CodeKind parse_code_kind(const std::string& s) {
    if (s == "pseudo-random") return baseband::CodeKind::pseudo_random;
    if (s == "walsh-hadamard") return baseband::CodeKind::walsh_hadamard;
    throw UsageError("--code-kind: expected pseudo-random or walsh-hadamard, got '" +
                     s + "'");
}

void require_out(const RunConfig& config) {
    if (config.out.empty())
        throw UsageError("--out is required for command '" + config.command + "'");
    std::ofstream probe(config.out, std::ios::app);
    if (!probe) throw UsageError("--out: path not writable: " + config.out);
}

/// Applies flat JSON config-file keys as defaults.  Unknown keys are rejected.
void apply_config_file(const std::string& path, RunConfig& config) {
    std::ifstream f(path);
    if (!f) throw UsageError("--config: cannot read " + path);
    nlohmann::json doc;
    try {
        f >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("--config: " + path + " is not valid JSON: " + e.what());
    }
    if (!doc.is_object()) throw UsageError("--config: expected a flat JSON object");
    for (const auto& [key, value] : doc.items()) {
        try {
            if (key == "seed") config.seed = value.get<std::uint64_t>();
            else if (key == "workers") config.workers = value.get<int>();
            else if (key == "out") config.out = value.get<std::string>();
            else if (key == "format") config.format = value.get<std::string>();
            else if (key == "scenario") config.scenario = value.get<std::string>();
            else if (key == "k") config.k_spec = value.is_string()
                                                     ? value.get<std::string>()
                                                     : std::to_string(value.get<int>());
            else if (key == "n") config.n = value.get<int>();
            else if (key == "ebn0") {
                config.ebn0.clear();
                if (value.is_array())
                    for (const auto& v : value) config.ebn0.push_back(v.get<double>());
                else
                    config.ebn0.push_back(value.get<double>());
            } else if (key == "symbols") config.symbols = value.get<std::int64_t>();
            else if (key == "detectors") {
                config.detectors.clear();
                for (const auto& v : value) config.detectors.push_back(v.get<std::string>());
            } else if (key == "tau") config.tau = value.get<double>();
            else if (key == "s-max") config.s_max = value.get<int>();
            else if (key == "pilot-period") config.pilot_period = value.get<int>();
            else if (key == "code-kind") config.code_kind = value.get<std::string>();
            else if (key == "profile") config.profile = value.get<std::string>();
            else if (key == "c") config.c = value.get<double>();
            else if (key == "phi2") config.phi2 = value.get<std::string>();
            else if (key == "nd-a") config.nd_a = value.get<double>();
            else if (key == "nd-p") config.nd_p = value.get<double>();
            else if (key == "nd-iters") config.nd_iters = value.get<double>();
            else if (key == "target-db") config.target_db = value.get<double>();
            else if (key == "fig") config.fig = value.get<int>();
            else if (key == "policy") config.policy = value.get<std::string>();
            else throw UsageError("--config: unknown key '" + key + "'");
        } catch (const nlohmann::json::exception&) {
            throw UsageError("--config: bad value type for key '" + key + "'");
        }
    }
}

io::Json config_meta(const RunConfig& config) {
    io::Json meta;
    meta["version"] = kVersion;
    io::Json c;
    c["command"] = config.command;
    c["seed"] = config.seed;
    // workers is deliberately not echoed: results are worker-count invariant
    // and outputs must be byte-identical across --workers values.
    c["out"] = config.out;
    c["format"] = config.format;
    c["scenario"] = config.scenario;
    c["k"] = config.k_spec;
    c["n"] = config.n;
    c["ebn0"] = config.ebn0;
    c["symbols"] = config.symbols;
    c["detectors"] = config.detectors;
    c["tau"] = config.tau;
    c["s_max"] = config.s_max;
    c["pilot_period"] = config.pilot_period ? io::Json(*config.pilot_period)
                                            : io::Json(nullptr);
    c["code_kind"] = config.code_kind;
    c["profile"] = config.profile;
    c["c"] = config.c;
    c["phi2"] = config.phi2;
    c["nd_a"] = config.nd_a;
    c["nd_p"] = config.nd_p;
    c["nd_iters"] = config.nd_iters;
    c["target_db"] = config.target_db;
    c["fig"] = config.fig;
    c["policy"] = config.policy;
    meta["config"] = std::move(c);
    return meta;
}

std::vector<snrmodel::ComplexityProfile> parse_profiles(const RunConfig& config) {
    std::vector<snrmodel::ComplexityProfile> out;
    std::string text = config.profile;
    std::set<std::string> seen;
    size_t pos = 0;
    while (pos <= text.size()) {
        const size_t comma = text.find(',', pos);
        const std::string name = text.substr(pos, comma == std::string::npos
                                                      ? std::string::npos
                                                      : comma - pos);
        if (!seen.insert(name).second)
            throw UsageError("--profile: duplicate entry '" + name + "'");
        snrmodel::ComplexityProfile p;
        p.nd_a = config.nd_a;
        p.nd_p = config.nd_p;
        p.nd_iters = config.nd_iters;
        if (name == "ml") p.algorithm = DetectorId::ml;
        else if (name == "nd") p.algorithm = DetectorId::nd;
        else if (name == "tm") p.algorithm = DetectorId::tm;
        else throw UsageError("--profile: expected ml, nd or tm, got '" + name + "'");
        out.push_back(p);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw UsageError("--profile: empty");
    return out;
}

mc::ScenarioSpec scenario_from_config(const RunConfig& config) {
    mc::ScenarioSpec spec = mc::ScenarioSpec::for_load_class(parse_scenario(config.scenario));
    const auto [lo, hi] = parse_k_spec(config.k_spec, spec.k_begin, spec.k_end);
    spec.k_begin = lo;
    spec.k_end = hi;
    if (config.n < 0) throw UsageError("--n: must be >= 1");
    if (config.n > 0) spec.N = config.n;
    spec.ebn0_db = config.ebn0;
    spec.symbols_per_point = config.symbols;
    spec.detectors = parse_detectors(config.detectors);
    spec.seed = config.seed;
    spec.tm_params.tau = config.tau;
    spec.tm_params.s_max = config.s_max;
    spec.pilot_period = config.pilot_period;
    spec.workers = config.workers;
    try {
        spec.validate();  // every field came from flags, so misuse is usage
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }
    return spec;
}

int cmd_codes(const RunConfig& config) {
    require_out(config);
    if (config.format != "json")
        throw UsageError("codes: only --format json fits a code matrix "
                         "(the fixed CSV row schema does not)");
    const auto [lo, hi] = parse_k_spec(config.k_spec, 0, -1);
    if (lo != hi || lo < 1) throw UsageError("codes: --k must be a single user count");
    const int n = config.n > 0 ? config.n : 32;
    baseband::SystemConfig sys;
    sys.K = lo;
    sys.N = n;
    sys.seed = config.seed;
    sys.code_kind = parse_code_kind(config.code_kind);
    const auto codes = baseband::generate_codes(sys);
    const auto R = baseband::correlation_matrix(codes);

    io::Json doc;
    doc["meta"] = config_meta(config);
    doc["meta"]["config"]["n"] = n;
    doc["K"] = lo;
    doc["N"] = n;
    doc["code_kind"] = config.code_kind;
    doc["seed"] = config.seed;
    io::Json code_rows = io::Json::array();
    for (int k = 0; k < codes.K(); ++k) {
        io::Json row = io::Json::array();
        for (int c = 0; c < codes.N(); ++c) row.push_back(codes.codes(k, c));
        code_rows.push_back(std::move(row));
    }
    doc["codes"] = std::move(code_rows);
    io::Json corr = io::Json::array();
    for (int i = 0; i < lo; ++i) {
        io::Json row = io::Json::array();
        for (int j = 0; j < lo; ++j) row.push_back(R.R(i, j));
        corr.push_back(std::move(row));
    }
    doc["R"] = std::move(corr);
    std::ofstream f(config.out, std::ios::binary | std::ios::trunc);
    f << doc.dump(2) << "\n";
    if (!f) throw Error("write failed: " + config.out);
    return 0;
}

int cmd_simulate_or_sweep(const RunConfig& config) {
    require_out(config);
    mc::ScenarioSpec spec = scenario_from_config(config);
    if (config.command == "simulate" && config.k_spec.empty())
        throw UsageError("simulate: --k is required");
    const auto stats = mc::sweep_scenario(spec);

    std::vector<io::OutputRow> rows;
    io::Json skipped = io::Json::array();
    for (const auto& s : stats) {
        rows.push_back(io::to_row(s));
        if (s.skipped) {
            io::Json o;
            o["K"] = s.K;
            o["algorithm"] = to_string(s.detector);
            o["reason"] = "ml enumeration capped at k_max=" + std::to_string(spec.k_max);
            skipped.push_back(std::move(o));
        }
    }
    io::Json meta = config_meta(config);
    meta["config"]["n"] = spec.N;  // resolved spreading gain
    meta["k_max"] = spec.k_max;
    meta["skipped"] = std::move(skipped);
    meta["noise_sigma"] = [&] {
        io::Json m = io::Json::object();
        for (double db : spec.ebn0_db)
            m[io::format_double(db)] = mc::noise_sigma_for_ebn0(db);
        return m;
    }();
    io::write_rows(rows, config.format, config.out, meta);
    return 0;
}

int cmd_snr_model(const RunConfig& config) {
    require_out(config);
    const auto profiles = parse_profiles(config);
    snrmodel::Phi2Policy policy = parse_phi2_policy(config.phi2, "--phi2");
    policy.load_class = parse_scenario(config.scenario);
    const auto [lo, hi] = parse_k_spec(config.k_spec, 2,
                                       policy.load_class == snrmodel::LoadClass::light
                                           ? 50 : 100);

    // Calibrated model curves anchor at the K=22 reference values.
    const mc::FigureSpec anchors = mc::figure_spec(3);
    std::vector<io::OutputRow> rows;
    io::Json calibrated = io::Json::array();
    for (const auto& profile : profiles) {
        snrmodel::Phi2Policy p = policy;
        if (policy.kind == snrmodel::Phi2Policy::Kind::calibrated) {
            p.target_db = anchors.anchors_db.at(profile.algorithm);
            p.anchor_k = anchors.k_max;
            io::Json o;
            o["algorithm"] = to_string(profile.algorithm);
            o["target_db"] = p.target_db;
            o["anchor_k"] = p.anchor_k;
            o["phi2"] = snrmodel::calibrate_variance(
                p.target_db, snrmodel::profile_eval(profile, p.anchor_k), config.c,
                p.anchor_k);
            calibrated.push_back(std::move(o));
        }
        for (const auto& point :
             snrmodel::snr_curve(profile, lo, hi, config.c, p, config.seed))
            rows.push_back(io::to_row(point, config.seed));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        return a.K != b.K ? a.K < b.K : a.algorithm < b.algorithm;
    });
    io::Json meta = config_meta(config);
    meta["calibrated_phi2"] = std::move(calibrated);
    io::write_rows(rows, config.format, config.out, meta);
    return 0;
}

int cmd_calibrate(const RunConfig& config) {
    const auto [lo, hi] = parse_k_spec(config.k_spec, 0, -1);
    if (lo != hi || lo < 1) throw UsageError("calibrate: --k must be a single user count");
    const auto profiles = parse_profiles(config);
    if (profiles.size() != 1)
        throw UsageError("calibrate: --profile must name exactly one of ml, nd, tm");
    const double aleph = snrmodel::profile_eval(profiles[0], lo);
    const double phi2 = snrmodel::calibrate_variance(config.target_db, aleph, config.c, lo);
    std::printf("%s\n", io::format_double(phi2).c_str());
    if (!config.out.empty()) {
        io::Json doc;
        doc["meta"] = config_meta(config);
        doc["phi2"] = phi2;
        doc["aleph"] = aleph;
        doc["gamma_linear"] = snrmodel::snr_linear(aleph, config.c, lo);
        std::ofstream f(config.out, std::ios::binary | std::ios::trunc);
        if (!f) throw UsageError("--out: path not writable: " + config.out);
        f << doc.dump(2) << "\n";
    }
    return 0;
}

int cmd_figures(const RunConfig& config) {
    require_out(config);
    snrmodel::Phi2Policy policy = parse_phi2_policy(config.policy, "--policy");
    snrmodel::ComplexityProfile nd_profile;
    nd_profile.algorithm = DetectorId::nd;
    nd_profile.nd_a = config.nd_a;
    nd_profile.nd_p = config.nd_p;
    nd_profile.nd_iters = config.nd_iters;
    const auto dataset =
        mc::reproduce_figure(config.fig, policy, nd_profile, config.c, config.seed);

    std::vector<io::OutputRow> rows;
    rows.reserve(dataset.points.size());
    for (const auto& p : dataset.points) rows.push_back(io::to_row(p, config.seed));

    io::Json meta = config_meta(config);
    meta["fig"] = dataset.fig_id;
    meta["load_class"] = to_string(dataset.load_class);
    const double range_lo = dataset.load_class == snrmodel::LoadClass::light ? 0.6 : 0.1;
    const double range_hi = dataset.load_class == snrmodel::LoadClass::light ? 0.9 : 1.0;
    meta["stated_variance_range"] = io::Json::array({range_lo, range_hi});
    io::Json cal = io::Json::array();
    for (const auto& c : dataset.calibrations) {
        io::Json o;
        o["algorithm"] = to_string(c.algorithm);
        o["phi2"] = c.phi2;
        o["target_db"] = c.target_db;
        o["anchor_k"] = c.anchor_k;
        o["anchor_from_fallback"] = c.anchor_from_fallback;
        o["inside_stated_range"] = c.inside_stated_range;
        cal.push_back(std::move(o));
    }
    meta["calibrated_phi2"] = std::move(cal);
    io::write_rows(rows, config.format, config.out, meta);
    return 0;
}

}  // namespace

RunConfig parse_config(const std::vector<std::string>& args) {
    RunConfig config;

    // Config file first: its values become defaults the flags can override.
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw UsageError("--config: missing path");
            apply_config_file(args[i + 1], config);
        } else if (args[i].rfind("--config=", 0) == 0) {
            apply_config_file(args[i].substr(9), config);
        }
    }

    CLI::App app{"Synchronous DS-CDMA multiuser detection simulator and SNR model"};
    app.require_subcommand(1);
    std::string config_path;  // consumed above; registered so CLI11 accepts it

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file (flat flag names)");
        cmd->add_option("--seed", config.seed, "master seed");
        cmd->add_option("--out", config.out, "output path");
        cmd->add_option("--format", config.format, "csv|json");
    };
    auto add_scenario = [&](CLI::App* cmd) {
        cmd->add_option("--scenario", config.scenario, "light|heavy");
        cmd->add_option("--k", config.k_spec, "K or MIN:MAX");
        cmd->add_option("--n", config.n, "spreading gain (chips per bit)");
        cmd->add_option("--ebn0", config.ebn0, "per-user Eb/N0 grid, dB")
            ->delimiter(',');
        cmd->add_option("--symbols", config.symbols, "symbols per point");
        cmd->add_option("--detectors", config.detectors, "subset of conv,zf,ml,nd,tm")
            ->delimiter(',');
        cmd->add_option("--tau", config.tau, "tm ambiguity threshold");
        cmd->add_option("--s-max", config.s_max, "tm exhaustive refinement cap");
        cmd->add_option("--pilot-period",
                        [&config](const CLI::results_t& res) {
                            try {
                                config.pilot_period = std::stoi(res[0]);
                            } catch (const std::exception&) {
                                return false;  // surfaces as a parse error
                            }
                            return true;
                        },
                        "insert an all-(+1) pilot after every PERIOD data epochs");
        cmd->add_option("--workers", config.workers, "worker threads");
    };
    auto add_model = [&](CLI::App* cmd) {
        cmd->add_option("--profile", config.profile, "ml|nd|tm (comma list allowed)");
        cmd->add_option("--c", config.c, "normalization factor");
        cmd->add_option("--nd-a", config.nd_a, "nd profile coefficient");
        cmd->add_option("--nd-p", config.nd_p, "nd profile exponent");
        cmd->add_option("--nd-iters", config.nd_iters, "nd profile mean iterations");
    };

    CLI::App* codes = app.add_subcommand("codes", "emit a spreading code set and its R");
    add_common(codes);
    codes->add_option("--k", config.k_spec, "user count");
    codes->add_option("--n", config.n, "spreading gain");
    codes->add_option("--code-kind", config.code_kind, "pseudo-random|walsh-hadamard");

    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo at explicit settings");
    add_common(simulate);
    add_scenario(simulate);

    CLI::App* sweep = app.add_subcommand("sweep", "Monte Carlo over a scenario's K range");
    add_common(sweep);
    add_scenario(sweep);

    CLI::App* model = app.add_subcommand("snr-model", "deterministic SNR model curves");
    add_common(model);
    model->add_option("--scenario", config.scenario, "light|heavy (sampled variance range)");
    model->add_option("--k", config.k_spec, "K or MIN:MAX");
    model->add_option("--phi2", config.phi2, "fixed:V|sampled|calibrated");
    add_model(model);

    CLI::App* calibrate = app.add_subcommand("calibrate", "invert the dB formula for phi^2");
    add_common(calibrate);
    calibrate->add_option("--k", config.k_spec, "user count");
    calibrate->add_option("--target-db", config.target_db, "target SNR in dB")->required();
    add_model(calibrate);

    CLI::App* figures = app.add_subcommand("figures", "emit a figure dataset");
    add_common(figures);
    figures->add_option("--fig", config.fig, "figure id, 3..8")
        ->check(CLI::Range(3, 8));
    figures->add_option("--policy", config.policy, "fixed:V|sampled|calibrated");
    add_model(figures);

    std::vector<const char*> argv;
    argv.push_back("mudet");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        throw HelpRequested{app.help()};
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    config.command = app.get_subcommands().front()->get_name();
    if (config.format != "csv" && config.format != "json")
        throw UsageError("--format: expected csv or json, got '" + config.format + "'");
    if (config.workers < 1) throw UsageError("--workers: must be >= 1");
    return config;
}

int run(const RunConfig& config) {
    if (config.command == "codes") return cmd_codes(config);
    if (config.command == "simulate" || config.command == "sweep")
        return cmd_simulate_or_sweep(config);
    if (config.command == "snr-model") return cmd_snr_model(config);
    if (config.command == "calibrate") return cmd_calibrate(config);
    if (config.command == "figures") return cmd_figures(config);
    throw UsageError("unknown command: " + config.command);
}

int run_main(int argc, const char* const* argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        const RunConfig config = parse_config(args);
        return run(config);
    } catch (const HelpRequested& h) {
        std::cout << h.text;
        return 0;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace mudet::cli
