#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <memory>
#include <numbers>
#include <sstream>

#include "parawave/errors.hpp"
#include "parawave/io.hpp"
#include "parawave/medium.hpp"

namespace parawave::cli {

namespace {

using nlohmann::json;

const char* const kVersion = "0.1.0";

json thresholds() {
    return {{"norm_drift", 1e-9},
            {"mass_drift", 1e-8},
            {"trend_sigma", 2.0},
            {"final_gap_sigma", 3.0},
            {"diffraction_tolerance", 0.10},
            {"frozen_fraction", 1e-3}};
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

/// Config JSON with relative spectrum paths made absolute so a manifest
/// re-runs from any working directory.
json resolve_config(json cfg, const std::filesystem::path& base) {
    if (cfg.contains("spectrum") && cfg["spectrum"].is_object() && cfg["spectrum"].contains("file")) {
        std::filesystem::path p = cfg["spectrum"]["file"].get<std::string>();
        if (p.is_relative()) cfg["spectrum"]["file"] = std::filesystem::absolute(base / p).lexically_normal().string();
    }
    return cfg;
}

std::vector<json> file_list(const std::vector<std::filesystem::path>& files) {
    std::vector<json> out;
    for (const auto& f : files)
        if (std::filesystem::exists(f))
            out.push_back({{"file", f.filename().string()}, {"fnv1a", io::hex64(io::fnv1a_file(f))}});
    return out;
}

struct Outcome {
    int code = kExitOk;
    json checks = json::object();
    std::vector<std::filesystem::path> files;
    json metadata = json::object();
};

bool all_pass(const std::vector<CheckRow>& rows) {
    for (const auto& r : rows)
        if (!r.pass) return false;
    return true;
}

json rows_json(const std::vector<CheckRow>& rows) {
    json j = json::object();
    for (const auto& r : rows) j[r.name] = r.pass;
    return j;
}

void write_rows_csv(const std::filesystem::path& path, const std::vector<CheckRow>& rows) {
    io::CsvWriter w(path, {"check", "pass", "detail"});
    for (const auto& r : rows) {
        std::string d = r.detail;
        for (auto& c : d)
            if (c == ',' || c == '\n') c = ';';
        w.row({r.name, r.pass ? "1" : "0", d});
    }
}

StudySpec load_study(const json& cfg, const RunConfig& rc, const std::filesystem::path& base) {
    StudySpec spec = study_from_json(cfg, base);
    if (rc.seed) spec.seed = *rc.seed;
    spec.allow_out_of_range = spec.allow_out_of_range || rc.allow_out_of_range;
    return spec;
}

Outcome cmd_kernel_check(const json& cfg, const RunConfig& rc, std::ostream& out) {
    const std::uint64_t seed = rc.seed.value_or(cfg.value("seed", std::uint64_t{1}));
    const std::size_t draws = cfg.value("draws", std::size_t{100000});
    const auto rows = kernel_checks(seed, draws, rc.workers);
    print_table(out, rows);
    Outcome o;
    o.files.push_back(rc.out / "kernel_check.csv");
    write_rows_csv(o.files.back(), rows);
    o.checks = rows_json(rows);
    o.code = all_pass(rows) ? kExitOk : kExitRuntime;
    return o;
}

Outcome cmd_synth_check(const json& cfg, const RunConfig& rc, std::ostream& out) {
    const std::uint64_t seed = rc.seed.value_or(cfg.value("seed", std::uint64_t{1}));
    const auto rows = synth_checks(cfg, seed, rc.workers, rc.out);
    print_table(out, rows);
    Outcome o;
    o.files.push_back(rc.out / "synth_check.csv");
    o.checks = rows_json(rows);
    o.code = all_pass(rows) ? kExitOk : kExitRuntime;
    return o;
}

Outcome cmd_wave_demo(const json& cfg, const RunConfig& rc, const std::filesystem::path& base, std::ostream& out,
                      std::ostream& err) {
    StudySpec spec = load_study(cfg, rc, base);
    spec.realizations = std::max(spec.realizations, 8);
    validate_study(spec);
    const auto s = spectrum_from_json(spec.spectrum, spec.dim, spec.base_dir);
    const double eps = spec.eps.front();
    const auto regime = study_regime(spec, eps);
    const auto grid = study_grid(spec, regime);
    err << "wave-demo " << regime.label() << " N=" << grid.n[0] << "\n";
    const double dz = spec.grid.dz_fraction * std::pow(eps, regime.z_power);
    std::optional<FieldSliceView> view;
    if (spec.zero_medium || s.amplitude() == 0.0) {
        view.emplace([](double, std::span<const double>) { return 0.0; }, spec.dim, std::pow(eps, regime.z_power),
                     std::pow(eps, regime.x_power));
    } else {
        const auto mg = plan_medium_grid(regime, s, spec.dim, grid.n[0], grid.dx, spec.z.back(), spec.grid.z_resolution);
        view.emplace(std::make_shared<const MediumRealization>(synthesize(s, mg, spec.seed, 0)), regime);
    }
    const double w = spec.initial.width;
    const WaveField psi0 =
        gaussian_beam(grid, regime, spec.initial.center, w, spec.initial.p0, std::pow(2.0 * std::numbers::pi * w * w, -spec.dim / 4.0));
    Propagator prop(grid, regime, spec.grid.p_max);
    const auto traj = prop.propagate(psi0, *view, spec.z, dz);
    Outcome o;
    o.files.push_back(rc.out / "observables.csv");
    io::CsvWriter csv(o.files.back(), {"z", "theta", "theta_id", "value", "norm2"});
    double drift = 0.0;
    double marginal = 0.0;
    for (std::size_t zi = 0; zi < traj.size(); ++zi) {
        const auto& f = traj[zi];
        const auto vals = weak_observables(f, spec.tests);
        for (std::size_t t = 0; t < vals.size(); ++t)
            csv.row({io::fmt(f.z), std::to_string(t), spec.tests[t].id(), io::fmt(vals[t]), io::fmt(f.norm2())});
        drift = std::max(drift, std::abs(f.norm2() - psi0.norm2()) / psi0.norm2());
        marginal = std::max(marginal, marginal_defect(f));
    }
    write_field(rc.out / "field.bin", traj.back());
    write_wigner(rc.out / "wigner.bin", wigner_transform(traj.back()));
    o.files.push_back(rc.out / "field.bin");
    o.files.push_back(rc.out / "wigner.bin");
    std::vector<CheckRow> rows{{"norm-conservation", drift <= 1e-9, "max relative drift " + io::fmt(drift)},
                               {"wigner-marginal", marginal <= 1e-8, "max row defect " + io::fmt(marginal)}};
    print_table(out, rows);
    o.checks = rows_json(rows);
    o.code = all_pass(rows) ? kExitOk : kExitRuntime;
    return o;
}

Outcome cmd_convergence(const json& cfg, const RunConfig& rc, const std::filesystem::path& base, std::ostream& out,
                        std::ostream& err) {
    const StudySpec spec = load_study(cfg, rc, base);
    const auto res = run_convergence_study(spec, rc.workers, [&err](const std::string& m) { err << m << "\n"; });
    write_study_csv(res, rc.out);
    Outcome o;
    o.files = {rc.out / "results.csv", rc.out / "reference.csv"};
    for (auto& f : emit_plot_data(&res, nullptr, rc.out)) o.files.push_back(f);
    const auto gap = study_gap_trend(res);
    const auto var = study_variance_trend(res);
    bool conserved = true;
    for (const auto& r : res.rows) conserved = conserved && r.valid;
    std::vector<CheckRow> rows{{"mean-gap-trend", gap.pass, gap.detail},
                               {"variance-trend", var.pass, var.detail},
                               {"conservation-audit", conserved, "norm and Wigner-mass drift within thresholds"}};
    if (res.tensor == to_string(TensorKind::D21))
        rows.push_back({"frozen-fraction", res.frozen_fraction < 1e-3, io::fmt(res.frozen_fraction)});
    print_table(out, rows);
    o.checks = rows_json(rows);
    o.metadata = res.metadata;
    return o;
}

Outcome cmd_time_reversal(const json& cfg, const RunConfig& rc, const std::filesystem::path& base, std::ostream& out,
                          std::ostream& err) {
    const StudySpec spec = load_study(cfg, rc, base);
    const auto res = run_time_reversal(spec, rc.workers, [&err](const std::string& m) { err << m << "\n"; });
    write_refocus_csv(res, rc.out);
    Outcome o;
    o.files = {rc.out / "refocus_summary.csv"};
    for (auto& f : emit_plot_data(nullptr, &res, rc.out)) o.files.push_back(f);
    std::vector<CheckRow> rows;
    std::vector<const RefocusReport*> random;
    const RefocusReport* free = nullptr;
    for (const auto& r : res.reports) (r.random_medium ? random.push_back(&r) : void(free = &r));
    bool stable = random.size() >= 2;
    for (std::size_t i = 1; i < random.size(); ++i)
        stable = stable && random[i]->relative_stderr < random[i - 1]->relative_stderr;
    std::ostringstream d;
    for (const auto* r : random) d << "eps=" << r->eps << " rel_stderr=" << r->relative_stderr << "; ";
    rows.push_back({"refocus-stability", stable, d.str()});
    if (free != nullptr) {
        const double rel = std::abs(free->fwhm - res.diffraction_fwhm) / res.diffraction_fwhm;
        rows.push_back({"diffraction-width", rel <= 0.10,
                        "fwhm " + io::fmt(free->fwhm) + " oracle " + io::fmt(res.diffraction_fwhm)});
        rows.push_back({"reversibility", free->reversibility_error <= 1e-8, io::fmt(free->reversibility_error)});
    }
    print_table(out, rows);
    o.checks = rows_json(rows);
    o.metadata = res.metadata;
    return o;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const ConfigurationError*>(&e) ||
        dynamic_cast<const ArgumentError*>(&e))
        return kExitValidation;
    return kExitRuntime;
}

}  // namespace

std::string to_string(Command c) {
    switch (c) {
        case Command::SynthCheck: return "synth-check";
        case Command::WaveDemo: return "wave-demo";
        case Command::Convergence: return "convergence";
        case Command::TimeReversal: return "time-reversal";
        case Command::KernelCheck: return "kernel-check";
        case Command::Rerun: return "rerun";
    }
    return "?";
}

Command command_from_string(const std::string& name) {
    for (auto c : {Command::SynthCheck, Command::WaveDemo, Command::Convergence, Command::TimeReversal,
                   Command::KernelCheck, Command::Rerun})
        if (to_string(c) == name) return c;
    throw ArgumentError("unknown command: " + name);
}

void print_table(std::ostream& os, const std::vector<CheckRow>& rows) {
    std::size_t w = 5;
    for (const auto& r : rows) w = std::max(w, r.name.size());
    for (const auto& r : rows) {
        os << std::left << std::setw(static_cast<int>(w) + 2) << r.name << (r.pass ? "PASS" : "FAIL");
        std::string first = r.detail.substr(0, r.detail.find('\n'));
        if (!first.empty()) os << "  " << first;
        os << '\n';
    }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"parawave: parabolic waves in random media"};
    app.set_help_flag("-h,--help", "Print this help and exit");
    std::string command;
    RunConfig rc;
    std::string config;
    std::string outdir = "out";
    int workers = 0;
    std::uint64_t seed = 0;
    app.add_option("command", command,
                   "synth-check | wave-demo | convergence | time-reversal | kernel-check | rerun")
        ->required();
    app.add_option("--config", config, "JSON config (or a manifest to re-run)");
    app.add_option("--out", outdir, "Output directory (created if missing)");
    auto* wopt = app.add_option("--workers", workers, "Worker threads (fallback: PARAWAVE_WORKERS, then 1)");
    auto* sopt = app.add_option("--seed", seed, "Override the config seed");
    app.add_flag("--allow-out-of-range-regime", rc.allow_out_of_range,
                 "Run regimes outside the parameter ranges of the limit theorems");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return kExitValidation;
    }

    json cfg = json::object();
    std::filesystem::path base = ".";
    try {
        rc.command = command_from_string(command);
        if (wopt->count() > 0) {
            rc.workers = workers;
        } else if (const char* env = std::getenv("PARAWAVE_WORKERS"); env != nullptr && *env != '\0') {
            try {
                rc.workers = std::stoi(env);
            } catch (const std::exception&) {
                throw ArgumentError(std::string("PARAWAVE_WORKERS is not an integer: ") + env);
            }
        }
        if (rc.workers < 1) throw ArgumentError("worker count must be at least 1");
        if (sopt->count() > 0) rc.seed = seed;
        rc.out = outdir;
        if (!config.empty()) {
            rc.config = config;
            cfg = io::read_json(rc.config);
            base = rc.config.parent_path();
        }
        // A manifest re-runs its own command with its own flags.
        if (cfg.contains("parawave_manifest")) {
            const auto& flags = cfg.at("flags");
            rc.command = command_from_string(cfg.at("command").get<std::string>());
            if (!rc.seed && flags.contains("seed") && !flags["seed"].is_null()) rc.seed = flags["seed"].get<std::uint64_t>();
            rc.allow_out_of_range = rc.allow_out_of_range || flags.value("allow_out_of_range_regime", false);
            cfg = cfg.at("config");
            base = ".";
        } else if (rc.command == Command::Rerun) {
            throw ConfigurationError("rerun needs --config pointing at a manifest: " + rc.config.string());
        }
        const bool needs_config = rc.command == Command::WaveDemo || rc.command == Command::Convergence ||
                                  rc.command == Command::TimeReversal;
        if (needs_config && cfg.empty()) throw ConfigurationError("command " + to_string(rc.command) + " needs --config");
        cfg = resolve_config(cfg, base);
        io::ensure_dir(rc.out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }

    json manifest = {{"parawave_manifest", 1},
                     {"version", kVersion},
                     {"command", to_string(rc.command)},
                     {"flags",
                      {{"config", rc.config.string()},
                       {"out", rc.out.string()},
                       {"workers", rc.workers},
                       {"seed", rc.seed ? json(*rc.seed) : json()},
                       {"allow_out_of_range_regime", rc.allow_out_of_range}}},
                     {"config", cfg},
                     {"thresholds", thresholds()},
                     {"started_utc", utc_now()}};
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        switch (rc.command) {
            case Command::KernelCheck: o = cmd_kernel_check(cfg, rc, out); break;
            case Command::SynthCheck: o = cmd_synth_check(cfg, rc, out); break;
            case Command::WaveDemo: o = cmd_wave_demo(cfg, rc, base, out, err); break;
            case Command::Convergence: o = cmd_convergence(cfg, rc, base, out, err); break;
            case Command::TimeReversal: o = cmd_time_reversal(cfg, rc, base, out, err); break;
            case Command::Rerun: break;
        }
        manifest["status"] = o.code == kExitOk ? "ok" : "checks-failed";
        manifest["all_checks_pass"] = std::all_of(o.checks.begin(), o.checks.end(), [](const json& v) { return v.get<bool>(); });
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        o.code = exit_code_for(e);
        manifest["status"] = "error";
        manifest["error"] = e.what();
    }
    manifest["checks"] = o.checks;
    manifest["outputs"] = file_list(o.files);
    manifest["metadata"] = o.metadata;
    manifest["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest["exit_code"] = o.code;
    try {
        io::write_json(rc.out / "manifest.json", manifest);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return o.code;
}

}  // namespace parawave::cli
