// Acceptance runner: one PASS/FAIL line per criterion, exit 0 only if all pass.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "parawave/io.hpp"
#include "parawave/medium.hpp"
#include "parawave/psolver.hpp"
#include "parawave/regime.hpp"
#include "parawave/rng.hpp"
#include "parawave/wigner.hpp"

using namespace parawave;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string num(double v) {
    std::ostringstream s;
    s << v;
    return s.str();
}

std::string config(const std::string& name) { return std::string(PARAWAVE_CONFIG_DIR) + "/" + name; }

/// Runs one CLI command and returns its manifest.
json run_cli(const std::vector<std::string>& args, const fs::path& out_dir) {
    std::vector<std::string> full{"parawave"};
    full.insert(full.end(), args.begin(), args.end());
    full.emplace_back("--out");
    full.push_back(out_dir.string());
    std::vector<const char*> argv;
    for (const auto& a : full) argv.push_back(a.c_str());
    std::ostringstream table;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), table, std::cerr);
    std::cerr << table.str();
    json m = io::read_json(out_dir / "manifest.json");
    m["_exit"] = code;
    return m;
}

/// All named checks of a manifest pass.
Verdict manifest_checks(const json& m, const std::vector<std::string>& names) {
    Verdict v{true, ""};
    if (m.value("status", std::string()) == "error") return {false, m.value("error", std::string("run failed"))};
    for (const auto& n : names) {
        const bool ok = m["checks"].contains(n) && m["checks"][n].get<bool>();
        v.pass = v.pass && ok;
        v.detail += n + (ok ? "=ok " : "=FAIL ");
    }
    return v;
}

FieldSliceView random_view(const ScalingRegime& r, const TransverseGrid& g, double z_final, std::uint64_t seed) {
    const auto s = SpectralDensity::smooth_bump(1.0, 1.0, 1.0, g.dim);
    const auto mg = plan_medium_grid(r, s, g.dim, g.n[0], g.dx, z_final);
    return FieldSliceView(std::make_shared<const MediumRealization>(synthesize(s, mg, seed, 0)), r);
}

Verdict unitarity() {
    const auto r = regime_table(TheoremFamily::T1, 0.2, 1.0, 1.0, 1.0);
    const auto g = centered_grid(1, 2048, 16.0);
    const auto v = random_view(r, g, 1.0, 101);
    auto w = gaussian_beam(g, r, {0.0, 0.0}, 0.5, {0.5, 0.0});
    const double n0 = w.norm2();
    Propagator prop(g, r);
    for (int i = 0; i < 1000; ++i) prop.step(w, v, 1e-3);
    const double drift = std::abs(w.norm2() - n0) / n0;
    return {drift <= 1e-10, "N=2048, 1000 steps, relative drift " + num(drift)};
}

Verdict wigner_marginal() {
    const auto r = regime_table(TheoremFamily::T1, 0.3, 1.0, 1.0, 1.0);
    const auto g = centered_grid(1, 256, 16.0);
    double worst = 0.0;
    for (std::uint64_t f = 0; f < 20; ++f) {
        Philox4x32 rng(77, f);
        WaveField w{g, std::vector<cplx>(g.size()), 0.0, r};
        for (auto& c : w.psi) c = cplx(standard_normal(rng), standard_normal(rng));
        worst = std::max(worst, std::abs(wigner_transform(w).total() - w.norm2()) / w.norm2());
    }
    return {worst <= 1e-8, "20 random fields, worst relative defect " + num(worst)};
}

Verdict free_space() {
    const double k = 1.5;
    const auto r = regime_table(TheoremFamily::T1, 0.5, 1.0, 1.0, k);
    const auto g = centered_grid(1, 256, 32.0);
    const double w0 = 0.6;
    const double p0 = 0.4;
    const double c = -2.0;
    const auto psi = gaussian_beam(g, r, {c, 0.0}, w0, {p0, 0.0});
    const FieldSliceView zero([](double, std::span<const double>) { return 0.0; }, 1, 1.0, 1.0);
    const double z = 1.0;
    const auto W = wigner_transform(propagate(psi, zero, z, 0.05).back());
    const double sp = r.s_w / (2.0 * w0);
    double num2 = 0.0;
    double den2 = 0.0;
    for (int j = 0; j < g.n[0]; ++j)
        for (int m = 0; m < g.n[0]; ++m) {
            const double p = W.p(m);
            const double x0 = g.x(0, j) - z * p / k;
            const double want = std::exp(-(x0 - c) * (x0 - c) / (2.0 * w0 * w0) - (p - p0) * (p - p0) / (2.0 * sp * sp)) /
                                (std::sqrt(2.0 * kPi) * sp);
            const double d = W.at(static_cast<std::size_t>(j), static_cast<std::size_t>(m)) - want;
            num2 += d * d;
            den2 += want * want;
        }
    const double err = std::sqrt(num2 / den2);
    return {err <= 1e-6, "relative L2 error at z=1: " + num(err)};
}

Verdict reversibility() {
    const auto r = regime_table(TheoremFamily::T1, 0.2, 1.0, 1.0, 1.0);
    const auto g = centered_grid(1, 512, 16.0);
    const double Z = 1.0;
    const auto v = random_view(r, g, Z, 202);
    const auto psi0 = gaussian_beam(g, r, {0.0, 0.0}, 0.5, {0.3, 0.0});
    const auto fwd = propagate(psi0, v, Z, 0.01);
    auto back = conjugate_and_aperture(fwd.back(), Aperture::full());
    back.z = 0.0;
    const auto ret = conjugate_and_aperture(propagate(back, v.reversed(Z), Z, 0.01).back(), Aperture::full());
    double num2 = 0.0;
    double den2 = 0.0;
    for (std::size_t i = 0; i < psi0.psi.size(); ++i) {
        num2 += std::norm(ret.psi[i] - psi0.psi[i]);
        den2 += std::norm(psi0.psi[i]);
    }
    const double err = std::sqrt(num2 / den2);
    return {err <= 1e-8, "relative error " + num(err)};
}

/// Byte comparison of the data CSVs of a run and its manifest rerun.
Verdict determinism(const fs::path& out) {
    const auto a = out / "determinism_a";
    const auto b = out / "determinism_b";
    const json m = run_cli({"convergence", "--config", config("demo_small.json")}, a);
    if (m["_exit"] != 0) return {false, "seeded study failed"};
    const json m2 = run_cli({"rerun", "--config", (a / "manifest.json").string(), "--workers", "2"}, b);
    if (m2["_exit"] != 0) return {false, "rerun failed"};
    std::size_t compared = 0;
    for (const auto& f : m["outputs"]) {
        const std::string name = f["file"].get<std::string>();
        if (fs::path(name).extension() != ".csv") continue;
        ++compared;
        if (io::fnv1a_file(a / name) != io::fnv1a_file(b / name)) return {false, name + " differs"};
    }
    return {compared > 0, std::to_string(compared) + " CSVs byte-identical after rerun from manifest"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"parawave acceptance runner"};
    fs::path out = "acceptance_out";
    int workers = 1;
    app.add_option("--out", out, "output directory");
    app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);
    fs::remove_all(out);
    fs::create_directories(out);
    const std::string w = std::to_string(workers);

    json kernel;
    auto kernel_run = [&]() -> const json& {
        if (kernel.is_null()) kernel = run_cli({"kernel-check", "--config", config("kernel_check.json"), "--workers", w},
                                               out / "kernel_check");
        return kernel;
    };
    json t1;
    auto t1_run = [&]() -> const json& {
        if (t1.is_null()) t1 = run_cli({"convergence", "--config", config("t1_convergence.json"), "--workers", w},
                                       out / "t1_convergence");
        return t1;
    };

    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"unitarity", unitarity},
        {"wigner-marginal", wigner_marginal},
        {"free-space-oracle", free_space},
        {"medium-statistics",
         [&] {
             const auto m = run_cli({"synth-check", "--config", config("synth_check.json"), "--workers", w},
                                    out / "synth_check");
             std::vector<std::string> names;
             for (const auto& [k, v] : m["checks"].items()) names.push_back(k);
             auto v = manifest_checks(m, names);
             v.pass = v.pass && names.size() >= 3;
             return v;
         }},
        {"kernel-samplers",
         [&] {
             return manifest_checks(kernel_run(), {"kernel-rad2-chi2", "kernel-rad-chi2", "kernel-t3i-chi2",
                                                   "kernel-t3iii-chi2", "elastic-norm", "elastic-direction-chi2",
                                                   "elastic-azimuth-chi2", "jump-rate"});
         }},
        {"diffusion-tensors",
         [&] { return manifest_checks(kernel_run(), {"tensor-d20", "tensor-d21", "tensor-d22", "langevin-variance"}); }},
        {"reversibility", reversibility},
        {"convergence-trend-T1", [&] { return manifest_checks(t1_run(), {"mean-gap-trend", "conservation-audit"}); }},
        {"self-averaging-T1", [&] { return manifest_checks(t1_run(), {"variance-trend"}); }},
        {"diffusion-trend-T2",
         [&] {
             const auto m = run_cli({"convergence", "--config", config("t2_diffusion.json"), "--workers", w},
                                    out / "t2_diffusion");
             return manifest_checks(m, {"mean-gap-trend", "variance-trend", "conservation-audit"});
         }},
        {"time-reversal",
         [&] {
             const auto m = run_cli({"time-reversal", "--config", config("time_reversal.json"), "--workers", w},
                                    out / "time_reversal");
             return manifest_checks(m, {"refocus-stability", "diffraction-width", "reversibility"});
         }},
        {"determinism", [&] { return determinism(out); }},
    };

    bool all = true;
    int index = 0;
    for (const auto& [name, fn] : criteria) {
        ++index;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = fn();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        all = all && v.pass;
        std::cout << (v.pass ? "PASS " : "FAIL ") << std::setw(2) << index << " " << name << "  " << v.detail << " ("
                  << num(secs) << " s)" << std::endl;
    }
    return all ? 0 : 1;
}
