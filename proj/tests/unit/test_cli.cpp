#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "parawave/io.hpp"

using namespace parawave;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result call(std::vector<std::string> args) {
    args.insert(args.begin(), "parawave");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream o;
    std::ostringstream e;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), o, e);
    return {code, o.str(), e.str()};
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("parawave_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string config(const std::string& name) { return std::string(PARAWAVE_CONFIG_DIR) + "/" + name; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string c; std::getline(ss, c, ',');) out.push_back(c);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help, unknown flags and the exit-code contract") {
    const auto h = call({"--help"});
    CHECK(h.code == 0);
    CHECK(h.out.find("kernel-check") != std::string::npos);
    CHECK(call({"kernel-check", "--bogus"}).code == cli::kExitValidation);
    CHECK(call({"no-such-command"}).code == cli::kExitValidation);
    CHECK(call({"convergence", "--config", "/nonexistent/study.json"}).code == cli::kExitValidation);
    // The installed binary follows the same contract.
    const int raw = std::system((std::string(PARAWAVE_BINARY) + " --bogus > /dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(raw) == cli::kExitValidation);
}

TEST_CASE("missing spectrum file names the path") {
    const auto dir = scratch("missing");
    auto j = io::read_json(config("demo_small.json"));
    j["spectrum"] = {{"file", "/tmp/parawave_absent_table.csv"}};
    io::write_json(dir / "study.json", j);
    const auto r = call({"convergence", "--config", (dir / "study.json").string(), "--out", (dir / "out").string()});
    CHECK(r.code == cli::kExitValidation);
    CHECK(r.err.find("/tmp/parawave_absent_table.csv") != std::string::npos);
}

TEST_CASE("kernel-check at a small draw count") {
    const auto dir = scratch("kernel");
    io::write_json(dir / "k.json", nlohmann::json{{"seed", 2}, {"draws", 20000}});
    const auto r = call({"kernel-check", "--config", (dir / "k.json").string(), "--out", (dir / "out").string()});
    INFO(r.out << r.err);
    CHECK(r.code == 0);
    CHECK(r.out.find("FAIL") == std::string::npos);
    CHECK(fs::exists(dir / "out" / "manifest.json"));
    const auto m = io::read_json(dir / "out" / "manifest.json");
    CHECK(m["status"] == "ok");
    CHECK(m["all_checks_pass"] == true);
}

TEST_CASE("plot data sections") {
    const auto dir = scratch("plots");
    const auto files = cli::emit_plot_data(nullptr, nullptr, dir);
    REQUIRE(files.size() == 3);
    for (const auto& f : files) CHECK(lines(f).size() == 1);

    StudyResult st;
    for (double eps : {0.2, 0.4}) {
        ObservableRow r;
        r.eps = eps;
        r.z = 1.0;
        r.variance = eps;
        st.rows.push_back(r);
    }
    cli::emit_plot_data(&st, nullptr, dir);
    const auto v = lines(dir / "variance_vs_eps.csv");
    REQUIRE(v.size() == 3);
    // eps descending within a (z, theta) group.
    CHECK(split(v[1])[2] == "0.40000000000000002");
    CHECK(split(v[2])[2] == "0.20000000000000001");
    CHECK(lines(dir / "refocus_profiles.csv").size() == 1);
}

TEST_CASE("seeded demo study: rerun from the manifest and golden columns") {
    const auto dir = scratch("demo");
    const auto first = call({"convergence", "--config", config("demo_small.json"), "--out", (dir / "a").string()});
    INFO(first.out << first.err);
    REQUIRE(first.code == 0);
    const auto again = call({"rerun", "--config", (dir / "a" / "manifest.json").string(), "--out", (dir / "b").string(),
                             "--workers", "2"});
    REQUIRE(again.code == 0);
    for (const char* f : {"results.csv", "reference.csv", "mean_vs_reference.csv", "variance_vs_eps.csv"})
        CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));

    // Per-column FNV-1a checksums of results.csv.
    const auto rows = lines(dir / "a" / "results.csv");
    REQUIRE(rows.size() > 1);
    const auto header = split(rows[0]);
    std::map<std::string, std::string> cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        std::string joined;
        for (std::size_t r = 1; r < rows.size(); ++r) joined += split(rows[r]).at(c) + "\n";
        cols[header[c]] = io::hex64(io::fnv1a(joined));
    }
    const fs::path golden = fs::path(PARAWAVE_GOLDEN_DIR) / "demo_small_results_columns.json";
    if (!fs::exists(golden) || std::getenv("PARAWAVE_BLESS") != nullptr) {
        fs::create_directories(golden.parent_path());
        io::write_json(golden, nlohmann::json(cols));
        MESSAGE("blessed " << golden.string());
    }
    const auto want = io::read_json(golden).get<std::map<std::string, std::string>>();
    CHECK(want.size() == cols.size());
    for (const auto& [name, sum] : want) {
        INFO("column " << name);
        CHECK(cols[name] == sum);
    }
}

}
