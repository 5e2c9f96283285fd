#include <algorithm>
#include <cmath>

#include "cli.hpp"
#include "parawave/io.hpp"

namespace parawave::cli {

std::vector<std::filesystem::path> emit_plot_data(const StudyResult* study, const TimeReversalResult* reversal,
                                                  const std::filesystem::path& dir) {
    io::ensure_dir(dir);
    const std::vector<std::filesystem::path> files{dir / "mean_vs_reference.csv", dir / "variance_vs_eps.csv",
                                                   dir / "refocus_profiles.csv"};
    {
        io::CsvWriter w(files[0], {"theta", "theta_id", "z", "eps", "mean", "stderr", "reference", "reference_stderr", "gap"});
        if (study != nullptr) {
            auto rows = study->rows;
            std::stable_sort(rows.begin(), rows.end(), [](const ObservableRow& a, const ObservableRow& b) {
                if (a.theta != b.theta) return a.theta < b.theta;
                if (a.z != b.z) return a.z < b.z;
                return a.eps > b.eps;
            });
            for (const auto& r : rows)
                w.row({std::to_string(r.theta), r.theta_id, io::fmt(r.z), io::fmt(r.eps), io::fmt(r.mean),
                       io::fmt(r.stderr_), io::fmt(r.reference), io::fmt(r.reference_stderr),
                       io::fmt(std::abs(r.mean - r.reference))});
        }
    }
    {
        io::CsvWriter w(files[1], {"z", "theta", "eps", "variance", "boot_sd", "ci_lo", "ci_hi"});
        if (study != nullptr) {
            auto rows = study->rows;
            std::stable_sort(rows.begin(), rows.end(), [](const ObservableRow& a, const ObservableRow& b) {
                if (a.z != b.z) return a.z < b.z;
                if (a.theta != b.theta) return a.theta < b.theta;
                return a.eps > b.eps;
            });
            for (const auto& r : rows)
                w.row({io::fmt(r.z), std::to_string(r.theta), io::fmt(r.eps), io::fmt(r.variance),
                       io::fmt(r.variance_boot.sd), io::fmt(r.variance_boot.ci_lo), io::fmt(r.variance_boot.ci_hi)});
        }
    }
    {
        io::CsvWriter w(files[2], {"eps", "random_medium", "x", "mean_abs_psi"});
        if (reversal != nullptr)
            for (const auto& r : reversal->reports)
                for (std::size_t i = 0; i < r.x.size(); ++i)
                    w.row({io::fmt(r.eps), r.random_medium ? "1" : "0", io::fmt(r.x[i]), io::fmt(r.mean_profile[i])});
    }
    return files;
}

}  // namespace parawave::cli
