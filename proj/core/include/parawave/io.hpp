#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace parawave::io {

/// Shortest round-trip decimal form ("%.17g"), locale independent.
std::string fmt(double v);

/// Comma-separated writer with a fixed header; throws IoError naming the path.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header, bool append = false);
    void row(const std::vector<std::string>& cells);
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t columns_;
};

/// One line of a reference-solver observable stream.
struct SeriesPoint {
    double z = 0.0;
    double mean = 0.0;
    double stderr_ = 0.0;
};

/// Appends (z, mean, stderr, kernel, seed[, tensor]) rows, writing the
/// header when the file is new.
void append_series(const std::filesystem::path& path, const std::vector<SeriesPoint>& pts, const std::string& kernel,
                   std::uint64_t seed, const std::string& tensor = {});

/// Parses a JSON file; a missing file is a ConfigurationError naming the path.
nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// 64-bit FNV-1a over a byte string / file contents.
std::uint64_t fnv1a(const std::string& bytes);
std::uint64_t fnv1a_file(const std::filesystem::path& path);
std::string hex64(std::uint64_t v);

/// Creates the directory (and parents); throws IoError when it is not writable.
void ensure_dir(const std::filesystem::path& dir);

}  // namespace parawave::io
