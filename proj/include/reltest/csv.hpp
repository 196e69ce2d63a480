#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace reltest {

inline constexpr std::string_view kToolVersion = "reltest 0.1.0";

/// Written as the first line of every CSV artifact:
///   # tool=<version> seed=<seed> config=<digest>
struct CsvMetadata {
    std::uint64_t seed = 0;
    std::string config_digest = "none";
    std::string note;
};

/// 6 significant digits, '.' separator, independent of the C++ locale.
std::string format_number(double v);

/// FNV-1a 64-bit digest, as 16 hex digits.
std::string digest(std::string_view text);

/// Accumulates rows in memory and writes the file in one go.
class CsvWriter {
public:
    CsvWriter(CsvMetadata metadata, std::vector<std::string> header);

    void add_row(std::vector<std::string> cells);
    std::string str() const;

    /// Throws IoError naming the path on failure.
    void write(const std::filesystem::path& path) const;

private:
    CsvMetadata metadata_;
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

} // namespace reltest
