#include "reltest/csv.hpp"
#include "reltest/errors.hpp"

#include <fstream>

#include <fmt/format.h>

namespace reltest {

std::string format_number(double v) {
    if (v == 0.0) return "0"; // also folds -0
    return fmt::format("{:.6g}", v);
}

std::string digest(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

CsvWriter::CsvWriter(CsvMetadata metadata, std::vector<std::string> header)
    : metadata_(std::move(metadata)), header_(std::move(header)) {}

void CsvWriter::add_row(std::vector<std::string> cells) {
    if (cells.size() != header_.size()) {
        throw ValidationError("csv row", fmt::format("has {} cells, header has {}", cells.size(), header_.size()));
    }
    rows_.push_back(std::move(cells));
}

std::string CsvWriter::str() const {
    std::string out = fmt::format("# tool={} seed={} config={}", kToolVersion, metadata_.seed, metadata_.config_digest);
    if (!metadata_.note.empty()) out += " " + metadata_.note;
    out += '\n';
    auto append_line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t k = 0; k < cells.size(); ++k) {
            if (k) out += ',';
            out += cells[k];
        }
        out += '\n';
    };
    append_line(header_);
    for (const auto& row : rows_) append_line(row);
    return out;
}

void CsvWriter::write(const std::filesystem::path& path) const {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError(path.string(), "cannot open for writing");
    const auto text = str();
    file.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!file) throw IoError(path.string(), "write failed");
}

} // namespace reltest
