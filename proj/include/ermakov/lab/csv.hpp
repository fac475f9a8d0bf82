#pragma once

#include "ermakov/errors.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace ermakov::lab {

inline constexpr int kCsvSchemaVersion = 1;

/// Full-precision (17 significant digits) CSV. The first line is a comment
/// naming the schema kind/version and the units, the second the column header.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::string& kind, std::vector<std::string> columns,
              const std::string& units)
        : out_(path), columns_(columns.size()) {
        if (!out_) throw ConfigurationError("cannot write '" + path.string() + "'");
        out_ << "# ermakov-lab " << kind << " v" << kCsvSchemaVersion << "; units: " << units << '\n';
        for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
        out_ << '\n';
    }

    void row(std::span<const double> values) {
        if (values.size() != columns_) throw ShapeError("CsvWriter: row width does not match header");
        char buf[32];
        for (std::size_t i = 0; i < values.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", values[i]);
            out_ << (i ? "," : "") << buf;
        }
        out_ << '\n';
    }

    void row(std::initializer_list<double> values) { row(std::span<const double>(values.begin(), values.size())); }

private:
    std::ofstream out_;
    std::size_t columns_;
};

} // namespace ermakov::lab
