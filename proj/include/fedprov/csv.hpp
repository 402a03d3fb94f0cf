#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "fedprov/schema.hpp"

namespace fedprov {

/// The 16-column cohort header: the 14 features, then diabetes and province.
std::string csv_header();

/// Numbers are written in shortest round-trip decimal form; missing values are
/// empty fields; binaries are 0/1.
void write_csv(const Dataset& ds, std::ostream& out);
void write_csv(const Dataset& ds, const std::filesystem::path& path);

/// Throws ValidationError with the line number for malformed rows, and with the
/// expected and found headers when the header does not match.
Dataset read_csv(std::istream& in, std::string provenance = "csv");
Dataset read_csv(const std::filesystem::path& path);

/// Shortest decimal that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace fedprov
