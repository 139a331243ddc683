#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace slowlight::io {

struct TwoColumn {
    std::vector<double> x;
    std::vector<double> y;
};

// Comma-separated (x, y) rows. Blank lines and lines starting with '#' are
// skipped; a first non-numeric row is taken as a header. Any later malformed
// row raises ParseError with its 1-based line number. An empty file raises
// DataError.
TwoColumn read_two_column_csv(const std::filesystem::path& path);
TwoColumn parse_two_column_csv(const std::string& text, const std::string& source);

// %.12g, the precision used for every emitted number.
std::string format_number(double v);
// Round-trip through format_number so JSON output is stable to 12 digits.
double round12(double v);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// Rows of already formatted cells joined with commas, header first.
std::string csv_document(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows);

}  // namespace slowlight::io
