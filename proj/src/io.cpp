#include "slowlight/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "slowlight/errors.hpp"

namespace slowlight::io {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

TwoColumn parse_two_column_csv(const std::string& text, const std::string& source) {
    TwoColumn out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool seen_row = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto comma = t.find(',');
        double x = 0.0;
        double y = 0.0;
        const bool ok = comma != std::string::npos && t.find(',', comma + 1) == std::string::npos &&
                        parse_double(trim(std::string_view(t).substr(0, comma)), x) &&
                        parse_double(trim(std::string_view(t).substr(comma + 1)), y);
        if (!ok) {
            if (!seen_row && out.x.empty()) {
                seen_row = true;  // header
                continue;
            }
            throw ParseError(source, line_no, "expected two numeric comma-separated columns, got '" + t + "'");
        }
        seen_row = true;
        out.x.push_back(x);
        out.y.push_back(y);
    }
    if (out.x.empty()) throw DataError(source + ": no data rows");
    return out;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError(path.string() + ": cannot open file");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

TwoColumn read_two_column_csv(const std::filesystem::path& path) {
    return parse_two_column_csv(read_text(path), path.string());
}

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

double round12(double v) {
    if (!std::isfinite(v)) return v;
    return std::stod(format_number(v));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError(path.string() + ": cannot write file");
    f << text;
}

std::string csv_document(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    auto emit = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    emit(header);
    for (const auto& r : rows) emit(r);
    return out;
}

}  // namespace slowlight::io
