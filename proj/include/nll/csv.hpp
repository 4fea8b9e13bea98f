#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nll {

/// Malformed CSV input; carries the 1-based line number.
class CsvError : public std::runtime_error {
public:
    CsvError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Splits on commas. No quoting: every field this project writes is numeric
/// or a bare identifier.
std::vector<std::string> split_csv_line(std::string_view line);

/// Parses a full-length double; throws CsvError otherwise.
double parse_csv_double(std::string_view field, std::size_t line);
long long parse_csv_int(std::string_view field, std::size_t line);

}  // namespace nll
