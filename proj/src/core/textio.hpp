#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace roadcell {

// Small strict parsing helpers shared by the CSV readers. All of them treat
// trailing garbage as an error; messages name the offending text.

std::string trim(const std::string& s);
std::vector<std::string> split_csv_line(const std::string& line);

bool parse_int64(const std::string& s, std::int64_t* out);
bool parse_double(const std::string& s, double* out);

// "YYYY-MM-DD[T ]HH:MM[:SS]"; seconds must be 00 when present.
bool parse_iso_timestamp(const std::string& s, int* year, int* month, int* day, int* hour,
                         int* minute);

// %.10g keeps every decimal the writers emit, so write/parse/write is stable.
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace roadcell
