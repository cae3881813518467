#pragma once

#include <string>
#include <vector>

namespace multilink {

// RFC-4180 CSV: quoted fields may contain commas, doubled quotes and
// newlines; records end at CR, LF or CRLF outside quotes.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);
std::vector<std::vector<std::string>> read_csv(const std::string& path);

std::string csv_escape(const std::string& field);
std::string format_csv_row(const std::vector<std::string>& row);
void write_csv(const std::string& path,
               const std::vector<std::vector<std::string>>& rows);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace multilink
