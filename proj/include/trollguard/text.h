#ifndef TROLLGUARD_TEXT_H_
#define TROLLGUARD_TEXT_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace trollguard {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool istarts_with(std::string_view s, std::string_view prefix);
bool icontains(std::string_view haystack, std::string_view needle);

// Number of Unicode scalar values in a UTF-8 string. Continuation bytes are
// not counted, so malformed input degrades to a byte-ish count.
std::size_t utf8_length(std::string_view s);

std::vector<std::string> split_lines(std::string_view s);

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, std::string_view contents);

}  // namespace trollguard

#endif  // TROLLGUARD_TEXT_H_
