#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dcw {

/// Splits one CSV line on commas. No quoting: none of the file formats used
/// here embed commas in fields. Fields are trimmed of surrounding whitespace.
std::vector<std::string> split_csv(std::string_view line);

/// Reads a whole text file into lines (LF or CRLF). Throws DataError if the
/// file cannot be opened.
std::vector<std::string> read_lines(const std::string& path);

/// Strict double parser: the entire field must be consumed. Throws ParseError
/// with the supplied line number otherwise.
double parse_double_field(std::string_view field, long line);

/// Strict non-negative integer parser, same error contract.
long parse_long_field(std::string_view field, long line);

/// Shortest round-trip decimal representation (up to 17 significant digits).
/// Used everywhere a double is persisted so that reload is bit-faithful.
std::string fmt_double(double v);

/// Writes a file atomically enough for our purposes (truncate + write);
/// throws DataError when the file cannot be created.
void write_file(const std::string& path, const std::string& content);

/// Creates a directory (and parents) if missing; throws DataError on failure.
void ensure_dir(const std::string& path);

/// FNV-1a 64-bit hash, hex-encoded. Stable across runs and platforms; used
/// for the run manifest's config fingerprint.
std::string fnv1a_hex(std::string_view data);

}  // namespace dcw
