#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace emo2vec {

// File-level failures (open, read, write).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input content; message carries "<path>:<line>:" where known.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad command line; the CLI turns this into a usage message and exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::vector<std::string> split(std::string_view s, char sep);
std::string lowercase_ascii(std::string_view s);
bool valid_utf8(std::string_view s);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// SHA-1 of the git blob encoding ("blob <size>\0<content>"), hex encoded.
// Used for input fingerprints in run manifests.
std::string git_blob_sha1(std::string_view content);

// 17 significant digits: enough for an exact double round trip.
std::string format_double(double v);

}  // namespace emo2vec
