#pragma once

#include <map>
#include <string>
#include <vector>

namespace emo2vec::cli {

// A parsed command line: one verb plus resolved `--key value` options
// (explicit flags win over --config entries, which win over built-in
// defaults).
struct Command {
  std::string verb;
  std::map<std::string, std::string> options;

  bool has(const std::string& key) const { return options.count(key) > 0; }
  const std::string& require(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback = "") const;
};

// Throws UsageError on unknown verbs, unknown or valueless flags, and
// missing required options. `args` excludes the program name.
Command parse_args(const std::vector<std::string>& args);

// Dispatches a parsed command. Returns 0 on success, 1 on runtime errors,
// 2 on usage errors discovered while interpreting option values.
int run(const Command& command);

// parse + run; the C API entry point wraps this.
int cli_main(int argc, const char* const* argv);

std::string usage_text();

}  // namespace emo2vec::cli
