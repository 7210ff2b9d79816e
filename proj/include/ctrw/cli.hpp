#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "ctrw/params.hpp"

namespace ctrw {

// Flat, sectioned key-value configuration:
//
//   # comment
//   [problem]
//   name = cubic_oscillator
//   [scheme]
//   id = c1d
//   h = 0.25
//
// Keys are stored as "section.key". Top-level shorthands (problem, scheme, h,
// T, seed, paths, out, study) map to their canonical keys.
struct RunConfig {
  std::string subcommand;
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) != 0; }
  std::string get(const std::string& key, const std::string& fallback = "") const;
  // Entries of one section with the prefix stripped.
  Params section(const std::string& name) const;
  // Resolved config in canonical sectioned form.
  std::string echo() const;
};

std::vector<std::string> subcommands();

// Canonical key for a top-level shorthand or "section.key" form.
std::string canonical_key(const std::string& key);

// Parses config text; throws ParseError with the line number on malformed input.
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");
RunConfig parse_config_file(const std::string& path);

// Applies a "key=value" override; the later value wins.
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

// Applies defaults and checks that every name resolves; throws ValidationError
// naming the offending field.
void validate_config(RunConfig& cfg);

// Runs the subcommand and writes outputs plus config.txt under output.dir.
// Returns 0 or throws ctrw::Error.
int dispatch(const RunConfig& cfg, std::ostream& log);

// Full command-line entry point: parses flags, dispatches, maps errors onto
// exit codes and prints one "error <category> <kind>: message" line.
int run_cli(int argc, char** argv);

}  // namespace ctrw
