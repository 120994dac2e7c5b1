#ifndef NONCANON_RUN_CONFIG_HPP
#define NONCANON_RUN_CONFIG_HPP

#include <json.hpp>
#include <optional>
#include <stdexcept>
#include <string>

namespace noncanon {

// Configuration problems: unknown/missing/mistyped keys, value range
// violations. Mapped to exit code 2 by the command-line tool.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

const char* tool_version();

// Read and parse a JSON config file. Throws ConfigError on I/O or syntax
// problems (message carries the parser diagnostics).
nlohmann::json load_config(const std::string& path);

// Schema check plus a derived-size report (mode counts, grid lengths,
// enumeration sizes versus caps). No computation, no artifact writes.
std::string validate_config(const nlohmann::json& config);

// Execute the configured experiment: writes the data artifacts plus
// run_manifest.json into the output directory and returns the manifest.
// CSV bodies are byte-identical for identical (config, seed) regardless of
// worker count.
nlohmann::json run(const nlohmann::json& config, const RunOverrides& overrides);

}  // namespace noncanon

#endif
