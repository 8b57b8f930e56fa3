#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hbbm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitStrict = 2;
inline constexpr int kExitUsage = 64;

// Bad command line or config file: unknown key, missing required value,
// malformed number, out-of-range value.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Invocation {
  std::string subcommand;
  // Resolved flat config: defaults, then the --config file, then flags.
  nlohmann::ordered_json config;
  std::filesystem::path out_dir;
  int threads = 0;
  bool strict = false;
  bool seed_drawn = false;  // --seed random
  bool help = false;        // --help was given; `help_text` holds the usage
  std::string help_text;
};

const std::vector<std::string>& subcommands();

// Arguments exclude the program name. Throws UsageError.
Invocation parse(const std::vector<std::string>& args);

// Writes the artifacts for `inv` into its output directory and returns the
// exit status. Progress and warnings go to `log`.
int execute(const Invocation& inv, std::ostream& log);

// parse + execute with exit-status mapping and messages on stderr.
int main(int argc, char** argv);

}  // namespace hbbm::cli
