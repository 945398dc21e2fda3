#pragma once

#include <cstdint>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cheaptalk::cli {

enum ExitCode : int {
  kSuccess = 0,
  kCheckFailed = 1,
  kInvalidConfig = 2,
  kNumericalFailure = 3,
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A rectangular table written with --csv.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct CommandOutcome {
  int exit_code = kSuccess;
  nlohmann::json result;
  std::optional<CsvTable> csv;
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"solve", "verify", "classify", "rd", "transform",
                                                 "sweep"};
  return names;
}

// Defaults filled in and every field checked; throws ConfigError.
nlohmann::json normalize_config(const nlohmann::json& raw, const std::string& command);

// Sets a leaf addressed by a dotted path, creating intermediate objects.
void set_dotted(nlohmann::json& config, const std::string& path, const nlohmann::json& value);
// Parses an override value: JSON when it parses, a plain string otherwise.
nlohmann::json parse_override_value(const std::string& text);

// FNV-1a over the canonical serialization.
std::string config_hash(const nlohmann::json& config);

// Runs one command on a normalized config.
CommandOutcome execute(const nlohmann::json& config);

void write_csv(const CsvTable& table, const std::string& path);

// Full command line entry point.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace cheaptalk::cli
