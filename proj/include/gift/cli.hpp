#ifndef GIFT_CLI_HPP
#define GIFT_CLI_HPP

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "gift/eval.hpp"
#include "gift/model.hpp"
#include "gift/synth.hpp"

namespace gift {

/// Everything a config file can set. Keys are flat; see config_keys().
struct CliConfig {
  SynthConfig synth;
  TrainConfig train;
  MatchConfig match;
  std::string precision = "double";  // "float" or "double"
};

/// Every accepted key, sorted.
std::vector<std::string> config_keys();

/// Throws ConfigError for an unknown key or a malformed value.
void apply_setting(CliConfig& cfg, std::string_view key, std::string_view value);

/// `key = value` lines; '#' starts a comment; blank lines are ignored.
CliConfig parse_config_text(std::string_view text, CliConfig base = {});

/// Every key with its current value, in config_keys() order.
std::string config_text(const CliConfig& cfg);

/// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gift

#endif  // GIFT_CLI_HPP
