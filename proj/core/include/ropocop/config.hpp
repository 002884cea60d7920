#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ropocop/anticra.hpp"
#include "ropocop/depplus.hpp"
#include "ropocop/ratio.hpp"

namespace ropocop {

class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string key, const std::string& message);

  /// "section.key" of the offending entry, empty for syntax errors.
  const std::string& key() const { return key_; }

private:
  std::string key_;
};

/// Minimal TOML-style document: `[section]` headers, `key = value` lines,
/// `#` comments. Values are bare tokens or double-quoted strings.
class ConfigDocument {
public:
  struct Entry {
    std::string key;
    std::string value;
    std::size_t line = 0;
  };

  static ConfigDocument parse(std::string_view text);
  static ConfigDocument load(const std::string& path);

  bool has_section(std::string_view section) const;
  std::vector<std::string> sections() const;
  const std::vector<Entry>& entries(std::string_view section) const;

  std::optional<std::string> get(std::string_view section, std::string_view key) const;

  /// Throws ConfigError if `section` holds a key outside `allowed`.
  void require_known_keys(std::string_view section, std::initializer_list<std::string_view> allowed) const;

private:
  std::map<std::string, std::vector<Entry>, std::less<>> sections_;
};

// Typed accessors; each throws ConfigError naming "section.key" on bad values.
std::optional<std::uint64_t> get_uint(const ConfigDocument& doc, std::string_view section, std::string_view key);
std::optional<Ratio> get_ratio(const ConfigDocument& doc, std::string_view section, std::string_view key);

/// Detector settings consumed by `analyze` and `eval`.
struct ToolConfig {
  anticra::Config anticra;
  depplus::Config depplus;
};

/// Missing sections/keys keep their defaults. Unknown keys in [anticra] or
/// [depplus] are errors; other sections are ignored.
ToolConfig tool_config_from(const ConfigDocument& doc);
ToolConfig load_tool_config(const std::string& path);

std::string render_anticra_section(const anticra::Config& cfg);
std::string render_depplus_section(const depplus::Config& cfg);
std::string render_tool_config(const ToolConfig& cfg);

/// Quotes a string value for the config format.
std::string quote_config_string(std::string_view s);

} // namespace ropocop
