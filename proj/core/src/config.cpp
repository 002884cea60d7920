#include "ropocop/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace ropocop {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string line_prefix(std::size_t line) {
  return "line " + std::to_string(line) + ": ";
}

// Parses the value part of `key = value`, stripping a trailing comment.
std::string parse_value(std::string_view raw, std::size_t line, const std::string& key) {
  raw = trim(raw);
  if (raw.empty()) {
    throw ConfigError(key, line_prefix(line) + "missing value");
  }
  if (raw.front() != '"') {
    if (auto hash = raw.find('#'); hash != std::string_view::npos) {
      raw = trim(raw.substr(0, hash));
    }
    if (raw.empty() || raw.find('"') != std::string_view::npos) {
      throw ConfigError(key, line_prefix(line) + "invalid value");
    }
    return std::string(raw);
  }
  std::string out;
  std::size_t i = 1;
  for (; i < raw.size(); ++i) {
    char c = raw[i];
    if (c == '"') break;
    if (c == '\\') {
      if (++i >= raw.size()) break;
      switch (raw[i]) {
      case 'n':
        out += '\n';
        break;
      case 't':
        out += '\t';
        break;
      case '"':
        out += '"';
        break;
      case '\\':
        out += '\\';
        break;
      default:
        throw ConfigError(key, line_prefix(line) + "unsupported escape");
      }
      continue;
    }
    out += c;
  }
  if (i >= raw.size()) {
    throw ConfigError(key, line_prefix(line) + "unterminated string");
  }
  std::string_view rest = trim(raw.substr(i + 1));
  if (!rest.empty() && rest.front() != '#') {
    throw ConfigError(key, line_prefix(line) + "trailing characters after string");
  }
  return out;
}

const std::vector<ConfigDocument::Entry> kNoEntries;

} // namespace

ConfigError::ConfigError(std::string key, const std::string& message)
    : std::runtime_error(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}

ConfigDocument ConfigDocument::parse(std::string_view text) {
  ConfigDocument doc;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;

    if (line.empty() || line.front() == '#') {
      continue;
    }
    if (line.front() == '[') {
      auto close = line.find(']');
      std::string_view after = close == std::string_view::npos ? "" : trim(line.substr(close + 1));
      if (close == std::string_view::npos || (!after.empty() && after.front() != '#')) {
        throw ConfigError("", line_prefix(line_no) + "malformed section header");
      }
      section = std::string(trim(line.substr(1, close - 1)));
      if (section.empty()) {
        throw ConfigError("", line_prefix(line_no) + "empty section name");
      }
      doc.sections_[section];
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("", line_prefix(line_no) + "expected key = value");
    }
    std::string key(trim(line.substr(0, eq)));
    if (key.empty()) {
      throw ConfigError("", line_prefix(line_no) + "empty key");
    }
    const std::string qualified = section.empty() ? key : section + "." + key;
    if (section.empty()) {
      throw ConfigError(qualified, line_prefix(line_no) + "key outside of any section");
    }
    auto& entries = doc.sections_[section];
    if (std::any_of(entries.begin(), entries.end(), [&](const Entry& e) { return e.key == key; })) {
      throw ConfigError(qualified, line_prefix(line_no) + "duplicate key");
    }
    entries.push_back(Entry{key, parse_value(line.substr(eq + 1), line_no, qualified), line_no});
  }
  return doc;
}

ConfigDocument ConfigDocument::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("", "cannot open config '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

bool ConfigDocument::has_section(std::string_view section) const {
  return sections_.find(section) != sections_.end();
}

std::vector<std::string> ConfigDocument::sections() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : sections_) out.push_back(name);
  return out;
}

const std::vector<ConfigDocument::Entry>& ConfigDocument::entries(std::string_view section) const {
  auto it = sections_.find(section);
  return it == sections_.end() ? kNoEntries : it->second;
}

std::optional<std::string> ConfigDocument::get(std::string_view section, std::string_view key) const {
  for (const Entry& e : entries(section)) {
    if (e.key == key) return e.value;
  }
  return std::nullopt;
}

void ConfigDocument::require_known_keys(std::string_view section,
                                        std::initializer_list<std::string_view> allowed) const {
  for (const Entry& e : entries(section)) {
    if (std::find(allowed.begin(), allowed.end(), e.key) == allowed.end()) {
      throw ConfigError(std::string(section) + "." + e.key, line_prefix(e.line) + "unknown key");
    }
  }
}

std::optional<std::uint64_t> get_uint(const ConfigDocument& doc, std::string_view section, std::string_view key) {
  auto raw = doc.get(section, key);
  if (!raw) return std::nullopt;
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(raw->data(), raw->data() + raw->size(), v);
  if (ec != std::errc() || ptr != raw->data() + raw->size()) {
    throw ConfigError(std::string(section) + "." + std::string(key), "expected a non-negative integer, got '" + *raw + "'");
  }
  return v;
}

std::optional<Ratio> get_ratio(const ConfigDocument& doc, std::string_view section, std::string_view key) {
  auto raw = doc.get(section, key);
  if (!raw) return std::nullopt;
  try {
    return Ratio::parse(*raw);
  } catch (const std::exception&) {
    throw ConfigError(std::string(section) + "." + std::string(key), "expected a decimal, got '" + *raw + "'");
  }
}

namespace {

std::uint32_t narrow_u32(std::uint64_t v, std::string_view section, std::string_view key) {
  if (v > 0xffffffffULL) {
    throw ConfigError(std::string(section) + "." + std::string(key), "value out of range");
  }
  return static_cast<std::uint32_t>(v);
}

void read_u32(const ConfigDocument& doc, std::string_view section, std::string_view key, std::uint32_t& out) {
  if (auto v = get_uint(doc, section, key)) out = narrow_u32(*v, section, key);
}

} // namespace

ToolConfig tool_config_from(const ConfigDocument& doc) {
  ToolConfig cfg;
  doc.require_known_keys("anticra", {"window", "warmup", "band1_max_count", "band1_max_avg", "band2_max_count",
                                     "band2_max_avg", "hard_cap"});
  read_u32(doc, "anticra", "window", cfg.anticra.window);
  read_u32(doc, "anticra", "warmup", cfg.anticra.warmup);
  read_u32(doc, "anticra", "band1_max_count", cfg.anticra.band1_max_count);
  read_u32(doc, "anticra", "band2_max_count", cfg.anticra.band2_max_count);
  read_u32(doc, "anticra", "hard_cap", cfg.anticra.hard_cap);
  if (auto r = get_ratio(doc, "anticra", "band1_max_avg")) cfg.anticra.band1_max_avg = *r;
  if (auto r = get_ratio(doc, "anticra", "band2_max_avg")) cfg.anticra.band2_max_avg = *r;
  try {
    cfg.anticra.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("anticra", e.what());
  }

  doc.require_known_keys("depplus", {"mode", "probe_period", "safety_factor"});
  if (auto m = doc.get("depplus", "mode")) {
    auto mode = depplus::mode_from_string(*m);
    if (!mode) {
      throw ConfigError("depplus.mode", "expected \"full\" or \"watermark\", got '" + *m + "'");
    }
    cfg.depplus.mode = *mode;
  }
  read_u32(doc, "depplus", "probe_period", cfg.depplus.probe_period);
  if (auto r = get_ratio(doc, "depplus", "safety_factor")) cfg.depplus.safety_factor = *r;
  try {
    cfg.depplus.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("depplus.probe_period", e.what());
  }
  return cfg;
}

ToolConfig load_tool_config(const std::string& path) {
  return tool_config_from(ConfigDocument::load(path));
}

std::string quote_config_string(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
    case '"':
      out += "\\\"";
      break;
    case '\\':
      out += "\\\\";
      break;
    case '\n':
      out += "\\n";
      break;
    case '\t':
      out += "\\t";
      break;
    default:
      out += c;
    }
  }
  out += '"';
  return out;
}

std::string render_anticra_section(const anticra::Config& cfg) {
  std::ostringstream out;
  out << "[anticra]\n"
      << "window = " << cfg.window << "\n"
      << "warmup = " << cfg.warmup << "\n"
      << "band1_max_count = " << cfg.band1_max_count << "\n"
      << "band1_max_avg = " << quote_config_string(cfg.band1_max_avg.to_string()) << "\n"
      << "band2_max_count = " << cfg.band2_max_count << "\n"
      << "band2_max_avg = " << quote_config_string(cfg.band2_max_avg.to_string()) << "\n"
      << "hard_cap = " << cfg.hard_cap << "\n";
  return out.str();
}

std::string render_depplus_section(const depplus::Config& cfg) {
  std::ostringstream out;
  out << "[depplus]\n"
      << "mode = " << quote_config_string(depplus::to_string(cfg.mode)) << "\n"
      << "probe_period = " << cfg.probe_period << "\n"
      << "safety_factor = " << quote_config_string(cfg.safety_factor.to_string()) << "\n";
  return out.str();
}

std::string render_tool_config(const ToolConfig& cfg) {
  return render_anticra_section(cfg.anticra) + "\n" + render_depplus_section(cfg.depplus);
}

} // namespace ropocop
