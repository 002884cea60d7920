#include "ropocop/trace_io.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace ropocop {

namespace {

using json = nlohmann::json;

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  throw TraceError(TraceErrc::malformed, what, line);
}

const json& field(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    malformed(line, std::string("missing field \"") + key + "\"");
  }
  return *it;
}

std::string string_field(const json& obj, const char* key, std::size_t line) {
  const json& v = field(obj, key, line);
  if (!v.is_string()) {
    malformed(line, std::string("field \"") + key + "\" must be a string");
  }
  return v.get<std::string>();
}

Address address_field(const json& obj, const char* key, std::size_t line) {
  const json& v = field(obj, key, line);
  if (!v.is_string()) {
    malformed(line, std::string("field \"") + key + "\" must be a hex string");
  }
  Address a;
  try {
    a = parse_hex(v.get_ref<const std::string&>());
  } catch (const std::invalid_argument& e) {
    malformed(line, e.what());
  }
  if (a.value >= kAddressSpaceEnd) {
    throw TraceError(TraceErrc::validation, std::string("field \"") + key + "\" address ≥ 2^32", line);
  }
  return a;
}

std::uint32_t instr_count_field(const json& obj, std::size_t line) {
  const json& v = field(obj, "n", line);
  if (!v.is_number_integer()) {
    malformed(line, "field \"n\" must be an integer");
  }
  if (v.is_number_unsigned()) {
    auto n = v.get<std::uint64_t>();
    if (n == 0) {
      throw TraceError(TraceErrc::validation, "instr_count must be ≥ 1", line);
    }
    if (n > std::numeric_limits<std::uint32_t>::max()) {
      throw TraceError(TraceErrc::validation, "instr_count out of range", line);
    }
    return static_cast<std::uint32_t>(n);
  }
  if (v.get<std::int64_t>() < 1) {
    throw TraceError(TraceErrc::validation, "instr_count must be ≥ 1", line);
  }
  return static_cast<std::uint32_t>(v.get<std::int64_t>());
}

TraceEvent decode_line(const json& obj, std::size_t line) {
  if (!obj.is_object()) {
    malformed(line, "expected a JSON object");
  }
  const std::string ev = string_field(obj, "ev", line);
  if (ev == "block") {
    BlockExec b;
    b.start = address_field(obj, "start", line);
    b.instr_count = instr_count_field(obj, line);
    const std::string term = string_field(obj, "term", line);
    auto t = terminator_from_string(term);
    if (!t) {
      malformed(line, "unknown terminator \"" + term + "\"");
    }
    b.terminator = *t;
    b.target = address_field(obj, "target", line);
    return b;
  }
  if (ev == "img+") {
    ImageLoad l;
    l.name = string_field(obj, "name", line);
    l.start = address_field(obj, "start", line);
    l.end = address_field(obj, "end", line);
    if (!(l.start < l.end)) {
      throw TraceError(TraceErrc::validation, "image start must be below image end", line);
    }
    return l;
  }
  if (ev == "img-") {
    ImageUnload u;
    u.name = string_field(obj, "name", line);
    u.start = address_field(obj, "start", line);
    return u;
  }
  if (ev == "alloc") {
    return AllocCall{};
  }
  if (ev == "usage") {
    return UsageReport{address_field(obj, "top", line)};
  }
  malformed(line, "unknown event kind \"" + ev + "\"");
}

bool blank(std::string_view s) {
  return s.find_first_not_of(" \t\r") == std::string_view::npos;
}

void append_quoted(std::string& out, std::string_view s) {
  out += json(s).dump();
}

} // namespace

TraceReader::TraceReader(std::istream& in) : in_(in) {}

void TraceReader::read_header() {
  header_done_ = true;
  if (!std::getline(in_, buf_)) {
    throw TraceError(TraceErrc::schema, "missing trace header", 1);
  }
  line_ = 1;
  if (!buf_.empty() && buf_.back() == '\r') buf_.pop_back();
  json header = json::parse(buf_, nullptr, false);
  if (header.is_discarded() || !header.is_object()) {
    throw TraceError(TraceErrc::schema, "first line is not a trace header", 1);
  }
  auto schema = header.find("schema");
  if (schema == header.end() || !schema->is_string() || schema->get<std::string>() != "ropocop-trace") {
    throw TraceError(TraceErrc::schema, "not a ropocop-trace file", 1);
  }
  auto version = header.find("version");
  if (version == header.end() || !version->is_number_integer() ||
      version->get<std::int64_t>() != kTraceSchemaVersion) {
    throw TraceError(TraceErrc::schema, "unsupported trace schema version", 1);
  }
}

std::optional<TraceEvent> TraceReader::next() {
  if (!header_done_) {
    read_header();
  }
  while (std::getline(in_, buf_)) {
    ++line_;
    if (!buf_.empty() && buf_.back() == '\r') buf_.pop_back();
    if (blank(buf_)) {
      continue;
    }
    json obj = json::parse(buf_, nullptr, false);
    if (obj.is_discarded()) {
      malformed(line_, "invalid JSON");
    }
    TraceEvent ev = decode_line(obj, line_);
    ++events_;
    return ev;
  }
  if (in_.bad()) {
    throw TraceError(TraceErrc::malformed, "read error", line_);
  }
  return std::nullopt;
}

TraceWriter::TraceWriter(std::ostream& out) : out_(out) {
  out_ << kTraceHeader << '\n';
}

void TraceWriter::write(const TraceEvent& ev) {
  if (auto problem = check_invariants(ev)) {
    throw TraceError(TraceErrc::validation, *problem, std::nullopt, events_);
  }
  line_.clear();
  append_event(line_, ev);
  line_ += '\n';
  out_.write(line_.data(), static_cast<std::streamsize>(line_.size()));
  ++events_;
}

void append_event(std::string& out, const TraceEvent& ev) {
  struct Visitor {
    std::string& out;
    void operator()(const BlockExec& b) const {
      out += R"({"ev":"block","start":")";
      out += to_hex(b.start);
      out += R"(","n":)";
      out += std::to_string(b.instr_count);
      out += R"(,"term":")";
      out += to_string(b.terminator);
      out += R"(","target":")";
      out += to_hex(b.target);
      out += "\"}";
    }
    void operator()(const ImageLoad& l) const {
      out += R"({"ev":"img+","name":)";
      append_quoted(out, l.name);
      out += R"(,"start":")";
      out += to_hex(l.start);
      out += R"(","end":")";
      out += to_hex(l.end);
      out += "\"}";
    }
    void operator()(const ImageUnload& u) const {
      out += R"({"ev":"img-","name":)";
      append_quoted(out, u.name);
      out += R"(,"start":")";
      out += to_hex(u.start);
      out += "\"}";
    }
    void operator()(const AllocCall&) const { out += R"({"ev":"alloc"})"; }
    void operator()(const UsageReport& r) const {
      out += R"({"ev":"usage","top":")";
      out += to_hex(r.top);
      out += "\"}";
    }
  };
  std::visit(Visitor{out}, ev);
}

std::string encode_event(const TraceEvent& ev) {
  std::string out;
  append_event(out, ev);
  return out;
}

std::string encode_trace(std::span<const TraceEvent> events) {
  std::ostringstream out;
  TraceWriter writer(out);
  for (const auto& ev : events) {
    writer.write(ev);
  }
  return std::move(out).str();
}

std::vector<TraceEvent> decode_trace(std::string_view text) {
  std::istringstream in{std::string(text)};
  TraceReader reader(in);
  std::vector<TraceEvent> events;
  while (auto ev = reader.next()) {
    events.push_back(std::move(*ev));
  }
  return events;
}

std::vector<TraceEvent> read_trace_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open trace '" + path + "'");
  }
  TraceReader reader(in);
  std::vector<TraceEvent> events;
  while (auto ev = reader.next()) {
    events.push_back(std::move(*ev));
  }
  return events;
}

void write_trace_file(const std::string& path, std::span<const TraceEvent> events) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write trace '" + path + "'");
  }
  TraceWriter writer(out);
  for (const auto& ev : events) {
    writer.write(ev);
  }
  out.flush();
  if (!out) {
    throw std::runtime_error("error writing trace '" + path + "'");
  }
}

} // namespace ropocop
