#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ropocop/trace.hpp"

namespace ropocop {

/// First line of every version 1 trace file (`.rtrc`).
inline constexpr std::string_view kTraceHeader = R"({"schema":"ropocop-trace","version":1})";
inline constexpr int kTraceSchemaVersion = 1;

/// Pull-based decoder for JSON-Lines traces. Holds one line at a time.
class TraceReader {
public:
  explicit TraceReader(std::istream& in);

  /// Next event, or nullopt at end of stream. Throws TraceError.
  std::optional<TraceEvent> next();

  /// 1-based number of the last line consumed (the header is line 1).
  std::size_t line_number() const { return line_; }
  std::size_t events_read() const { return events_; }

private:
  void read_header();

  std::istream& in_;
  std::string buf_;
  std::size_t line_ = 0;
  std::size_t events_ = 0;
  bool header_done_ = false;
};

class TraceWriter {
public:
  /// Writes the header immediately.
  explicit TraceWriter(std::ostream& out);

  /// Validates and appends one event. Throws TraceError naming the event index.
  void write(const TraceEvent& ev);

  std::size_t events_written() const { return events_; }

private:
  std::ostream& out_;
  std::string line_;
  std::size_t events_ = 0;
};

/// Single line for `ev`, without the trailing newline. Does not validate.
std::string encode_event(const TraceEvent& ev);
/// Appends the encoded line for `ev` to `out`, without newline.
void append_event(std::string& out, const TraceEvent& ev);

std::string encode_trace(std::span<const TraceEvent> events);
std::vector<TraceEvent> decode_trace(std::string_view text);

std::vector<TraceEvent> read_trace_file(const std::string& path);
void write_trace_file(const std::string& path, std::span<const TraceEvent> events);

} // namespace ropocop
