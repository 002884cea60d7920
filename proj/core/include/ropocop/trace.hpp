#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace ropocop {

/// Virtual address. Version 1 traces model a 32-bit address space.
struct Address {
  std::uint64_t value = 0;

  friend constexpr auto operator<=>(const Address&, const Address&) = default;
};

inline constexpr std::uint64_t kAddressSpaceEnd = 1ULL << 32;
inline constexpr std::uint64_t kMaxAddress = kAddressSpaceEnd - 1;

/// Lower-case, 0x-prefixed hex.
std::string to_hex(Address a);
/// Parses "0x..." hex. Throws std::invalid_argument on bad syntax or
/// values that do not fit in 64 bits. Range checks are the caller's job.
Address parse_hex(std::string_view text);

enum class Terminator : std::uint8_t {
  ret,
  indirect_call,
  indirect_jump,
  direct_branch,
  direct_call,
  fall_through,
};

constexpr bool is_indirect(Terminator t) {
  return t == Terminator::ret || t == Terminator::indirect_call || t == Terminator::indirect_jump;
}

/// On-disk spelling: ret, icall, ijmp, dbr, dcall, fall.
std::string_view to_string(Terminator t);
std::optional<Terminator> terminator_from_string(std::string_view s);

/// One executed basic block. `target` is where control goes after the terminator.
struct BlockExec {
  Address start;
  std::uint32_t instr_count = 1;
  Terminator terminator = Terminator::fall_through;
  Address target;

  friend bool operator==(const BlockExec&, const BlockExec&) = default;
};

/// Image mapped at [start, end).
struct ImageLoad {
  std::string name;
  Address start;
  Address end;

  friend bool operator==(const ImageLoad&, const ImageLoad&) = default;
};

struct ImageUnload {
  std::string name;
  Address start;

  friend bool operator==(const ImageUnload&, const ImageUnload&) = default;
};

/// A call to a function that allocates or frees memory.
struct AllocCall {
  friend bool operator==(const AllocCall&, const AllocCall&) = default;
};

/// Highest address currently occupied by data regions (stacks, heaps).
struct UsageReport {
  Address top;

  friend bool operator==(const UsageReport&, const UsageReport&) = default;
};

using TraceEvent = std::variant<BlockExec, ImageLoad, ImageUnload, AllocCall, UsageReport>;

enum class TraceErrc {
  malformed,  // unparsable line or missing/mistyped field
  schema,     // missing header, wrong schema name or version
  validation, // well-formed but violates an event invariant
};

class TraceError : public std::runtime_error {
public:
  /// `line` is 1-based for decode errors; `event_index` is 0-based for encode errors.
  TraceError(TraceErrc code, std::string message, std::optional<std::size_t> line = std::nullopt,
             std::optional<std::size_t> event_index = std::nullopt);

  TraceErrc code() const { return code_; }
  std::optional<std::size_t> line() const { return line_; }
  std::optional<std::size_t> event_index() const { return event_index_; }

private:
  TraceErrc code_;
  std::optional<std::size_t> line_;
  std::optional<std::size_t> event_index_;
};

/// Returns a description of the first violated invariant, or nullopt.
std::optional<std::string> check_invariants(const TraceEvent& ev);

} // namespace ropocop
