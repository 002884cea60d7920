#include "ropocop/trace.hpp"

#include <array>

namespace ropocop {

namespace {

constexpr std::array<std::string_view, 6> kTerminatorNames = {"ret", "icall", "ijmp", "dbr", "dcall", "fall"};

std::string compose(std::string message, std::optional<std::size_t> line, std::optional<std::size_t> index) {
  if (line) {
    return "line " + std::to_string(*line) + ": " + message;
  }
  if (index) {
    return "event " + std::to_string(*index) + ": " + message;
  }
  return message;
}

} // namespace

std::string to_hex(Address a) {
  static constexpr char kDigits[] = "0123456789abcdef";
  char buf[2 + 16];
  char* end = buf + sizeof(buf);
  char* p = end;
  std::uint64_t v = a.value;
  do {
    *--p = kDigits[v & 0xf];
    v >>= 4;
  } while (v != 0);
  *--p = 'x';
  *--p = '0';
  return std::string(p, end);
}

Address parse_hex(std::string_view text) {
  if (text.size() < 3 || text[0] != '0' || (text[1] != 'x' && text[1] != 'X') || text.size() > 18) {
    throw std::invalid_argument("expected 0x-prefixed hex address, got '" + std::string(text) + "'");
  }
  std::uint64_t v = 0;
  for (char c : text.substr(2)) {
    unsigned d;
    if (c >= '0' && c <= '9') {
      d = static_cast<unsigned>(c - '0');
    } else if (c >= 'a' && c <= 'f') {
      d = static_cast<unsigned>(c - 'a' + 10);
    } else if (c >= 'A' && c <= 'F') {
      d = static_cast<unsigned>(c - 'A' + 10);
    } else {
      throw std::invalid_argument("bad hex digit in '" + std::string(text) + "'");
    }
    v = (v << 4) | d;
  }
  return Address{v};
}

std::string_view to_string(Terminator t) {
  return kTerminatorNames[static_cast<std::size_t>(t)];
}

std::optional<Terminator> terminator_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kTerminatorNames.size(); ++i) {
    if (kTerminatorNames[i] == s) {
      return static_cast<Terminator>(i);
    }
  }
  return std::nullopt;
}

TraceError::TraceError(TraceErrc code, std::string message, std::optional<std::size_t> line,
                       std::optional<std::size_t> event_index)
    : std::runtime_error(compose(std::move(message), line, event_index)),
      code_(code),
      line_(line),
      event_index_(event_index) {}

std::optional<std::string> check_invariants(const TraceEvent& ev) {
  auto in_range = [](Address a) { return a.value < kAddressSpaceEnd; };
  struct Visitor {
    decltype(in_range)& ok;
    std::optional<std::string> operator()(const BlockExec& b) const {
      if (b.instr_count < 1) return "instr_count must be ≥ 1";
      if (!ok(b.start)) return "block start address ≥ 2^32";
      if (!ok(b.target)) return "block target address ≥ 2^32";
      return std::nullopt;
    }
    std::optional<std::string> operator()(const ImageLoad& l) const {
      if (!ok(l.start) || !ok(l.end)) return "image address ≥ 2^32";
      if (!(l.start < l.end)) return "image start must be below image end";
      return std::nullopt;
    }
    std::optional<std::string> operator()(const ImageUnload& u) const {
      if (!ok(u.start)) return "image address ≥ 2^32";
      return std::nullopt;
    }
    std::optional<std::string> operator()(const AllocCall&) const { return std::nullopt; }
    std::optional<std::string> operator()(const UsageReport& r) const {
      if (!ok(r.top)) return "usage address ≥ 2^32";
      return std::nullopt;
    }
  };
  return std::visit(Visitor{in_range}, ev);
}

} // namespace ropocop
