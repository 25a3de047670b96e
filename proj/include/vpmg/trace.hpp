#pragma once

#include <array>
#include <cassert>
#include <cstdint>
#include <ostream>
#include <vector>

#include "vpmg/common.hpp"

namespace vpmg {

enum class AccessKind : std::uint8_t { read = 0, write = 1 };

/// One element access of an instrumented array. Fits in 8 bytes; the
/// export format widens the index to 8 bytes.
struct TraceRecord {
  std::uint32_t index;
  std::uint8_t array_id;
  std::uint8_t kind;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

/// Array ids used by the smoother replays.
namespace trace_array {
inline constexpr std::uint8_t solution = 0;
inline constexpr std::uint8_t rhs = 1;
inline constexpr std::uint8_t residual = 2;
inline constexpr std::uint8_t metadata = 3;
} // namespace trace_array

/// Element-access stream of one instrumented run. Appends are capped so a
/// runaway replay fails instead of exhausting memory.
class AccessTrace {
public:
  explicit AccessTrace(std::size_t max_records = 50'000'000) : max_records_(max_records) {}

  void append(std::uint8_t array_id, std::size_t index, AccessKind kind) {
    if (records_.size() >= max_records_)
      throw resource_error("access trace exceeds the record cap of " +
                           std::to_string(max_records_));
    assert(index <= 0xffffffffull); // records store 32-bit element indices
    records_.push_back(TraceRecord{static_cast<std::uint32_t>(index), array_id,
                                   static_cast<std::uint8_t>(kind)});
  }

  const std::vector<TraceRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

  /// Binary export: per record (array id: 1 byte, index: 8 bytes
  /// little-endian, flag: 1 byte).
  void write_binary(std::ostream& os) const {
    for (const TraceRecord& r : records_) {
      os.put(static_cast<char>(r.array_id));
      std::uint64_t idx = r.index;
      for (int b = 0; b < 8; ++b)
        os.put(static_cast<char>((idx >> (8 * b)) & 0xff));
      os.put(static_cast<char>(r.kind));
    }
  }

private:
  std::vector<TraceRecord> records_;
  std::size_t max_records_;
};

} // namespace vpmg
