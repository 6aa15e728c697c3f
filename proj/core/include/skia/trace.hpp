#ifndef SKIA_TRACE_HPP
#define SKIA_TRACE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "skia/memory.hpp"

namespace skia {

// One committed instruction. `target` is 0 when there is none.
struct TraceRecord {
    uint64_t pc = 0;
    uint64_t target = 0;
    uint8_t len = 0;
    uint8_t cls = 0;    // BranchClass value
    uint8_t flags = 0;  // bit0 = taken

    bool taken() const { return flags & 1; }
    BranchClass branch_class() const { return static_cast<BranchClass>(cls); }
    bool operator==(const TraceRecord&) const = default;
};

struct TraceError : std::runtime_error {
    enum class Kind { BadMagic, BadVersion, Truncated, Io };
    TraceError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
    Kind kind;
};

// Binary ".sbtrace" format (little-endian): magic "SBTR", u32 version = 1,
// u64 record count, then packed 19-byte records (pc u64, target u64, len u8,
// class u8, flags u8).
void write_trace(const std::string& path, const std::vector<TraceRecord>& records);
std::vector<TraceRecord> read_trace(const std::string& path);

std::vector<uint8_t> serialize_trace(const std::vector<TraceRecord>& records);
std::vector<TraceRecord> deserialize_trace(const std::vector<uint8_t>& bytes);

struct TraceViolation {
    size_t index = 0;
    std::string what;
};

// Cross-checks every record against the code image (decode agreement) and
// the successor record (control-flow continuity).
std::vector<TraceViolation> validate_trace(const CodeImage& image,
                                           const std::vector<TraceRecord>& records,
                                           IsaKind isa);

}  // namespace skia

#endif
