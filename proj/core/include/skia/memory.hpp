#ifndef SKIA_MEMORY_HPP
#define SKIA_MEMORY_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "skia/shadow_decoder.hpp"

namespace skia {

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Sparse byte address space holding the code the trace executed from.
// Segments must not overlap.
class CodeImage {
public:
    void add_segment(uint64_t base, std::vector<uint8_t> bytes);

    std::optional<uint8_t> byte_at(uint64_t addr) const;

    // Returns the 64 bytes at `line_addr`, padding bytes not covered by any
    // segment with the ISA's invalid filler. Throws SimError when the whole
    // line is unmapped.
    std::array<uint8_t, kLineBytes> read_line(uint64_t line_addr, IsaKind isa) const;

    // Up to `n` bytes starting at addr, with invalid-byte fill; used for
    // wrong-path instruction decode. Does not require any byte to be mapped.
    std::vector<uint8_t> read_bytes(uint64_t addr, size_t n, IsaKind isa) const;

    const std::map<uint64_t, std::vector<uint8_t>>& segments() const { return segments_; }

    std::string to_json() const;
    static CodeImage from_json(const std::string& text);
    static CodeImage load(const std::string& path);
    void save(const std::string& path) const;

private:
    std::map<uint64_t, std::vector<uint8_t>> segments_;
};

enum class AccessKind : uint8_t { Demand, Prefetch, WrongPathPrefetch };

struct L1Counters {
    uint64_t demand_hits = 0;
    uint64_t demand_misses = 0;
    uint64_t prefetch_hits = 0;
    uint64_t prefetch_misses = 0;
    uint64_t wrong_path_hits = 0;
    uint64_t wrong_path_misses = 0;
    uint64_t wrong_path_fills = 0;

    bool operator==(const L1Counters&) const = default;
};

// L1 instruction cache: true LRU, 64-byte lines. Misses allocate immediately
// and record the cycle the fill completes.
class L1ICache {
public:
    L1ICache(size_t size_bytes, size_t ways, uint64_t miss_latency);

    struct AccessResult {
        bool hit = false;
        uint64_t ready_at = 0;  // cycle the data is usable
    };

    AccessResult access(uint64_t line_addr, AccessKind kind, uint64_t now);

    // Residency check with no LRU side effects.
    bool resident(uint64_t line_addr) const;
    std::optional<uint64_t> ready_at(uint64_t line_addr) const;

    const L1Counters& counters() const { return counters_; }
    size_t sets() const { return sets_; }

private:
    struct Way {
        bool valid = false;
        uint64_t line = 0;
        uint64_t ready_at = 0;
        uint64_t last_use = 0;
    };

    size_t set_of(uint64_t line_addr) const;

    size_t sets_;
    size_t ways_;
    uint64_t miss_latency_;
    uint64_t use_tick_ = 0;
    std::vector<Way> storage_;
    L1Counters counters_;
};

}  // namespace skia

#endif
