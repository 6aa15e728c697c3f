#ifndef SKIA_SHADOW_DECODER_HPP
#define SKIA_SHADOW_DECODER_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "skia/isa.hpp"

namespace skia {

inline constexpr size_t kLineBytes = 64;
inline constexpr size_t kDefaultMaxValidPaths = 6;

// One 64-byte instruction cache line, with the byte offset the executed path
// entered at and (when the exit branch is known) the first byte after it.
struct CacheLineView {
    uint64_t base_addr = 0;  // 64-byte aligned
    std::array<uint8_t, kLineBytes> bytes{};
    uint8_t entry_offset = 0;              // 0..63
    std::optional<uint8_t> tail_start;     // 0..64
};

// lengths[i] = decoded instruction length at byte i of the head region, or 0.
struct LengthVector {
    std::vector<uint8_t> lengths;
};

enum class ShadowKind : uint8_t { Uncond, Call, Return };
enum class ShadowOrigin : uint8_t { Head, Tail };

const char* to_string(ShadowKind k);

struct ShadowBranch {
    ShadowKind kind = ShadowKind::Uncond;
    uint64_t pc = 0;
    uint64_t target = 0;  // meaningful for Uncond/Call only
    uint8_t line_offset = 0;
    ShadowOrigin origin = ShadowOrigin::Head;

    bool operator==(const ShadowBranch&) const = default;
};

enum class IndexPolicy : uint8_t { FirstIndex, ZeroIndex, MergeIndex };

const char* to_string(IndexPolicy p);
std::optional<IndexPolicy> index_policy_from_string(std::string_view s);

// Per-byte instruction lengths over [0, entry_offset). Decoding may read
// bytes at and beyond the entry offset; landing validity is judged later.
LengthVector compute_length_vector(const CacheLineView& line, IsaKind isa);

// Start index s is valid iff the walk p <- p + lengths[p] from s lands
// exactly on entry_offset with every visited length nonzero. Ascending order.
std::vector<uint8_t> enumerate_valid_paths(const LengthVector& lv, uint8_t entry_offset);

// Applies the configured selection policy; absent when no valid path exists
// or the valid-path count exceeds max_valid_paths.
std::optional<uint8_t> select_start_index(const std::vector<uint8_t>& valid,
                                          const LengthVector& lv, uint8_t entry_offset,
                                          IndexPolicy policy,
                                          size_t max_valid_paths = kDefaultMaxValidPaths);

// Head shadow decode: index computation, path validation, then a walk from
// the selected start emitting every supported branch.
std::vector<ShadowBranch> decode_head(const CacheLineView& line, IsaKind isa,
                                      IndexPolicy policy,
                                      size_t max_valid_paths = kDefaultMaxValidPaths);

// Tail shadow decode: single linear pass from tail_start, stopping at the
// first decode failure or an instruction that would cross byte 63.
std::vector<ShadowBranch> decode_tail(const CacheLineView& line, IsaKind isa);

// Stable text dump used by the decode-line CLI subcommand and golden tests.
std::string dump_line_analysis(const CacheLineView& line, IsaKind isa,
                               size_t max_valid_paths = kDefaultMaxValidPaths);

}  // namespace skia

#endif
