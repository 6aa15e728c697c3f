#ifndef SKIA_ISA_HPP
#define SKIA_ISA_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace skia {

enum class BranchClass : uint8_t {
    NonBranch = 0,
    DirectCond = 1,
    DirectUncond = 2,
    Call = 3,
    Return = 4,
    IndirectUncond = 5,
    IndirectCall = 6,
};

const char* to_string(BranchClass c);

// Result of decoding a single instruction. rel_disp is meaningful only for
// DirectCond/DirectUncond/Call.
struct DecodedInstr {
    uint8_t length = 0;     // 1..15
    BranchClass cls = BranchClass::NonBranch;
    int64_t rel_disp = 0;

    bool has_disp() const {
        return cls == BranchClass::DirectCond || cls == BranchClass::DirectUncond ||
               cls == BranchClass::Call;
    }
    bool operator==(const DecodedInstr&) const = default;
};

enum class IsaKind : uint8_t { SVL, X86Subset };

const char* to_string(IsaKind k);
std::optional<IsaKind> isa_from_string(std::string_view s);

// Byte that never begins a valid instruction; used to pad code images at
// segment edges.
uint8_t invalid_filler_byte(IsaKind isa);

// SVL: synthetic variable-length ISA, dispatched entirely on the first byte b:
//   0x00-0x6F  NonBranch       length 1+(b&7)
//   0x70-0x8F  DirectCond      length 3, signed 16-bit LE displacement
//   0x90-0xAF  DirectUncond    length 5, signed 32-bit LE displacement
//   0xB0-0xCF  Call            length 5, signed 32-bit LE displacement
//   0xD0-0xDF  IndirectUncond  length 2
//   0xE0-0xEF  Return          length 1
//   0xF0-0xFF  invalid
std::optional<DecodedInstr> decode_svl(std::span<const uint8_t> bytes, size_t offset);

// x86-64 subset decoder; unknown or truncated encodings fail. See
// docs in isa_x86.cpp for the exact opcode table.
std::optional<DecodedInstr> decode_x86(std::span<const uint8_t> bytes, size_t offset);

// Decode one instruction starting at `offset`. Returns absent when no
// complete, recognized instruction fits within `bytes`.
std::optional<DecodedInstr> decode_at(std::span<const uint8_t> bytes, size_t offset,
                                      IsaKind isa);

// Target of a direct branch: pc + length + rel_disp, 64-bit wrapping.
uint64_t branch_target(uint64_t pc, const DecodedInstr& instr);

// True for the branch kinds the shadow branch buffers can hold.
bool is_sbb_supported(BranchClass cls);

}  // namespace skia

#endif
