#include "skia/isa.hpp"

#include <cassert>

namespace skia {

const char* to_string(BranchClass c) {
    switch (c) {
        case BranchClass::NonBranch: return "NonBranch";
        case BranchClass::DirectCond: return "DirectCond";
        case BranchClass::DirectUncond: return "DirectUncond";
        case BranchClass::Call: return "Call";
        case BranchClass::Return: return "Return";
        case BranchClass::IndirectUncond: return "IndirectUncond";
        case BranchClass::IndirectCall: return "IndirectCall";
    }
    return "?";
}

const char* to_string(IsaKind k) {
    return k == IsaKind::SVL ? "svl" : "x86";
}

std::optional<IsaKind> isa_from_string(std::string_view s) {
    if (s == "svl") return IsaKind::SVL;
    if (s == "x86") return IsaKind::X86Subset;
    return std::nullopt;
}

uint8_t invalid_filler_byte(IsaKind isa) {
    // 0x06 never starts a valid instruction in the x86 subset (and is an
    // invalid opcode in 64-bit mode).
    return isa == IsaKind::SVL ? 0xFF : 0x06;
}

namespace {

int64_t read_le16(std::span<const uint8_t> b, size_t off) {
    return static_cast<int16_t>(uint16_t(b[off]) | uint16_t(b[off + 1]) << 8);
}

int64_t read_le32(std::span<const uint8_t> b, size_t off) {
    return static_cast<int32_t>(uint32_t(b[off]) | uint32_t(b[off + 1]) << 8 |
                                uint32_t(b[off + 2]) << 16 | uint32_t(b[off + 3]) << 24);
}

}  // namespace

std::optional<DecodedInstr> decode_svl(std::span<const uint8_t> bytes, size_t offset) {
    if (offset >= bytes.size()) return std::nullopt;
    const uint8_t b = bytes[offset];

    DecodedInstr d;
    if (b <= 0x6F) {
        d.length = 1 + (b & 7);
        d.cls = BranchClass::NonBranch;
    } else if (b <= 0x8F) {
        d.length = 3;
        d.cls = BranchClass::DirectCond;
    } else if (b <= 0xAF) {
        d.length = 5;
        d.cls = BranchClass::DirectUncond;
    } else if (b <= 0xCF) {
        d.length = 5;
        d.cls = BranchClass::Call;
    } else if (b <= 0xDF) {
        d.length = 2;
        d.cls = BranchClass::IndirectUncond;
    } else if (b <= 0xEF) {
        d.length = 1;
        d.cls = BranchClass::Return;
    } else {
        return std::nullopt;
    }

    if (offset + d.length > bytes.size()) return std::nullopt;
    if (d.cls == BranchClass::DirectCond) {
        d.rel_disp = read_le16(bytes, offset + 1);
    } else if (d.cls == BranchClass::DirectUncond || d.cls == BranchClass::Call) {
        d.rel_disp = read_le32(bytes, offset + 1);
    }
    return d;
}

std::optional<DecodedInstr> decode_at(std::span<const uint8_t> bytes, size_t offset,
                                      IsaKind isa) {
    return isa == IsaKind::SVL ? decode_svl(bytes, offset) : decode_x86(bytes, offset);
}

uint64_t branch_target(uint64_t pc, const DecodedInstr& instr) {
    assert(instr.has_disp());
    return pc + instr.length + static_cast<uint64_t>(instr.rel_disp);
}

bool is_sbb_supported(BranchClass cls) {
    return cls == BranchClass::DirectUncond || cls == BranchClass::Call ||
           cls == BranchClass::Return;
}

}  // namespace skia
