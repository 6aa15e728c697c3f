#include "skia/isa.hpp"

// x86-64 subset decoder. Supported encodings:
//
//   legacy prefixes  66 67 F0 F2 F3 2E 36 3E 26 64 65
//   REX              40-4F (the byte immediately before the opcode counts)
//   50-5F            push/pop r64                NonBranch
//   90               nop                         NonBranch
//   31               xor r/m, r    (ModRM)       NonBranch
//   88 89 8A 8B      mov           (ModRM)       NonBranch
//   68               push imm16/32               NonBranch
//   6A               push imm8                   NonBranch
//   70-7F            jcc rel8                    DirectCond
//   80 81 83         grp1          (ModRM+imm)   NonBranch
//   B0-B7            mov r8, imm8                NonBranch
//   B8-BF            mov r, imm16/32/64          NonBranch
//   C2               ret imm16                   Return
//   C3               ret                         Return
//   C6 C7            mov r/m, imm  (ModRM+imm)   NonBranch
//   E8               call rel32                  Call
//   E9               jmp rel32                   DirectUncond
//   EB               jmp rel8                    DirectUncond
//   FF /0 /1 /6      inc/dec/push  (ModRM)       NonBranch
//   FF /2            call r/m                    IndirectCall
//   FF /4            jmp r/m                     IndirectUncond
//   0F 1F            multi-byte nop (ModRM)      NonBranch
//   0F 80-8F         jcc rel16/32                DirectCond
//
// Everything else fails. An operand-size prefix (66) on a rel16/32 branch
// (E8/E9/0F 8x) is rejected rather than decoded as rel16. Full ModRM/SIB/disp
// rules apply; total length is capped at 15 bytes.

namespace skia {

namespace {

constexpr size_t kMaxInstrLen = 15;

bool is_legacy_prefix(uint8_t b) {
    switch (b) {
        case 0x66: case 0x67: case 0xF0: case 0xF2: case 0xF3:
        case 0x2E: case 0x36: case 0x3E: case 0x26: case 0x64: case 0x65:
            return true;
        default:
            return false;
    }
}

int64_t imm8(std::span<const uint8_t> b, size_t p) {
    return static_cast<int8_t>(b[p]);
}

int64_t imm32(std::span<const uint8_t> b, size_t p) {
    return static_cast<int32_t>(uint32_t(b[p]) | uint32_t(b[p + 1]) << 8 |
                                uint32_t(b[p + 2]) << 16 | uint32_t(b[p + 3]) << 24);
}

struct Cursor {
    std::span<const uint8_t> bytes;
    size_t start;
    size_t pos;

    bool have(size_t n) const { return pos + n <= bytes.size() && pos + n - start <= kMaxInstrLen; }
    bool take(size_t n) {
        if (!have(n)) return false;
        pos += n;
        return true;
    }
};

// Consume ModRM plus any SIB and displacement bytes. Returns the reg field,
// or -1 on truncation/overlength.
int parse_modrm(Cursor& c) {
    if (!c.have(1)) return -1;
    const uint8_t modrm = c.bytes[c.pos];
    c.pos++;
    const uint8_t mod = modrm >> 6;
    const uint8_t reg = (modrm >> 3) & 7;
    const uint8_t rm = modrm & 7;

    if (mod != 3) {
        size_t disp = 0;
        if (rm == 4) {  // SIB
            if (!c.have(1)) return -1;
            const uint8_t sib = c.bytes[c.pos];
            c.pos++;
            if (mod == 0 && (sib & 7) == 5) disp = 4;
        } else if (mod == 0 && rm == 5) {
            disp = 4;  // RIP-relative
        }
        if (mod == 1) disp = 1;
        else if (mod == 2) disp = 4;
        if (!c.take(disp)) return -1;
    }
    return reg;
}

}  // namespace

std::optional<DecodedInstr> decode_x86(std::span<const uint8_t> bytes, size_t offset) {
    if (offset >= bytes.size()) return std::nullopt;
    Cursor c{bytes, offset, offset};

    bool opsize16 = false;
    uint8_t rex = 0;
    while (c.have(1)) {
        const uint8_t b = bytes[c.pos];
        if (is_legacy_prefix(b)) {
            if (b == 0x66) opsize16 = true;
            rex = 0;  // REX only counts immediately before the opcode
            c.pos++;
        } else if (b >= 0x40 && b <= 0x4F) {
            rex = b;
            c.pos++;
        } else {
            break;
        }
    }
    if (!c.have(1)) return std::nullopt;
    const uint8_t op = bytes[c.pos];
    c.pos++;

    const size_t immz = opsize16 ? 2 : 4;
    DecodedInstr d;
    auto finish = [&](BranchClass cls) -> std::optional<DecodedInstr> {
        d.cls = cls;
        d.length = static_cast<uint8_t>(c.pos - c.start);
        return d;
    };

    switch (op) {
        case 0x0F: {
            if (!c.have(1)) return std::nullopt;
            const uint8_t op2 = bytes[c.pos];
            c.pos++;
            if (op2 == 0x1F) {
                if (parse_modrm(c) < 0) return std::nullopt;
                return finish(BranchClass::NonBranch);
            }
            if (op2 >= 0x80 && op2 <= 0x8F) {
                if (opsize16) return std::nullopt;
                if (!c.have(4)) return std::nullopt;
                d.rel_disp = imm32(bytes, c.pos);
                c.pos += 4;
                return finish(BranchClass::DirectCond);
            }
            return std::nullopt;
        }
        case 0x31: case 0x88: case 0x89: case 0x8A: case 0x8B:
            if (parse_modrm(c) < 0) return std::nullopt;
            return finish(BranchClass::NonBranch);
        case 0x68:
            if (!c.take(immz)) return std::nullopt;
            return finish(BranchClass::NonBranch);
        case 0x6A:
            if (!c.take(1)) return std::nullopt;
            return finish(BranchClass::NonBranch);
        case 0x90:
            return finish(BranchClass::NonBranch);
        case 0xC2:
            if (!c.take(2)) return std::nullopt;
            return finish(BranchClass::Return);
        case 0xC3:
            return finish(BranchClass::Return);
        case 0xC6:
            if (parse_modrm(c) < 0 || !c.take(1)) return std::nullopt;
            return finish(BranchClass::NonBranch);
        case 0xC7:
            if (parse_modrm(c) < 0 || !c.take(immz)) return std::nullopt;
            return finish(BranchClass::NonBranch);
        case 0xE8:
        case 0xE9:
            if (opsize16) return std::nullopt;
            if (!c.have(4)) return std::nullopt;
            d.rel_disp = imm32(bytes, c.pos);
            c.pos += 4;
            return finish(op == 0xE8 ? BranchClass::Call : BranchClass::DirectUncond);
        case 0xEB:
            if (!c.have(1)) return std::nullopt;
            d.rel_disp = imm8(bytes, c.pos);
            c.pos++;
            return finish(BranchClass::DirectUncond);
        case 0xFF: {
            const int reg = parse_modrm(c);
            switch (reg) {
                case 0: case 1: case 6:
                    return finish(BranchClass::NonBranch);
                case 2:
                    return finish(BranchClass::IndirectCall);
                case 4:
                    return finish(BranchClass::IndirectUncond);
                default:
                    return std::nullopt;
            }
        }
        default:
            break;
    }

    if (op >= 0x50 && op <= 0x5F) return finish(BranchClass::NonBranch);
    if (op >= 0x70 && op <= 0x7F) {
        if (!c.have(1)) return std::nullopt;
        d.rel_disp = imm8(bytes, c.pos);
        c.pos++;
        return finish(BranchClass::DirectCond);
    }
    if (op == 0x80 || op == 0x81 || op == 0x83) {
        if (parse_modrm(c) < 0) return std::nullopt;
        if (!c.take(op == 0x81 ? immz : 1)) return std::nullopt;
        return finish(BranchClass::NonBranch);
    }
    if (op >= 0xB0 && op <= 0xB7) {
        if (!c.take(1)) return std::nullopt;
        return finish(BranchClass::NonBranch);
    }
    if (op >= 0xB8 && op <= 0xBF) {
        if (!c.take((rex & 0x08) ? 8 : immz)) return std::nullopt;
        return finish(BranchClass::NonBranch);
    }
    return std::nullopt;
}

}  // namespace skia
