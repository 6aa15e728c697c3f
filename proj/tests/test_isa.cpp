#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "skia/isa.hpp"

using namespace skia;

namespace {

std::vector<uint8_t> hex_bytes(const std::string& s) {
    std::vector<uint8_t> out;
    for (size_t i = 0; i + 1 < s.size(); i += 2)
        out.push_back(uint8_t(std::stoul(s.substr(i, 2), nullptr, 16)));
    return out;
}

}  // namespace

TEST_CASE("svl first-byte table is exhaustive") {
    // Pad generously so only the table, not truncation, decides the result.
    std::vector<uint8_t> buf(16, 0x00);
    for (int b = 0; b <= 0xFF; ++b) {
        buf[0] = uint8_t(b);
        auto d = decode_svl(buf, 0);
        if (b <= 0x6F) {
            REQUIRE(d);
            CHECK(d->cls == BranchClass::NonBranch);
            CHECK(d->length == 1 + (b & 7));
        } else if (b <= 0x8F) {
            REQUIRE(d);
            CHECK(d->cls == BranchClass::DirectCond);
            CHECK(d->length == 3);
        } else if (b <= 0xAF) {
            REQUIRE(d);
            CHECK(d->cls == BranchClass::DirectUncond);
            CHECK(d->length == 5);
        } else if (b <= 0xCF) {
            REQUIRE(d);
            CHECK(d->cls == BranchClass::Call);
            CHECK(d->length == 5);
        } else if (b <= 0xDF) {
            REQUIRE(d);
            CHECK(d->cls == BranchClass::IndirectUncond);
            CHECK(d->length == 2);
        } else if (b <= 0xEF) {
            REQUIRE(d);
            CHECK(d->cls == BranchClass::Return);
            CHECK(d->length == 1);
        } else {
            CHECK(!d);
        }
    }
}

TEST_CASE("svl displacement decoding is little-endian and signed") {
    SUBCASE("cond disp16") {
        std::vector<uint8_t> buf = {0x70, 0xFE, 0xFF};  // disp -2
        auto d = decode_svl(buf, 0);
        REQUIRE(d);
        CHECK(d->rel_disp == -2);
        CHECK(branch_target(0x1000, *d) == 0x1000 + 3 - 2);
    }
    SUBCASE("uncond disp32") {
        std::vector<uint8_t> buf = {0x90, 0x78, 0x56, 0x34, 0x12};
        auto d = decode_svl(buf, 0);
        REQUIRE(d);
        CHECK(d->rel_disp == 0x12345678);
        CHECK(branch_target(0x2000, *d) == 0x2000 + 5 + 0x12345678);
    }
    SUBCASE("call negative disp wraps") {
        std::vector<uint8_t> buf = {0xB0, 0xFF, 0xFF, 0xFF, 0xFF};  // disp -1
        auto d = decode_svl(buf, 0);
        REQUIRE(d);
        CHECK(branch_target(0, *d) == 4);  // 0 + 5 - 1
    }
}

TEST_CASE("svl truncation fails cleanly") {
    std::vector<uint8_t> buf = {0x07, 0x00, 0x00};  // needs 8 bytes
    CHECK(!decode_svl(buf, 0));
    std::vector<uint8_t> cond = {0x70, 0x01};  // needs 3
    CHECK(!decode_svl(cond, 0));
    CHECK(!decode_svl(buf, 3));  // offset at end of buffer
}

TEST_CASE("x86 corpus agreement with the reference disassembler") {
    std::ifstream in(std::string(TEST_DATA_DIR) + "/x86_corpus.txt");
    REQUIRE(in.good());
    std::string hex, cls_name;
    int len = 0;
    size_t count = 0, mismatches = 0;
    while (in >> hex >> len >> cls_name) {
        auto bytes = hex_bytes(hex);
        auto d = decode_x86(bytes, 0);
        auto expect_cls = [&]() -> BranchClass {
            if (cls_name == "NonBranch") return BranchClass::NonBranch;
            if (cls_name == "DirectCond") return BranchClass::DirectCond;
            if (cls_name == "DirectUncond") return BranchClass::DirectUncond;
            if (cls_name == "Call") return BranchClass::Call;
            if (cls_name == "Return") return BranchClass::Return;
            if (cls_name == "IndirectUncond") return BranchClass::IndirectUncond;
            REQUIRE(cls_name == "IndirectCall");
            return BranchClass::IndirectCall;
        }();
        if (!d || d->length != len || d->cls != expect_cls) mismatches++;
        count++;
    }
    CHECK(count >= 1000);
    CHECK(mismatches == 0);
}

TEST_CASE("x86 rel32 branch targets") {
    auto bytes = hex_bytes("e9f9030000");
    auto d = decode_x86(bytes, 0);
    REQUIRE(d);
    CHECK(d->cls == BranchClass::DirectUncond);
    CHECK(d->length == 5);
    CHECK(d->rel_disp == 0x3F9);
    CHECK(branch_target(0x100, *d) == 0x100 + 5 + 0x3F9);
}

TEST_CASE("x86 prefix handling") {
    SUBCASE("rex.w selects imm64 for b8") {
        auto d = decode_x86(hex_bytes("48b80011223344556677"), 0);
        REQUIRE(d);
        CHECK(d->length == 10);
        CHECK(d->cls == BranchClass::NonBranch);
    }
    SUBCASE("rex before a legacy prefix does not count") {
        auto d = decode_x86(hex_bytes("4866b80011223344556677"), 0);
        REQUIRE(d);
        CHECK(d->length == 5);  // 48 66 b8 iw: the 66 wins, rex is stale
    }
    SUBCASE("operand-size prefix on rel32 branches is rejected") {
        CHECK(!decode_x86(hex_bytes("66e900000000"), 0));
        CHECK(!decode_x86(hex_bytes("66e800000000"), 0));
        CHECK(!decode_x86(hex_bytes("660f8400000000"), 0));
    }
    SUBCASE("15-byte cap") {
        // Thirteen 66 prefixes + rex + nop is exactly 15 bytes.
        auto ok = decode_x86(hex_bytes("666666666666666666666666664890"), 0);
        REQUIRE(ok);
        CHECK(ok->length == 15);
        // One more prefix pushes it to 16 bytes and past the cap.
        CHECK(!decode_x86(hex_bytes("66666666666666666666666666664890"), 0));
    }
}

TEST_CASE("x86 modrm forms") {
    struct Case {
        const char* hex;
        int len;
    };
    const Case cases[] = {
        {"31c0", 2},          // reg-reg
        {"8b4010", 3},        // disp8
        {"8b8010203040", 6},  // disp32
        {"8b0425aabbccdd", 7},  // SIB with base=5 disp32
        {"8b0500000000", 6},  // RIP-relative
        {"8b0411", 3},        // SIB, no disp
    };
    for (const auto& c : cases) {
        auto d = decode_x86(hex_bytes(c.hex), 0);
        REQUIRE(d);
        CHECK(int(d->length) == c.len);
        CHECK(d->cls == BranchClass::NonBranch);
    }
}

TEST_CASE("x86 ff group split") {
    auto call = decode_x86(hex_bytes("ffd0"), 0);  // /2 reg
    REQUIRE(call);
    CHECK(call->cls == BranchClass::IndirectCall);
    auto jmp = decode_x86(hex_bytes("ffe0"), 0);  // /4 reg
    REQUIRE(jmp);
    CHECK(jmp->cls == BranchClass::IndirectUncond);
    auto push = decode_x86(hex_bytes("fff0"), 0);  // /6 reg
    REQUIRE(push);
    CHECK(push->cls == BranchClass::NonBranch);
    CHECK(!decode_x86(hex_bytes("ffd8"), 0));  // /3 unsupported
    CHECK(!decode_x86(hex_bytes("ffe8"), 0));  // /5 unsupported
    CHECK(!decode_x86(hex_bytes("fff8"), 0));  // /7 unsupported
}

TEST_CASE("filler bytes never decode") {
    std::vector<uint8_t> svl(16, invalid_filler_byte(IsaKind::SVL));
    CHECK(!decode_at(svl, 0, IsaKind::SVL));
    std::vector<uint8_t> x86(16, invalid_filler_byte(IsaKind::X86Subset));
    CHECK(!decode_at(x86, 0, IsaKind::X86Subset));
}

TEST_CASE("name round trips") {
    CHECK(isa_from_string("svl") == IsaKind::SVL);
    CHECK(isa_from_string("x86") == IsaKind::X86Subset);
    CHECK(!isa_from_string("arm"));
    CHECK(std::string(to_string(BranchClass::IndirectCall)) == "IndirectCall");
}
