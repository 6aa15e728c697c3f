#include "skia/memory.hpp"

#include <cassert>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace skia {

void CodeImage::add_segment(uint64_t base, std::vector<uint8_t> bytes) {
    if (bytes.empty()) throw SimError("empty code segment");
    const uint64_t end = base + bytes.size();
    for (const auto& [b, data] : segments_) {
        const uint64_t e = b + data.size();
        if (base < e && b < end) {
            std::ostringstream os;
            os << "overlapping code segments at 0x" << std::hex << base;
            throw SimError(os.str());
        }
    }
    segments_[base] = std::move(bytes);
}

std::optional<uint8_t> CodeImage::byte_at(uint64_t addr) const {
    auto it = segments_.upper_bound(addr);
    if (it == segments_.begin()) return std::nullopt;
    --it;
    const uint64_t off = addr - it->first;
    if (off >= it->second.size()) return std::nullopt;
    return it->second[off];
}

std::array<uint8_t, kLineBytes> CodeImage::read_line(uint64_t line_addr, IsaKind isa) const {
    assert((line_addr & 63) == 0);
    std::array<uint8_t, kLineBytes> out;
    bool any = false;
    const uint8_t filler = invalid_filler_byte(isa);
    for (size_t i = 0; i < kLineBytes; ++i) {
        if (auto b = byte_at(line_addr + i)) {
            out[i] = *b;
            any = true;
        } else {
            out[i] = filler;
        }
    }
    if (!any) {
        std::ostringstream os;
        os << "read of fully unmapped line 0x" << std::hex << line_addr;
        throw SimError(os.str());
    }
    return out;
}

std::vector<uint8_t> CodeImage::read_bytes(uint64_t addr, size_t n, IsaKind isa) const {
    std::vector<uint8_t> out(n, invalid_filler_byte(isa));
    for (size_t i = 0; i < n; ++i) {
        if (auto b = byte_at(addr + i)) out[i] = *b;
    }
    return out;
}

namespace {

std::string to_hex_string(const std::vector<uint8_t>& bytes) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(bytes.size() * 2);
    for (uint8_t b : bytes) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 15]);
    }
    return s;
}

std::vector<uint8_t> from_hex_string(const std::string& s) {
    if (s.size() % 2 != 0) throw SimError("odd-length hex string in code image");
    auto nib = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw SimError("bad hex digit in code image");
    };
    std::vector<uint8_t> out(s.size() / 2);
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<uint8_t>(nib(s[2 * i]) << 4 | nib(s[2 * i + 1]));
    return out;
}

}  // namespace

std::string CodeImage::to_json() const {
    nlohmann::json j;
    j["segments"] = nlohmann::json::array();
    for (const auto& [base, bytes] : segments_) {
        char addr[32];
        snprintf(addr, sizeof addr, "0x%llx", static_cast<unsigned long long>(base));
        j["segments"].push_back({{"base", addr}, {"bytes_hex", to_hex_string(bytes)}});
    }
    return j.dump(2);
}

CodeImage CodeImage::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SimError(std::string("bad code image json: ") + e.what());
    }
    CodeImage img;
    if (!j.contains("segments") || !j["segments"].is_array())
        throw SimError("code image json missing segments array");
    for (const auto& seg : j["segments"]) {
        const std::string base_str = seg.at("base").get<std::string>();
        uint64_t base = std::stoull(base_str, nullptr, 0);
        img.add_segment(base, from_hex_string(seg.at("bytes_hex").get<std::string>()));
    }
    return img;
}

CodeImage CodeImage::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SimError("cannot open code image: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

void CodeImage::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw SimError("cannot write code image: " + path);
    out << to_json() << "\n";
}

L1ICache::L1ICache(size_t size_bytes, size_t ways, uint64_t miss_latency)
    : ways_(ways), miss_latency_(miss_latency) {
    const size_t lines = size_bytes / kLineBytes;
    assert(lines >= ways && lines % ways == 0);
    sets_ = lines / ways;
    storage_.resize(lines);
}

size_t L1ICache::set_of(uint64_t line_addr) const { return (line_addr >> 6) % sets_; }

L1ICache::AccessResult L1ICache::access(uint64_t line_addr, AccessKind kind, uint64_t now) {
    if (line_addr & 63) throw SimError("unaligned L1-I access");
    Way* set = &storage_[set_of(line_addr) * ways_];
    use_tick_++;

    Way* found = nullptr;
    for (size_t w = 0; w < ways_; ++w) {
        if (set[w].valid && set[w].line == line_addr) {
            found = &set[w];
            break;
        }
    }

    const bool hit = found != nullptr;
    switch (kind) {
        case AccessKind::Demand:
            hit ? counters_.demand_hits++ : counters_.demand_misses++;
            break;
        case AccessKind::Prefetch:
            hit ? counters_.prefetch_hits++ : counters_.prefetch_misses++;
            break;
        case AccessKind::WrongPathPrefetch:
            hit ? counters_.wrong_path_hits++ : counters_.wrong_path_misses++;
            if (!hit) counters_.wrong_path_fills++;
            break;
    }

    if (found) {
        found->last_use = use_tick_;
        return {true, found->ready_at};
    }

    // Miss: allocate the LRU victim.
    Way* victim = &set[0];
    for (size_t w = 1; w < ways_; ++w) {
        if (!set[w].valid) {
            victim = &set[w];
            break;
        }
        if (victim->valid && set[w].last_use < victim->last_use) victim = &set[w];
    }
    victim->valid = true;
    victim->line = line_addr;
    victim->ready_at = now + miss_latency_;
    victim->last_use = use_tick_;
    return {false, victim->ready_at};
}

bool L1ICache::resident(uint64_t line_addr) const {
    const Way* set = &storage_[set_of(line_addr) * ways_];
    for (size_t w = 0; w < ways_; ++w)
        if (set[w].valid && set[w].line == line_addr) return true;
    return false;
}

std::optional<uint64_t> L1ICache::ready_at(uint64_t line_addr) const {
    const Way* set = &storage_[set_of(line_addr) * ways_];
    for (size_t w = 0; w < ways_; ++w)
        if (set[w].valid && set[w].line == line_addr) return set[w].ready_at;
    return std::nullopt;
}

}  // namespace skia
