#ifndef SKIA_PREDICTORS_HPP
#define SKIA_PREDICTORS_HPP

#include <cassert>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "skia/shadow_decoder.hpp"

namespace skia {

inline constexpr unsigned kTagBits = 10;
inline constexpr uint64_t kTagMask = (1u << kTagBits) - 1;

// Set-associative, partially-tagged storage shared by the BTB and both SBB
// partitions. Tags are truncated to 10 bits, so false hits are possible by
// design. One use bit per way approximates LRU (NRU); the retired bit, where
// enabled, protects entries whose predictions have committed.
template <typename Payload>
class SetAssocBuffer {
public:
    struct Way {
        bool valid = false;
        bool use_bit = false;
        bool retired = false;
        uint16_t tag = 0;
        Payload payload{};
    };

    SetAssocBuffer(size_t entries, size_t ways, bool use_retired)
        : ways_per_set_(ways), use_retired_(use_retired) {
        assert(entries >= ways && entries % ways == 0);
        sets_ = entries / ways;
        storage_.resize(entries);
    }

    size_t sets() const { return sets_; }
    size_t ways() const { return ways_per_set_; }
    size_t entries() const { return storage_.size(); }

    size_t index_of(uint64_t key) const { return key % sets_; }
    uint16_t tag_of(uint64_t key) const {
        return static_cast<uint16_t>((key / sets_) & kTagMask);
    }

    template <typename Pred>
    Way* find(uint64_t key, Pred&& match) {
        Way* set = set_base(index_of(key));
        const uint16_t tag = tag_of(key);
        for (size_t w = 0; w < ways_per_set_; ++w) {
            Way& way = set[w];
            if (way.valid && way.tag == tag && match(way)) return &way;
        }
        return nullptr;
    }

    Way* find(uint64_t key) {
        return find(key, [](const Way&) { return true; });
    }

    // NRU touch: set the use bit; once every way in the set is marked used,
    // clear all but the most recently touched.
    void touch(Way* way) {
        Way* set = set_base(set_index_of(way));
        way->use_bit = true;
        bool all = true;
        for (size_t w = 0; w < ways_per_set_; ++w) all = all && set[w].use_bit;
        if (all) {
            for (size_t w = 0; w < ways_per_set_; ++w) set[w].use_bit = false;
            way->use_bit = true;
        }
    }

    // Allocates (or re-uses an invalid) way for `key`, evicting per the
    // priority: invalid > non-retired (NRU) > retired (NRU). Caller fills
    // the payload.
    Way& insert(uint64_t key) {
        Way* set = set_base(index_of(key));
        Way* victim = pick_victim(set);
        victim->valid = true;
        victim->retired = false;
        victim->tag = tag_of(key);
        victim->payload = Payload{};
        touch(victim);
        return *victim;
    }

    size_t valid_count() const {
        size_t n = 0;
        for (const Way& w : storage_) n += w.valid;
        return n;
    }

    void clear() {
        for (Way& w : storage_) w = Way{};
    }

private:
    Way* set_base(size_t set) { return &storage_[set * ways_per_set_]; }
    size_t set_index_of(const Way* way) const {
        return static_cast<size_t>(way - storage_.data()) / ways_per_set_;
    }

    Way* pick_victim(Way* set) {
        for (size_t w = 0; w < ways_per_set_; ++w)
            if (!set[w].valid) return &set[w];
        // Non-retired before retired; use-bit-clear before use-bit-set.
        for (int retired_pass = 0; retired_pass < (use_retired_ ? 2 : 1); ++retired_pass) {
            const bool want_retired = retired_pass == 1;
            for (int use_pass = 0; use_pass < 2; ++use_pass) {
                const bool want_used = use_pass == 1;
                for (size_t w = 0; w < ways_per_set_; ++w) {
                    Way& way = set[w];
                    if (use_retired_ && way.retired != want_retired) continue;
                    if (way.use_bit != want_used) continue;
                    return &way;
                }
            }
        }
        return &set[0];  // unreachable: some way always matches a pass
    }

    size_t sets_ = 0;
    size_t ways_per_set_ = 0;
    bool use_retired_ = false;
    std::vector<Way> storage_;
};

// 2-bit branch type stored per BTB entry. Indirect jumps fold into
// DirectUncond (predict the stored last target); indirect calls fold into
// Call; Return entries predict through the RAS.
enum class BtbType : uint8_t { DirectCond = 0, DirectUncond = 1, Call = 2, Return = 3 };

BtbType btb_type_of(BranchClass cls);
const char* to_string(BtbType t);

struct BtbPayload {
    BtbType type = BtbType::DirectUncond;
    uint64_t target = 0;
};

class Btb {
public:
    Btb(size_t entries, size_t ways) : buf_(entries, ways, /*use_retired=*/false) {}

    struct Hit {
        BtbType type;
        uint64_t target;
    };

    std::optional<Hit> lookup(uint64_t pc) {
        if (auto* w = buf_.find(pc)) {
            buf_.touch(w);
            return Hit{w->payload.type, w->payload.target};
        }
        return std::nullopt;
    }

    std::optional<Hit> peek(uint64_t pc) const {
        auto* self = const_cast<Btb*>(this);
        if (auto* w = self->buf_.find(pc)) return Hit{w->payload.type, w->payload.target};
        return std::nullopt;
    }

    void insert(uint64_t pc, BtbType type, uint64_t target) {
        auto* w = buf_.find(pc);
        if (!w) w = &buf_.insert(pc);
        else buf_.touch(w);
        w->payload = {type, target};
    }

    size_t valid_count() const { return buf_.valid_count(); }

private:
    SetAssocBuffer<BtbPayload> buf_;
};

struct SbbPrediction {
    enum class Source : uint8_t { USbb, RSbb };
    Source source = Source::USbb;
    ShadowKind kind = ShadowKind::Uncond;
    uint64_t target = 0;  // absent semantics for Return: the RAS supplies it
};

struct USbbPayload {
    bool is_call = false;
    uint64_t target = 0;
};

struct RSbbPayload {
    uint8_t offset = 0;  // 6 bits: byte offset of the return within its line
};

// Shadow Branch Buffer: U-SBB holds direct unconditional branches and calls
// keyed by branch pc; R-SBB holds returns keyed by line number, with the
// 6-bit in-line offset matched on lookup.
class Sbb {
public:
    Sbb(size_t usbb_entries, size_t rsbb_entries, size_t ways)
        : usbb_(usbb_entries, ways, /*use_retired=*/true),
          rsbb_(rsbb_entries, ways, /*use_retired=*/true) {}

    void insert(const ShadowBranch& sb);
    std::optional<SbbPrediction> lookup(uint64_t pc);
    std::optional<SbbPrediction> peek(uint64_t pc) const;

    // Sets the retired bit on the entry that supplied a committed prediction.
    void mark_retired(uint64_t pc);
    // Drops the entry whose supplied target was proven wrong.
    void invalidate(uint64_t pc);

    size_t usbb_valid() const { return usbb_.valid_count(); }
    size_t rsbb_valid() const { return rsbb_.valid_count(); }
    void clear() { usbb_.clear(); rsbb_.clear(); }

private:
    SetAssocBuffer<USbbPayload> usbb_;
    SetAssocBuffer<RSbbPayload> rsbb_;
};

// Bounded return address stack; pushing past the depth drops the oldest entry.
class Ras {
public:
    explicit Ras(size_t depth) : depth_(depth) {}

    void push(uint64_t addr) {
        if (stack_.size() == depth_) stack_.pop_front();
        stack_.push_back(addr);
    }
    std::optional<uint64_t> pop() {
        if (stack_.empty()) return std::nullopt;
        uint64_t a = stack_.back();
        stack_.pop_back();
        return a;
    }
    size_t size() const { return stack_.size(); }
    void clear() { stack_.clear(); }

    Ras& operator=(const Ras&) = default;
    Ras(const Ras&) = default;

private:
    size_t depth_;
    std::deque<uint64_t> stack_;
};

// Per-structure bit accounting derived from the entry field layout.
struct StructAudit {
    std::string name;
    size_t entries = 0;
    size_t ways = 0;
    size_t sets = 0;
    std::vector<std::pair<std::string, unsigned>> fields;
    unsigned entry_bits() const;
    uint64_t total_bits() const;
    double kilobytes() const;
};

StructAudit audit_btb(size_t entries, size_t ways);
StructAudit audit_usbb(size_t entries, size_t ways);
StructAudit audit_rsbb(size_t entries, size_t ways);
std::string format_audit(const std::vector<StructAudit>& audits);

}  // namespace skia

#endif
