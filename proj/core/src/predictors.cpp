#include "skia/predictors.hpp"

#include <sstream>

namespace skia {

BtbType btb_type_of(BranchClass cls) {
    switch (cls) {
        case BranchClass::DirectCond: return BtbType::DirectCond;
        case BranchClass::Call: return BtbType::Call;
        case BranchClass::IndirectCall: return BtbType::Call;
        case BranchClass::Return: return BtbType::Return;
        default: return BtbType::DirectUncond;
    }
}

const char* to_string(BtbType t) {
    switch (t) {
        case BtbType::DirectCond: return "DirectCond";
        case BtbType::DirectUncond: return "DirectUncond";
        case BtbType::Call: return "Call";
        case BtbType::Return: return "Return";
    }
    return "?";
}

void Sbb::insert(const ShadowBranch& sb) {
    if (sb.kind == ShadowKind::Return) {
        const uint64_t line = sb.pc >> 6;
        const uint8_t off = sb.pc & 63;
        auto* w = rsbb_.find(line, [&](const auto& way) { return way.payload.offset == off; });
        if (!w) {
            w = &rsbb_.insert(line);
            w->payload.offset = off;
        } else {
            rsbb_.touch(w);
        }
    } else {
        auto* w = usbb_.find(sb.pc);
        if (!w) w = &usbb_.insert(sb.pc);
        else usbb_.touch(w);
        w->payload.is_call = sb.kind == ShadowKind::Call;
        w->payload.target = sb.target;
    }
}

std::optional<SbbPrediction> Sbb::lookup(uint64_t pc) {
    if (auto* w = usbb_.find(pc)) {
        usbb_.touch(w);
        return SbbPrediction{SbbPrediction::Source::USbb,
                             w->payload.is_call ? ShadowKind::Call : ShadowKind::Uncond,
                             w->payload.target};
    }
    const uint64_t line = pc >> 6;
    const uint8_t off = pc & 63;
    if (auto* w = rsbb_.find(line, [&](const auto& way) { return way.payload.offset == off; })) {
        rsbb_.touch(w);
        return SbbPrediction{SbbPrediction::Source::RSbb, ShadowKind::Return, 0};
    }
    return std::nullopt;
}

std::optional<SbbPrediction> Sbb::peek(uint64_t pc) const {
    auto* self = const_cast<Sbb*>(this);
    if (auto* w = self->usbb_.find(pc)) {
        return SbbPrediction{SbbPrediction::Source::USbb,
                             w->payload.is_call ? ShadowKind::Call : ShadowKind::Uncond,
                             w->payload.target};
    }
    const uint64_t line = pc >> 6;
    const uint8_t off = pc & 63;
    if (auto* w = self->rsbb_.find(line, [&](const auto& way) { return way.payload.offset == off; })) {
        (void)w;
        return SbbPrediction{SbbPrediction::Source::RSbb, ShadowKind::Return, 0};
    }
    return std::nullopt;
}

void Sbb::mark_retired(uint64_t pc) {
    if (auto* w = usbb_.find(pc)) {
        w->retired = true;
        return;
    }
    const uint64_t line = pc >> 6;
    const uint8_t off = pc & 63;
    if (auto* w = rsbb_.find(line, [&](const auto& way) { return way.payload.offset == off; }))
        w->retired = true;
}

void Sbb::invalidate(uint64_t pc) {
    if (auto* w = usbb_.find(pc)) {
        w->valid = false;
        return;
    }
    const uint64_t line = pc >> 6;
    const uint8_t off = pc & 63;
    if (auto* w = rsbb_.find(line, [&](const auto& way) { return way.payload.offset == off; }))
        w->valid = false;
}

unsigned StructAudit::entry_bits() const {
    unsigned n = 0;
    for (const auto& [name, bits] : fields) n += bits;
    return n;
}

uint64_t StructAudit::total_bits() const { return uint64_t(entries) * entry_bits(); }

double StructAudit::kilobytes() const { return double(total_bits()) / 8.0 / 1024.0; }

StructAudit audit_btb(size_t entries, size_t ways) {
    return StructAudit{"BTB", entries, ways, entries / ways,
                       {{"tag", kTagBits}, {"valid", 1}, {"lru", 1}, {"type", 2}, {"target", 64}}};
}

StructAudit audit_usbb(size_t entries, size_t ways) {
    return StructAudit{"U-SBB", entries, ways, entries / ways,
                       {{"tag", kTagBits}, {"valid", 1}, {"lru", 1}, {"retired", 1},
                        {"is_call", 1}, {"target", 64}}};
}

StructAudit audit_rsbb(size_t entries, size_t ways) {
    return StructAudit{"R-SBB", entries, ways, entries / ways,
                       {{"tag", kTagBits}, {"valid", 1}, {"lru", 1}, {"retired", 1},
                        {"offset", 6}, {"spare", 1}}};
}

std::string format_audit(const std::vector<StructAudit>& audits) {
    std::ostringstream os;
    for (const auto& a : audits) {
        os << a.name << ": entries=" << a.entries << " ways=" << a.ways
           << " sets=" << a.sets << " entry_bits=" << a.entry_bits() << " (";
        for (size_t i = 0; i < a.fields.size(); ++i) {
            os << (i ? " " : "") << a.fields[i].first << "=" << a.fields[i].second;
        }
        os << ") total_bits=" << a.total_bits();
        char kb[32];
        snprintf(kb, sizeof kb, "%.4f", a.kilobytes());
        os << " kb=" << kb << "\n";
    }
    return os.str();
}

}  // namespace skia
