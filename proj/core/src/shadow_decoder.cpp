#include "skia/shadow_decoder.hpp"

#include <algorithm>
#include <cassert>
#include <set>
#include <sstream>

namespace skia {

const char* to_string(ShadowKind k) {
    switch (k) {
        case ShadowKind::Uncond: return "Uncond";
        case ShadowKind::Call: return "Call";
        case ShadowKind::Return: return "Return";
    }
    return "?";
}

const char* to_string(IndexPolicy p) {
    switch (p) {
        case IndexPolicy::FirstIndex: return "first";
        case IndexPolicy::ZeroIndex: return "zero";
        case IndexPolicy::MergeIndex: return "merge";
    }
    return "?";
}

std::optional<IndexPolicy> index_policy_from_string(std::string_view s) {
    if (s == "first") return IndexPolicy::FirstIndex;
    if (s == "zero") return IndexPolicy::ZeroIndex;
    if (s == "merge") return IndexPolicy::MergeIndex;
    return std::nullopt;
}

LengthVector compute_length_vector(const CacheLineView& line, IsaKind isa) {
    assert(line.entry_offset >= 1);
    LengthVector lv;
    lv.lengths.resize(line.entry_offset, 0);
    for (size_t i = 0; i < line.entry_offset; ++i) {
        if (auto d = decode_at(line.bytes, i, isa)) lv.lengths[i] = d->length;
    }
    return lv;
}

namespace {

// Walks p <- p + lengths[p] from `start`; fills `visited` with the indices
// touched (start included, entry_offset excluded). True iff the walk lands
// exactly on entry_offset.
bool walk_path(const LengthVector& lv, uint8_t entry_offset, uint8_t start,
               std::vector<uint8_t>* visited = nullptr) {
    size_t p = start;
    while (p < entry_offset) {
        if (lv.lengths[p] == 0) return false;
        if (visited) visited->push_back(static_cast<uint8_t>(p));
        p += lv.lengths[p];
    }
    return p == entry_offset;
}

}  // namespace

std::vector<uint8_t> enumerate_valid_paths(const LengthVector& lv, uint8_t entry_offset) {
    std::vector<uint8_t> valid;
    for (uint8_t s = 0; s < entry_offset; ++s) {
        if (walk_path(lv, entry_offset, s)) valid.push_back(s);
    }
    return valid;
}

std::optional<uint8_t> select_start_index(const std::vector<uint8_t>& valid,
                                          const LengthVector& lv, uint8_t entry_offset,
                                          IndexPolicy policy, size_t max_valid_paths) {
    if (valid.empty() || valid.size() > max_valid_paths) return std::nullopt;

    switch (policy) {
        case IndexPolicy::FirstIndex:
            return valid.front();
        case IndexPolicy::ZeroIndex:
            if (valid.front() == 0) return uint8_t{0};
            return std::nullopt;
        case IndexPolicy::MergeIndex: {
            // Convergence point: the smallest index every valid walk visits.
            std::set<uint8_t> common;
            {
                std::vector<uint8_t> v;
                walk_path(lv, entry_offset, valid.front(), &v);
                common.insert(v.begin(), v.end());
            }
            for (size_t i = 1; i < valid.size(); ++i) {
                std::vector<uint8_t> v;
                walk_path(lv, entry_offset, valid[i], &v);
                std::set<uint8_t> s(v.begin(), v.end());
                std::set<uint8_t> inter;
                std::set_intersection(common.begin(), common.end(), s.begin(), s.end(),
                                      std::inserter(inter, inter.begin()));
                common = std::move(inter);
            }
            if (common.empty()) return std::nullopt;
            return *common.begin();
        }
    }
    return std::nullopt;
}

namespace {

std::optional<ShadowKind> shadow_kind(BranchClass cls) {
    switch (cls) {
        case BranchClass::DirectUncond: return ShadowKind::Uncond;
        case BranchClass::Call: return ShadowKind::Call;
        case BranchClass::Return: return ShadowKind::Return;
        default: return std::nullopt;
    }
}

void emit_if_supported(const CacheLineView& line, size_t offset, const DecodedInstr& d,
                       ShadowOrigin origin, std::vector<ShadowBranch>* out) {
    auto kind = shadow_kind(d.cls);
    if (!kind) return;
    ShadowBranch sb;
    sb.kind = *kind;
    sb.pc = line.base_addr + offset;
    sb.line_offset = static_cast<uint8_t>(offset);
    sb.origin = origin;
    if (*kind != ShadowKind::Return) sb.target = branch_target(sb.pc, d);
    out->push_back(sb);
}

}  // namespace

std::vector<ShadowBranch> decode_head(const CacheLineView& line, IsaKind isa,
                                      IndexPolicy policy, size_t max_valid_paths) {
    std::vector<ShadowBranch> out;
    if (line.entry_offset == 0) return out;

    const LengthVector lv = compute_length_vector(line, isa);
    const auto valid = enumerate_valid_paths(lv, line.entry_offset);
    const auto start = select_start_index(valid, lv, line.entry_offset, policy, max_valid_paths);
    if (!start) return out;

    size_t p = *start;
    while (p < line.entry_offset) {
        auto d = decode_at(line.bytes, p, isa);
        assert(d && d->length == lv.lengths[p]);
        emit_if_supported(line, p, *d, ShadowOrigin::Head, &out);
        p += d->length;
    }
    return out;
}

std::vector<ShadowBranch> decode_tail(const CacheLineView& line, IsaKind isa) {
    assert(line.tail_start.has_value());
    std::vector<ShadowBranch> out;
    size_t p = *line.tail_start;
    while (p < kLineBytes) {
        auto d = decode_at(line.bytes, p, isa);
        if (!d) break;  // decode failure or encoding crossing byte 63
        emit_if_supported(line, p, *d, ShadowOrigin::Tail, &out);
        p += d->length;
    }
    return out;
}

std::string dump_line_analysis(const CacheLineView& line, IsaKind isa,
                               size_t max_valid_paths) {
    std::ostringstream os;
    os << std::hex;
    os << "line 0x" << line.base_addr << " isa " << to_string(isa) << std::dec
       << " entry_offset " << int(line.entry_offset) << " tail_start ";
    if (line.tail_start) os << int(*line.tail_start);
    else os << "-";
    os << "\n";

    if (line.entry_offset == 0) {
        os << "no head region\n";
    } else {
        const LengthVector lv = compute_length_vector(line, isa);
        os << "length_vector:";
        for (uint8_t l : lv.lengths) os << " " << int(l);
        os << "\n";

        const auto valid = enumerate_valid_paths(lv, line.entry_offset);
        os << "valid_starts: {";
        for (size_t i = 0; i < valid.size(); ++i) os << (i ? ", " : "") << int(valid[i]);
        os << "}\n";
        os << "paths_capped: " << (valid.size() > max_valid_paths ? "yes" : "no") << "\n";

        os << "selected";
        for (auto pol : {IndexPolicy::FirstIndex, IndexPolicy::ZeroIndex, IndexPolicy::MergeIndex}) {
            auto s = select_start_index(valid, lv, line.entry_offset, pol, max_valid_paths);
            os << " " << to_string(pol) << "=";
            if (s) os << int(*s);
            else os << "-";
        }
        os << "\n";

        auto branches = decode_head(line, isa, IndexPolicy::FirstIndex, max_valid_paths);
        os << "head_branches (policy first):\n";
        if (branches.empty()) os << "  (none)\n";
        for (const auto& b : branches) {
            os << "  offset=" << int(b.line_offset) << " kind=" << to_string(b.kind)
               << std::hex << " pc=0x" << b.pc;
            if (b.kind != ShadowKind::Return) os << " target=0x" << b.target;
            os << std::dec << "\n";
        }
    }

    os << "tail_branches:\n";
    if (!line.tail_start) {
        os << "  (no tail region)\n";
    } else {
        auto branches = decode_tail(line, isa);
        if (branches.empty()) os << "  (none)\n";
        for (const auto& b : branches) {
            os << "  offset=" << int(b.line_offset) << " kind=" << to_string(b.kind)
               << std::hex << " pc=0x" << b.pc;
            if (b.kind != ShadowKind::Return) os << " target=0x" << b.target;
            os << std::dec << "\n";
        }
    }
    return os.str();
}

}  // namespace skia
