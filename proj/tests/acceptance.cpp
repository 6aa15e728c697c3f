// End-to-end acceptance checks. Each numbered check prints one PASS/FAIL
// line; the process exits nonzero if any check fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "skia/frontend_sim.hpp"
#include "skia/metrics.hpp"
#include "skia/trace_gen.hpp"

using namespace skia;

namespace {

int failures = 0;

void report(int n, const std::string& what, bool ok, const std::string& detail = "") {
    std::cout << "criterion " << n << " (" << what << "): " << (ok ? "PASS" : "FAIL");
    if (!detail.empty()) std::cout << "  [" << detail << "]";
    std::cout << std::endl;
    if (!ok) failures++;
}

// Recursive oracle for start-index validity, decoding the raw bytes at every
// step rather than consulting the length vector.
bool oracle_valid(const CacheLineView& line, IsaKind isa, size_t pos) {
    if (pos == line.entry_offset) return true;
    if (pos > line.entry_offset) return false;
    auto d = decode_at(std::span<const uint8_t>(line.bytes), pos, isa);
    return d && oracle_valid(line, isa, pos + d->length);
}

void check_path_validation() {
    const auto t0 = std::chrono::steady_clock::now();
    size_t checked = 0, wrong = 0;
    for (IsaKind isa : {IsaKind::SVL, IsaKind::X86Subset}) {
        std::mt19937_64 rng(isa == IsaKind::SVL ? 101 : 202);
        for (size_t i = 0; i < 10000; ++i) {
            CacheLineView line;
            line.base_addr = (rng() << 6) & 0xFFFFFFFFC0ull;
            for (auto& b : line.bytes) b = uint8_t(rng());
            line.entry_offset = uint8_t(1 + rng() % 63);
            const auto lv = compute_length_vector(line, isa);
            const auto valid = enumerate_valid_paths(lv, line.entry_offset);
            std::vector<uint8_t> want;
            for (size_t s = 0; s < line.entry_offset; ++s)
                if (oracle_valid(line, isa, s)) want.push_back(uint8_t(s));
            checked++;
            if (valid != want) wrong++;
        }
    }
    const double secs = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - t0).count();
    std::ostringstream d;
    d << checked << " lines, " << wrong << " disagreements, " << secs << "s";
    report(1, "path validation vs recursive oracle", wrong == 0 && secs < 60.0, d.str());
}

void check_reference_line() {
    CacheLineView line;
    line.base_addr = 0x10000;
    line.bytes.fill(0x06);
    const uint8_t head[] = {0x50, 0x6A, 0x71, 0xE9, 0xF9, 0x03, 0x00, 0x00};
    std::copy(std::begin(head), std::end(head), line.bytes.begin());
    line.entry_offset = 8;

    const std::string dump = dump_line_analysis(line, IsaKind::X86Subset);
    const bool starts_ok = dump.find("valid_starts: {0, 1, 3}") != std::string::npos;
    const bool select_ok = dump.find("selected first=0 zero=0 merge=3") != std::string::npos;

    const auto branches = decode_head(line, IsaKind::X86Subset, IndexPolicy::FirstIndex);
    const bool target_ok = branches.size() == 1 &&
                           branches[0].kind == ShadowKind::Uncond &&
                           branches[0].pc == 0x10003 &&
                           branches[0].target == 0x10003 + 5 + 0x3F9;
    report(2, "reference head-region line", starts_ok && select_ok && target_ok);
}

void check_storage_budget() {
    const auto btb = audit_btb(8192, 4);
    const auto usbb = audit_usbb(768, 4);
    const auto rsbb = audit_rsbb(2024, 4);
    const bool ok = btb.entry_bits() == 78 && usbb.entry_bits() == 78 &&
                    rsbb.entry_bits() == 20 &&
                    std::abs(btb.kilobytes() - 78.0) < 1e-9 &&
                    std::abs(usbb.kilobytes() - 7.3125) < 1e-9 &&
                    std::abs(rsbb.kilobytes() - 4.94) <= 0.01;
    char detail[96];
    snprintf(detail, sizeof detail, "btb=%.4fKB usbb=%.4fKB rsbb=%.4fKB",
             btb.kilobytes(), usbb.kilobytes(), rsbb.kilobytes());
    report(3, "storage budget audit", ok, detail);
}

// Reference model of one NRU set with the retired bit.
struct RefSet {
    struct W {
        bool valid = false, use = false, retired = false;
        uint16_t tag = 0;
    };
    std::vector<W> ways;
    bool use_retired;
    RefSet(size_t n, bool r) : ways(n), use_retired(r) {}
    int find(uint16_t tag) const {
        for (size_t i = 0; i < ways.size(); ++i)
            if (ways[i].valid && ways[i].tag == tag) return int(i);
        return -1;
    }
    void touch(int i) {
        ways[i].use = true;
        for (const W& w : ways)
            if (!w.use) return;
        for (W& w : ways) w.use = false;
        ways[i].use = true;
    }
    void insert(uint16_t tag) {
        int v = -1;
        for (size_t i = 0; i < ways.size() && v < 0; ++i)
            if (!ways[i].valid) v = int(i);
        for (int rp = 0; rp < (use_retired ? 2 : 1) && v < 0; ++rp)
            for (int up = 0; up < 2 && v < 0; ++up)
                for (size_t i = 0; i < ways.size() && v < 0; ++i) {
                    if (use_retired && ways[i].retired != (rp == 1)) continue;
                    if (ways[i].use != (up == 1)) continue;
                    v = int(i);
                }
        ways[v] = W{true, false, false, tag};
        touch(v);
    }
};

struct Empty {};

void check_replacement() {
    size_t sequences = 0, wrong = 0;
    std::mt19937_64 rng(303);
    for (size_t seq = 0; seq < 10000; ++seq) {
        const size_t nways = 2 + rng() % 7;
        const bool use_retired = rng() & 1;
        SetAssocBuffer<Empty> buf(nways, nways, use_retired);
        RefSet ref(nways, use_retired);
        bool bad = false;
        for (int step = 0; step < 40 && !bad; ++step) {
            const uint64_t key = rng() % 32;
            const uint16_t tag = buf.tag_of(key);
            auto* w = buf.find(key);
            const int r = ref.find(tag);
            if ((w != nullptr) != (r >= 0)) {
                bad = true;
                break;
            }
            switch (rng() % 3) {
                case 0:
                    if (w) {
                        buf.touch(w);
                        ref.touch(r);
                    }
                    break;
                case 1:
                    if (w) {
                        buf.touch(w);
                        ref.touch(r);
                    } else {
                        buf.insert(key);
                        ref.insert(tag);
                    }
                    break;
                default:
                    if (w) {
                        w->retired = true;
                        ref.ways[r].retired = true;
                    }
                    break;
            }
            for (uint64_t k = 0; k < 32 && !bad; ++k)
                if ((buf.find(k) != nullptr) != (ref.find(buf.tag_of(k)) >= 0)) bad = true;
        }
        sequences++;
        if (bad) wrong++;
    }
    std::ostringstream d;
    d << sequences << " sequences, " << wrong << " diverged";
    report(4, "replacement vs reference model", wrong == 0, d.str());
}

struct RunSet {
    Metrics off, both, iso, head, tail;
    Stats off_s, both_s;
    OpportunityReport opp;
};

RunSet run_hot_cold_suite(const GenResult& gen) {
    SimConfig cfg;
    cfg.btb_entries = 512;
    cfg.usbb_entries = 192;
    cfg.rsbb_entries = 1200;

    RunSet rs;
    cfg.sbd_mode = SbdMode::Off;
    rs.off_s = run(gen.image, gen.records, cfg);
    rs.off = compute_metrics(rs.off_s);
    rs.opp = analyze(gen.image, gen.records, cfg);

    cfg.sbd_mode = SbdMode::Both;
    rs.both_s = run(gen.image, gen.records, cfg);
    rs.both = compute_metrics(rs.both_s);

    cfg.sbd_mode = SbdMode::HeadOnly;
    rs.head = compute_metrics(run(gen.image, gen.records, cfg));
    cfg.sbd_mode = SbdMode::TailOnly;
    rs.tail = compute_metrics(run(gen.image, gen.records, cfg));

    // Iso-storage baseline: the SBB bit budget converted into BTB entries.
    SimConfig iso = cfg;
    iso.sbd_mode = SbdMode::Off;
    iso.btb_entries = 1012;  // 512 + (192*78 + 1200*20) / 78, rounded to a set
    rs.iso = compute_metrics(run(gen.image, gen.records, iso));
    return rs;
}

void check_hot_cold_effect(const RunSet& rs) {
    const bool share_ok = rs.opp.l1_resident_share() >= 0.5;
    const bool order_ok = rs.both.btb_miss_mpki < rs.iso.btb_miss_mpki &&
                          rs.iso.btb_miss_mpki < rs.off.btb_miss_mpki;
    const bool idle_ok = rs.both_s.decoder_idle_cycles < rs.off_s.decoder_idle_cycles;
    const bool partial_ok = rs.head.btb_miss_mpki < rs.off.btb_miss_mpki &&
                            rs.tail.btb_miss_mpki < rs.off.btb_miss_mpki &&
                            rs.both.btb_miss_mpki <=
                                std::min(rs.head.btb_miss_mpki, rs.tail.btb_miss_mpki);
    char detail[160];
    snprintf(detail, sizeof detail,
             "share=%.3f mpki off=%.2f iso=%.2f both=%.2f head=%.2f tail=%.2f",
             rs.opp.l1_resident_share(), rs.off.btb_miss_mpki, rs.iso.btb_miss_mpki,
             rs.both.btb_miss_mpki, rs.head.btb_miss_mpki, rs.tail.btb_miss_mpki);
    report(5, "hot-cold miss reduction", share_ok && order_ok && idle_ok && partial_ok,
           detail);
}

// True instruction boundaries of one line, from a linear decode at offset 0.
// Every generated line begins on an instruction boundary.
std::map<uint64_t, ShadowBranch> line_truth(const CodeImage& image, uint64_t line_addr,
                                            IsaKind isa) {
    std::map<uint64_t, ShadowBranch> out;
    const auto bytes = image.read_line(line_addr, isa);
    size_t pos = 0;
    while (pos < kLineBytes) {
        auto d = decode_at(std::span<const uint8_t>(bytes), pos, isa);
        if (!d || pos + d->length > kLineBytes) break;
        const uint64_t pc = line_addr + pos;
        if (is_sbb_supported(d->cls)) {
            ShadowBranch sb;
            sb.pc = pc;
            sb.kind = d->cls == BranchClass::Return ? ShadowKind::Return
                      : d->cls == BranchClass::Call ? ShadowKind::Call
                                                    : ShadowKind::Uncond;
            sb.target = d->has_disp() ? branch_target(pc, *d) : 0;
            out[pc] = sb;
        }
        pos += d->length;
    }
    return out;
}

void check_bogus_rate() {
    // Synthetic ISA: at the default SBB geometry every supplied target must
    // check out at decode.
    GenParams p = *preset_params("hot-cold");
    p.instruction_count = 200000;
    auto gen = generate_synthetic(p);
    SimConfig cfg;
    cfg.btb_entries = 512;
    cfg.sbd_mode = SbdMode::Off;
    const Stats off = run(gen.image, gen.records, cfg);
    cfg.sbd_mode = SbdMode::Both;
    const Stats both = run(gen.image, gen.records, cfg);
    const bool svl_ok = both.sbb_bogus_targets == 0 &&
                        both.decode_resteers <= off.decode_resteers;

    // x86: every shadow insertion is checked against a linear decode of its
    // line; under 1% may be phantom branches from misaligned decode starts.
    GenParams px = *preset_params("hot-cold");
    px.isa = IsaKind::X86Subset;
    px.instruction_count = 200000;
    auto genx = generate_synthetic(px);
    cfg.isa = IsaKind::X86Subset;
    uint64_t inserts = 0, phantom = 0;
    std::map<uint64_t, std::map<uint64_t, ShadowBranch>> truth_cache;
    SimHooks hooks;
    hooks.on_sbb_insert = [&](const ShadowBranch& sb) {
        inserts++;
        const uint64_t line = sb.pc & ~63ull;
        auto it = truth_cache.find(line);
        if (it == truth_cache.end())
            it = truth_cache.emplace(line, line_truth(genx.image, line, px.isa)).first;
        const auto& truth = it->second;
        const auto hit = truth.find(sb.pc);
        if (hit == truth.end() || hit->second.kind != sb.kind ||
            hit->second.target != sb.target)
            phantom++;
    };
    const Stats bx = run(genx.image, genx.records, cfg, hooks);
    const bool x86_ok = inserts > 0 && double(phantom) < 0.01 * double(inserts) &&
                        bx.retired == px.instruction_count;

    std::ostringstream d;
    d << "svl bogus=" << both.sbb_bogus_targets << " resteers both=" << both.decode_resteers
      << " off=" << off.decode_resteers << "; x86 inserts=" << inserts
      << " phantom=" << phantom;
    report(6, "shadow supply integrity", svl_ok && x86_ok, d.str());
}

void check_determinism(const GenResult& gen) {
    SimConfig cfg;
    cfg.btb_entries = 512;
    cfg.usbb_entries = 192;
    cfg.rsbb_entries = 1200;
    cfg.sbd_mode = SbdMode::Both;
    const Stats a = run(gen.image, gen.records, cfg);
    const Stats b = run(gen.image, gen.records, cfg);
    const bool ok = a == b &&
                    report_json(a, cfg, "rep") == report_json(b, cfg, "rep");
    report(7, "run-to-run determinism", ok);
}

void check_corpus() {
#ifndef TEST_DATA_DIR
#error TEST_DATA_DIR must be defined
#endif
    std::ifstream in(std::string(TEST_DATA_DIR) + "/x86_corpus.txt");
    size_t rows = 0, mismatches = 0;
    std::string hex, cls;
    int len;
    while (in >> hex >> len >> cls) {
        std::vector<uint8_t> bytes;
        for (size_t i = 0; i + 1 < hex.size(); i += 2)
            bytes.push_back(uint8_t(std::stoul(hex.substr(i, 2), nullptr, 16)));
        auto d = decode_x86(bytes, 0);
        const char* got = "fail";
        if (d) got = to_string(d->cls);
        if (!d || d->length != len || cls != got) mismatches++;
        rows++;
    }
    std::ostringstream d;
    d << rows << " rows, " << mismatches << " mismatches";
    report(8, "x86 corpus agreement", rows >= 1000 && mismatches == 0, d.str());
}

}  // namespace

int main() {
    check_path_validation();
    check_reference_line();
    check_storage_budget();
    check_replacement();

    GenParams p = *preset_params("hot-cold");  // 500000 instructions, seed 7
    const GenResult gen = generate_synthetic(p);
    const RunSet rs = run_hot_cold_suite(gen);
    check_hot_cold_effect(rs);
    check_bogus_rate();
    check_determinism(gen);
    check_corpus();

    if (failures) {
        std::cout << failures << " criterion check(s) failed" << std::endl;
        return 1;
    }
    std::cout << "all criteria passed" << std::endl;
    return 0;
}
