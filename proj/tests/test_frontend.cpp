#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "skia/frontend_sim.hpp"
#include "skia/metrics.hpp"
#include "skia/trace_gen.hpp"

using namespace skia;

namespace {

GenResult straight_line(size_t n) {
    CodeImage image;
    image.add_segment(0x400000, std::vector<uint8_t>(n, 0x00));
    std::vector<TraceRecord> records(n);
    for (size_t i = 0; i < n; ++i) {
        records[i].pc = 0x400000 + i;
        records[i].len = 1;
        records[i].cls = uint8_t(BranchClass::NonBranch);
    }
    return {std::move(image), std::move(records)};
}

GenResult small_hot_cold(uint64_t instrs = 40000) {
    GenParams p = *preset_params("hot-cold");
    p.instruction_count = instrs;
    return generate_synthetic(p);
}

uint64_t sum(const std::array<uint64_t, 7>& a) {
    return std::accumulate(a.begin(), a.end(), uint64_t(0));
}

}  // namespace

TEST_CASE("empty trace produces zeroed stats") {
    CodeImage image;
    image.add_segment(0x1000, {0x00});
    SimConfig cfg;
    Stats s = run(image, {}, cfg);
    CHECK(s == Stats{});
}

TEST_CASE("straight-line code is unaffected by the sbd mode") {
    auto gen = straight_line(3000);
    SimConfig cfg;
    cfg.sbd_mode = SbdMode::Off;
    Stats off = run(gen.image, gen.records, cfg);
    cfg.sbd_mode = SbdMode::Both;
    Stats both = run(gen.image, gen.records, cfg);

    CHECK(off.retired == 3000);
    CHECK(both.retired == 3000);
    CHECK(off.btb_miss_total == 0);
    CHECK(off.decode_resteers == 0);
    CHECK(off.execute_resteers == 0);
    CHECK(both.decode_resteers == 0);
    CHECK(both.execute_resteers == 0);
    CHECK(off.cycles == both.cycles);
    // No taken exits, so tail shadow work never triggers; head work can only
    // come from non-aligned line entries after resteers, of which there are
    // none.
    CHECK(both.sbb_hits == 0);
}

TEST_CASE("counter partitions stay consistent") {
    auto gen = small_hot_cold();
    SimConfig cfg;
    cfg.btb_entries = 512;
    cfg.usbb_entries = 64;
    cfg.rsbb_entries = 1200;
    for (SbdMode mode : {SbdMode::Off, SbdMode::HeadOnly, SbdMode::TailOnly, SbdMode::Both}) {
        cfg.sbd_mode = mode;
        Stats s = run(gen.image, gen.records, cfg);
        CAPTURE(to_string(mode));
        CHECK(s.retired == gen.records.size());
        CHECK(s.btb_miss_l1_resident + s.btb_miss_l1_absent == s.btb_miss_total);
        CHECK(sum(s.btb_miss_by_class) == s.btb_miss_total);
        CHECK(s.sbb_insert_head + s.sbb_insert_tail ==
              s.sbb_insert_by_kind[0] + s.sbb_insert_by_kind[1] + s.sbb_insert_by_kind[2]);
        CHECK(s.sbb_hits_committed + s.sbb_bogus_targets <= s.sbb_hits);
        CHECK(s.decoder_idle_cycles <= s.cycles);
        if (mode == SbdMode::Off) {
            CHECK(s.sbb_insert_head == 0);
            CHECK(s.sbb_insert_tail == 0);
            CHECK(s.sbb_hits == 0);
            CHECK(s.sbb_bogus_targets == 0);
        }
        if (mode == SbdMode::HeadOnly) CHECK(s.sbb_insert_tail == 0);
        if (mode == SbdMode::TailOnly) CHECK(s.sbb_insert_head == 0);
    }
}

TEST_CASE("shadow decoding reduces misses on the hot-cold pattern") {
    auto gen = small_hot_cold();
    SimConfig cfg;
    cfg.btb_entries = 512;
    cfg.usbb_entries = 64;
    cfg.rsbb_entries = 1200;

    cfg.sbd_mode = SbdMode::Off;
    Stats off = run(gen.image, gen.records, cfg);
    cfg.sbd_mode = SbdMode::Both;
    Stats both = run(gen.image, gen.records, cfg);

    REQUIRE(off.btb_miss_total > 0);
    CHECK(both.btb_miss_total < off.btb_miss_total);
    CHECK(both.sbb_hits > 0);
    CHECK(both.sbb_hits_committed > 0);
    CHECK(both.decode_resteers <= off.decode_resteers);
    CHECK(both.decoder_idle_cycles < off.decoder_idle_cycles);
}

TEST_CASE("simulation is deterministic") {
    auto gen = small_hot_cold(20000);
    SimConfig cfg;
    cfg.sbd_mode = SbdMode::Both;
    Stats a = run(gen.image, gen.records, cfg);
    Stats b = run(gen.image, gen.records, cfg);
    CHECK(a == b);
    CHECK(report_json(a, cfg, "det") == report_json(b, cfg, "det"));
}

TEST_CASE("no shadow bytes means no shadow insertions") {
    GenParams p = *preset_params("no-shadow");
    p.instruction_count = 20000;
    auto gen = generate_synthetic(p);
    SimConfig cfg;
    cfg.sbd_mode = SbdMode::Both;
    uint64_t hook_count = 0;
    SimHooks hooks;
    hooks.on_sbb_insert = [&](const ShadowBranch&) { hook_count++; };
    Stats s = run(gen.image, gen.records, cfg, hooks);
    CHECK(s.retired == 20000);
    CHECK(s.sbb_insert_head == 0);
    CHECK(s.sbb_insert_tail == 0);
    CHECK(hook_count == 0);
}

TEST_CASE("insert hook observes every insertion") {
    auto gen = small_hot_cold(20000);
    SimConfig cfg;
    cfg.sbd_mode = SbdMode::Both;
    uint64_t hook_count = 0;
    std::array<uint64_t, 3> by_kind{};
    SimHooks hooks;
    hooks.on_sbb_insert = [&](const ShadowBranch& sb) {
        hook_count++;
        by_kind[size_t(sb.kind)]++;
    };
    Stats s = run(gen.image, gen.records, cfg, hooks);
    CHECK(hook_count == s.sbb_insert_head + s.sbb_insert_tail);
    CHECK(by_kind == s.sbb_insert_by_kind);
}

TEST_CASE("opportunity analysis partitions the misses") {
    auto gen = small_hot_cold();
    SimConfig cfg;
    cfg.btb_entries = 512;
    cfg.usbb_entries = 64;
    cfg.rsbb_entries = 1200;
    OpportunityReport rep = analyze(gen.image, gen.records, cfg);
    CHECK(rep.retired == gen.records.size());
    REQUIRE(rep.btb_miss_total > 0);
    CHECK(rep.btb_miss_l1_resident + rep.btb_miss_l1_absent == rep.btb_miss_total);
    CHECK(rep.head_shadow_misses + rep.tail_shadow_misses + rep.body_misses ==
          rep.btb_miss_total);
    CHECK(sum(rep.btb_miss_by_class) == rep.btb_miss_total);
    CHECK(rep.l1_resident_share() >= 0.0);
    CHECK(rep.l1_resident_share() <= 1.0);

    // The analysis run matches the sbd-off simulation counter for counter.
    cfg.sbd_mode = SbdMode::Off;
    Stats off = run(gen.image, gen.records, cfg);
    CHECK(rep.btb_miss_total == off.btb_miss_total);
    CHECK(rep.btb_miss_l1_resident == off.btb_miss_l1_resident);
}

TEST_CASE("gshare direction prediction still commits the full trace") {
    auto gen = small_hot_cold(20000);
    SimConfig cfg;
    cfg.direction_predictor = DirPredictor::Gshare;
    cfg.sbd_mode = SbdMode::Both;
    Stats s = run(gen.image, gen.records, cfg);
    CHECK(s.retired == 20000);
    // Wrong direction guesses surface as execute resteers.
    CHECK(s.execute_resteers > 0);
}

TEST_CASE("metrics reject empty runs and scale per kilo-instruction") {
    CHECK_THROWS_AS(compute_metrics(Stats{}), SimError);
    Stats s;
    s.retired = 2000;
    s.cycles = 10000;
    s.decoder_idle_cycles = 2500;
    s.btb_miss_total = 50;
    s.btb_miss_l1_resident = 40;
    s.btb_miss_l1_absent = 10;
    s.decode_resteers = 8;
    s.execute_resteers = 2;
    Metrics m = compute_metrics(s);
    CHECK(m.btb_miss_mpki == doctest::Approx(25.0));
    CHECK(m.btb_miss_l1_resident_mpki == doctest::Approx(20.0));
    CHECK(m.btb_miss_l1_absent_mpki == doctest::Approx(5.0));
    CHECK(m.decode_resteer_mpki == doctest::Approx(4.0));
    CHECK(m.execute_resteer_mpki == doctest::Approx(1.0));
    CHECK(m.decoder_idle_fraction == doctest::Approx(0.25));

    CHECK(mpki(50, 2000) == doctest::Approx(25.0));
    CHECK(percent_reduction(100.0, 75.0) == doctest::Approx(25.0));
}

TEST_CASE("reports carry the label and the csv stays aligned") {
    auto gen = small_hot_cold(20000);
    SimConfig cfg;
    cfg.sbd_mode = SbdMode::Both;
    Stats s = run(gen.image, gen.records, cfg);
    std::string j = report_json(s, cfg, "mylabel");
    CHECK(j.find("\"mylabel\"") != std::string::npos);
    CHECK(j.find("\"mpki\"") != std::string::npos);
    CHECK(j.find("decoder_idle_fraction") != std::string::npos);

    const std::string header = csv_header();
    const std::string row = csv_row(s, cfg, "mylabel");
    const auto commas = [](const std::string& t) {
        return std::count(t.begin(), t.end(), ',');
    };
    CHECK(commas(header) == commas(row));
    CHECK(row.find("mylabel") == 0);
}
