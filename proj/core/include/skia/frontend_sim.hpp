#ifndef SKIA_FRONTEND_SIM_HPP
#define SKIA_FRONTEND_SIM_HPP

#include <array>
#include <functional>

#include "skia/config.hpp"
#include "skia/predictors.hpp"
#include "skia/trace.hpp"

namespace skia {

struct Stats {
    uint64_t retired = 0;
    uint64_t cycles = 0;
    uint64_t decoder_idle_cycles = 0;

    L1Counters l1i;

    // A miss is counted when a committed-path taken branch finds no target in
    // the BTB nor (mode permitting) the SBB at prediction time.
    uint64_t btb_miss_total = 0;
    uint64_t btb_miss_l1_resident = 0;
    uint64_t btb_miss_l1_absent = 0;
    std::array<uint64_t, 7> btb_miss_by_class{};  // indexed by BranchClass

    uint64_t sbb_insert_head = 0;
    uint64_t sbb_insert_tail = 0;
    std::array<uint64_t, 3> sbb_insert_by_kind{};  // indexed by ShadowKind

    uint64_t sbb_hits = 0;            // SBB supplied a prediction on a BTB miss
    uint64_t sbb_hits_committed = 0;  // ... and that prediction committed
    uint64_t sbb_bogus_targets = 0;   // ... and decode proved the supply wrong

    uint64_t decode_resteers = 0;
    uint64_t execute_resteers = 0;

    bool operator==(const Stats&) const = default;
};

// BTB-miss opportunity breakdown measured with the SBD off, mirroring the
// front-end analysis that motivates shadow decoding: how many misses sit on
// L1-I-resident lines, and whether the missing branch had appeared in a
// previously fetched head or tail shadow region of its line.
struct OpportunityReport {
    uint64_t retired = 0;
    uint64_t btb_miss_total = 0;
    uint64_t btb_miss_l1_resident = 0;
    uint64_t btb_miss_l1_absent = 0;
    std::array<uint64_t, 7> btb_miss_by_class{};
    uint64_t head_shadow_misses = 0;
    uint64_t tail_shadow_misses = 0;
    uint64_t body_misses = 0;

    double l1_resident_share() const {
        return btb_miss_total ? double(btb_miss_l1_resident) / double(btb_miss_total) : 0.0;
    }
};

// Test instrumentation. Called synchronously from within run().
struct SimHooks {
    std::function<void(const ShadowBranch&)> on_sbb_insert;
};

// Trace-driven decoupled front-end simulation. Deterministic in
// (image, records, config). Throws SimError on trace/image inconsistency.
Stats run(const CodeImage& image, const std::vector<TraceRecord>& records,
          const SimConfig& config, const SimHooks& hooks = {});

// Runs with the SBD forced off and reports the miss breakdown.
OpportunityReport analyze(const CodeImage& image, const std::vector<TraceRecord>& records,
                          const SimConfig& config);

}  // namespace skia

#endif
