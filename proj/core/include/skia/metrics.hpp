#ifndef SKIA_METRICS_HPP
#define SKIA_METRICS_HPP

#include "skia/frontend_sim.hpp"

namespace skia {

// Per-1000-retired-instruction rates derived from raw counters.
struct Metrics {
    double btb_miss_mpki = 0.0;
    double btb_miss_l1_resident_mpki = 0.0;
    double btb_miss_l1_absent_mpki = 0.0;
    double decode_resteer_mpki = 0.0;
    double execute_resteer_mpki = 0.0;
    double decoder_idle_fraction = 0.0;  // idle cycles / cycles
};

// Requires stats.retired > 0; throws SimError otherwise.
Metrics compute_metrics(const Stats& stats);

double mpki(uint64_t events, uint64_t retired);

// Percentage drop going from `before` to `after` (50.0 means halved).
double percent_reduction(double before, double after);

// Deterministic report emitters. `label` names the run (e.g. the sbd mode).
std::string report_json(const Stats& stats, const SimConfig& config,
                        const std::string& label);
std::string csv_header();
std::string csv_row(const Stats& stats, const SimConfig& config, const std::string& label);

std::string opportunity_json(const OpportunityReport& report, const SimConfig& config);

}  // namespace skia

#endif
