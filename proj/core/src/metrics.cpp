#include "skia/metrics.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace skia {

double mpki(uint64_t events, uint64_t retired) {
    return retired ? double(events) * 1000.0 / double(retired) : 0.0;
}

double percent_reduction(double before, double after) {
    if (before == 0.0) return 0.0;
    return (before - after) / before * 100.0;
}

Metrics compute_metrics(const Stats& stats) {
    if (stats.retired == 0) throw SimError("metrics require retired > 0");
    Metrics m;
    m.btb_miss_mpki = mpki(stats.btb_miss_total, stats.retired);
    m.btb_miss_l1_resident_mpki = mpki(stats.btb_miss_l1_resident, stats.retired);
    m.btb_miss_l1_absent_mpki = mpki(stats.btb_miss_l1_absent, stats.retired);
    m.decode_resteer_mpki = mpki(stats.decode_resteers, stats.retired);
    m.execute_resteer_mpki = mpki(stats.execute_resteers, stats.retired);
    m.decoder_idle_fraction =
        stats.cycles ? double(stats.decoder_idle_cycles) / double(stats.cycles) : 0.0;
    return m;
}

namespace {

std::string fixed6(double v) {
    char buf[64];
    snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

nlohmann::json counters_json(const Stats& s) {
    nlohmann::json j;
    j["retired"] = s.retired;
    j["cycles"] = s.cycles;
    j["decoder_idle_cycles"] = s.decoder_idle_cycles;
    j["btb_miss"] = {{"total", s.btb_miss_total},
                     {"l1_resident", s.btb_miss_l1_resident},
                     {"l1_absent", s.btb_miss_l1_absent}};
    nlohmann::json by_class;
    for (size_t c = 0; c < s.btb_miss_by_class.size(); ++c)
        by_class[to_string(BranchClass(c))] = s.btb_miss_by_class[c];
    j["btb_miss"]["by_class"] = by_class;
    j["sbb"] = {{"insert_head", s.sbb_insert_head},
                {"insert_tail", s.sbb_insert_tail},
                {"insert_uncond", s.sbb_insert_by_kind[size_t(ShadowKind::Uncond)]},
                {"insert_call", s.sbb_insert_by_kind[size_t(ShadowKind::Call)]},
                {"insert_return", s.sbb_insert_by_kind[size_t(ShadowKind::Return)]},
                {"hits", s.sbb_hits},
                {"hits_committed", s.sbb_hits_committed},
                {"bogus_targets", s.sbb_bogus_targets}};
    j["resteers"] = {{"decode", s.decode_resteers}, {"execute", s.execute_resteers}};
    j["l1i"] = {{"demand_hits", s.l1i.demand_hits},
                {"demand_misses", s.l1i.demand_misses},
                {"prefetch_hits", s.l1i.prefetch_hits},
                {"prefetch_misses", s.l1i.prefetch_misses},
                {"wrong_path_hits", s.l1i.wrong_path_hits},
                {"wrong_path_misses", s.l1i.wrong_path_misses},
                {"wrong_path_fills", s.l1i.wrong_path_fills}};
    return j;
}

}  // namespace

std::string report_json(const Stats& stats, const SimConfig& config,
                        const std::string& label) {
    nlohmann::json j;
    j["label"] = label;
    j["config"] = nlohmann::json::parse(config.to_json());
    j["counters"] = counters_json(stats);
    if (stats.retired > 0) {
        const Metrics m = compute_metrics(stats);
        j["mpki"] = {{"btb_miss", fixed6(m.btb_miss_mpki)},
                     {"btb_miss_l1_resident", fixed6(m.btb_miss_l1_resident_mpki)},
                     {"btb_miss_l1_absent", fixed6(m.btb_miss_l1_absent_mpki)},
                     {"decode_resteer", fixed6(m.decode_resteer_mpki)},
                     {"execute_resteer", fixed6(m.execute_resteer_mpki)}};
        j["decoder_idle_fraction"] = fixed6(m.decoder_idle_fraction);
    }
    return j.dump(2);
}

std::string csv_header() {
    return "label,isa,sbd_mode,index_policy,btb_entries,usbb_entries,rsbb_entries,seed,"
           "retired,cycles,decoder_idle_cycles,"
           "btb_miss_total,btb_miss_l1_resident,btb_miss_l1_absent,btb_miss_mpki,"
           "sbb_insert_head,sbb_insert_tail,sbb_hits,sbb_hits_committed,sbb_bogus_targets,"
           "decode_resteers,execute_resteers,"
           "l1i_demand_hits,l1i_demand_misses,l1i_prefetch_hits,l1i_prefetch_misses,"
           "l1i_wrong_path_fills";
}

std::string csv_row(const Stats& s, const SimConfig& c, const std::string& label) {
    std::ostringstream os;
    os << label << ',' << to_string(c.isa) << ',' << to_string(c.sbd_mode) << ','
       << to_string(c.index_policy) << ',' << c.btb_entries << ',' << c.usbb_entries << ','
       << c.rsbb_entries << ',' << c.seed << ',' << s.retired << ',' << s.cycles << ','
       << s.decoder_idle_cycles << ',' << s.btb_miss_total << ',' << s.btb_miss_l1_resident
       << ',' << s.btb_miss_l1_absent << ','
       << fixed6(mpki(s.btb_miss_total, s.retired)) << ',' << s.sbb_insert_head << ','
       << s.sbb_insert_tail << ',' << s.sbb_hits << ',' << s.sbb_hits_committed << ','
       << s.sbb_bogus_targets << ',' << s.decode_resteers << ',' << s.execute_resteers << ','
       << s.l1i.demand_hits << ',' << s.l1i.demand_misses << ',' << s.l1i.prefetch_hits << ','
       << s.l1i.prefetch_misses << ',' << s.l1i.wrong_path_fills;
    return os.str();
}

std::string opportunity_json(const OpportunityReport& r, const SimConfig& config) {
    nlohmann::json j;
    j["config"] = nlohmann::json::parse(config.to_json());
    j["retired"] = r.retired;
    j["btb_miss"] = {{"total", r.btb_miss_total},
                     {"l1_resident", r.btb_miss_l1_resident},
                     {"l1_absent", r.btb_miss_l1_absent}};
    nlohmann::json by_class;
    for (size_t c = 0; c < r.btb_miss_by_class.size(); ++c)
        by_class[to_string(BranchClass(c))] = r.btb_miss_by_class[c];
    j["btb_miss"]["by_class"] = by_class;
    j["shadow_classification"] = {{"head", r.head_shadow_misses},
                                  {"tail", r.tail_shadow_misses},
                                  {"body", r.body_misses}};
    j["l1_resident_share"] = fixed6(r.l1_resident_share());
    j["btb_miss_mpki"] = fixed6(mpki(r.btb_miss_total, r.retired));
    return j.dump(2);
}

}  // namespace skia
