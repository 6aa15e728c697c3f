#ifndef SKIA_CONFIG_HPP
#define SKIA_CONFIG_HPP

#include <cstdint>
#include <string>

#include "skia/shadow_decoder.hpp"

namespace skia {

enum class SbdMode : uint8_t { Off, HeadOnly, TailOnly, Both };
enum class DirPredictor : uint8_t { Oracle, Gshare };

const char* to_string(SbdMode m);
const char* to_string(DirPredictor p);
std::optional<SbdMode> sbd_mode_from_string(std::string_view s);

struct SimConfig {
    IsaKind isa = IsaKind::SVL;

    size_t btb_entries = 8192;
    size_t usbb_entries = 768;
    size_t rsbb_entries = 2024;
    size_t assoc_ways = 4;
    size_t ras_depth = 32;

    size_t l1i_size_bytes = 32 * 1024;
    size_t l1i_ways = 8;
    uint64_t l1i_miss_latency = 30;

    size_t ftq_entries = 24;
    size_t decode_width = 12;
    uint64_t fetch_to_decode_depth = 3;
    uint64_t decode_resteer_repair = 2;
    uint64_t execute_resteer_penalty = 12;
    uint64_t sbd_delay = 4;

    SbdMode sbd_mode = SbdMode::Both;
    DirPredictor direction_predictor = DirPredictor::Oracle;
    size_t gshare_bits = 14;
    IndexPolicy index_policy = IndexPolicy::FirstIndex;
    size_t max_valid_paths = kDefaultMaxValidPaths;
    bool invalidate_on_bogus = true;

    uint64_t seed = 1;

    // Throws SimError on violated bounds (latencies >= 1, widths >= 1, sane
    // geometries).
    void validate() const;

    std::string to_json() const;
    static SimConfig from_json(const std::string& text);
    static SimConfig load(const std::string& path);
    void save(const std::string& path) const;

    // SKIA_SEED, when set, overrides the configured seed.
    void apply_env_overrides();
};

}  // namespace skia

#endif
