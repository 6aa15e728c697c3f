#ifndef SKIA_TRACE_GEN_HPP
#define SKIA_TRACE_GEN_HPP

#include <cstdint>
#include <optional>
#include <string>

#include "skia/trace.hpp"

namespace skia {

struct ParamError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dynamic branch-mix weights. Calls and returns execute in pairs, so
// weight_call and weight_ret must agree (within rounding); indirect
// dispatch branches are structural and sit outside the weights.
struct BranchWeights {
    double cond = 0.0;
    double uncond = 0.0;
    double call = 0.5;
    double ret = 0.5;
};

enum class GenLayout {
    HotCold,   // cold stubs packed into the shadow regions of hot lines
    NoShadow,  // line-aligned targets, taken branches end lines exactly
};

struct GenParams {
    IsaKind isa = IsaKind::SVL;
    GenLayout layout = GenLayout::HotCold;
    uint64_t code_base = 0x400000;

    size_t function_count = 1100;       // hot blocks plus cold stubs
    double hot_fraction = 0.2;
    size_t cold_entries_per_hot_line = 4;  // co-location degree, 1..4
    size_t instrs_per_function = 8;     // hot body size target
    double call_chain_p = 0.0;          // geometric chance a hot body calls the next hot block
    size_t max_call_depth = 1;
    BranchWeights weights;
    bool honor_weights = true;  // false: mix follows the layout structure

    size_t cold_batch_period = 3;       // hot iterations per cold batch
    double cold_subset_fraction = 0.6;  // fraction of cold entries visited per batch
    bool emit_cold = true;              // false: no shadow regions at all
    double uncond_stub_fraction = 0.2;  // share of hot lines with a jump stub in the tail

    uint64_t instruction_count = 100000;
    uint64_t seed = 1;
};

struct GenResult {
    CodeImage image;
    std::vector<TraceRecord> records;
};

// Deterministic in (params, seed). The emitted trace always passes
// validate_trace against the emitted image.
GenResult generate_synthetic(const GenParams& params);

// Presets: "hot-cold", "no-shadow", "return-heavy".
std::optional<GenParams> preset_params(const std::string& name);

}  // namespace skia

#endif
