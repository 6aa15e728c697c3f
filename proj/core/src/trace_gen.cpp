#include "skia/trace_gen.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <deque>
#include <map>
#include <random>
#include <sstream>

namespace skia {

namespace {

// Tiny two-pass assembler over a single contiguous code segment.
class Asm {
public:
    Asm(IsaKind isa, uint64_t base) : isa_(isa), base_(base) {}

    size_t off() const { return code_.size(); }
    uint64_t pc() const { return base_ + code_.size(); }

    void label(const std::string& name) { labels_[name] = pc(); }
    uint64_t label_addr(const std::string& name) const { return labels_.at(name); }

    void nop(size_t len) {
        assert(len >= 1 && len <= 8);
        if (isa_ == IsaKind::SVL) {
            emit(uint8_t(len - 1));  // NonBranch, length 1+(b&7)
            for (size_t i = 1; i < len; ++i) emit(0xF7);  // inert payload
        } else {
            static const std::vector<std::vector<uint8_t>> ladder = {
                {0x90},
                {0x66, 0x90},
                {0x0F, 0x1F, 0x00},
                {0x0F, 0x1F, 0x40, 0x00},
                {0x0F, 0x1F, 0x44, 0x00, 0x00},
                {0x66, 0x0F, 0x1F, 0x44, 0x00, 0x00},
                {0x0F, 0x1F, 0x80, 0x00, 0x00, 0x00, 0x00},
                {0x0F, 0x1F, 0x84, 0x00, 0x00, 0x00, 0x00, 0x00},
            };
            for (uint8_t b : ladder[len - 1]) emit(b);
        }
    }

    void fill_nops(size_t bytes, size_t target_instrs = 0) {
        size_t left = bytes;
        size_t n = target_instrs ? target_instrs : (bytes + 7) / 8;
        while (left > 0) {
            size_t len = n > 1 ? std::clamp<size_t>((left + n - 1) / n, 1, 8)
                               : std::min<size_t>(left, 8);
            if (left - len > 0 && left - len < (n > 1 ? n - 1 : 1)) len = left;  // keep fillable
            len = std::min<size_t>(len, 8);
            nop(len);
            left -= len;
            if (n > 1) n--;
        }
    }

    void ret() { emit(isa_ == IsaKind::SVL ? 0xE0 : 0xC3); }

    size_t jmp_len() const { return 5; }
    void jmp(const std::string& target) {
        emit(isa_ == IsaKind::SVL ? 0x90 : 0xE9);
        disp32(target);
    }

    size_t call_len() const { return 5; }
    void call(const std::string& target) {
        emit(isa_ == IsaKind::SVL ? 0xB0 : 0xE8);
        disp32(target);
    }

    size_t condbr_len() const { return isa_ == IsaKind::SVL ? 3 : 6; }
    void condbr(const std::string& target) {
        if (isa_ == IsaKind::SVL) {
            emit(0x70);
            fixups_.push_back({code_.size(), 2, code_.size() + 2, target});
            emit(0);
            emit(0);
        } else {
            emit(0x0F);
            emit(0x84);
            disp32(target);
        }
    }

    // Short conditional skipping over the next `skip` bytes.
    size_t cond_skip_len() const { return isa_ == IsaKind::SVL ? 3 : 2; }
    void cond_skip(size_t skip) {
        if (isa_ == IsaKind::SVL) {
            emit(0x70);
            emit(uint8_t(skip));
            emit(uint8_t(skip >> 8));
        } else {
            emit(0x75);
            emit(uint8_t(skip));
        }
    }

    size_t ujmp_slot_len() const { return isa_ == IsaKind::SVL ? 5 : 2; }
    void ujmp_slot() {  // unconditional jump to the next instruction
        if (isa_ == IsaKind::SVL) {
            emit(0x90);
            for (int i = 0; i < 4; ++i) emit(0);
        } else {
            emit(0xEB);
            emit(0);
        }
    }

    size_t ijmp_len() const { return 2; }
    void ijmp() {
        if (isa_ == IsaKind::SVL) {
            emit(0xD0);
            emit(0xF7);
        } else {
            emit(0xFF);
            emit(0xE0);  // jmp rax
        }
    }

    void filler(size_t n) {
        for (size_t i = 0; i < n; ++i) emit(invalid_filler_byte(isa_));
    }

    // Pads with nops so the next `len` bytes do not straddle a line boundary.
    void pad_no_straddle(size_t len) {
        const size_t in_line = off() & 63;
        if (in_line + len > kLineBytes) fill_nops(kLineBytes - in_line);
    }

    void align_line_filler() {
        const size_t in_line = off() & 63;
        if (in_line) filler(kLineBytes - in_line);
    }

    std::vector<uint8_t> finalize() {
        for (const auto& f : fixups_) {
            const int64_t disp = int64_t(labels_.at(f.target)) - int64_t(base_ + f.end_off);
            for (int i = 0; i < f.width; ++i)
                code_[f.pos + i] = uint8_t(uint64_t(disp) >> (8 * i));
        }
        fixups_.clear();
        return code_;
    }

private:
    struct Fixup {
        size_t pos;
        int width;
        size_t end_off;
        std::string target;
    };

    void emit(uint8_t b) { code_.push_back(b); }

    void disp32(const std::string& target) {
        fixups_.push_back({code_.size(), 4, code_.size() + 4, target});
        for (int i = 0; i < 4; ++i) emit(0);
    }

    IsaKind isa_;
    uint64_t base_;
    std::vector<uint8_t> code_;
    std::map<std::string, uint64_t> labels_;
    std::vector<Fixup> fixups_;
};

struct Plan {
    uint64_t entry = 0;
    uint64_t gate_pc = 0;      // hot-loop conditional into the cold dispatcher
    uint64_t dsp_cond_pc = 0;  // dispatcher loop-back conditional
    uint64_t tramp_pc = 0;     // indirect jump dispatching to cold entries
    std::vector<uint64_t> cold_targets;
    size_t period = 0;
    size_t batch_size = 0;
};

struct SlotBudget {
    double cond_per_block = 0.0;
    double uncond_per_block = 0.0;
};

// Solves the per-hot-block injection counts needed for the requested dynamic
// branch mix, given the structural branches the layout already executes.
SlotBudget solve_slots(const GenParams& p, size_t hot_blocks, size_t batch_size) {
    const BranchWeights& w = p.weights;
    const double sum = w.cond + w.uncond + w.call + w.ret;
    if (sum <= 0.0) throw ParamError("branch weights must not all be zero");
    const double a = w.cond / sum, b = w.uncond / sum;
    const double c = w.call / sum, d = w.ret / sum;
    if (std::abs(c - d) > 0.02)
        throw ParamError("call and return weights must match (calls pair with returns)");
    if (c + d <= 0.0) throw ParamError("call/return weight must be positive");

    const double K = double(p.cold_batch_period ? p.cold_batch_period : 1);
    const double m = p.emit_cold ? double(batch_size) : 0.0;
    const double cond_struct = p.emit_cold ? K + m : 0.0;
    const double unc_struct = p.emit_cold ? K : 1.0;
    const double pairs = K * double(hot_blocks) + m;

    const double total = 2.0 * pairs / (c + d);
    double x = a * total - cond_struct;
    double y = b * total - unc_struct;
    const double tol = 0.02 * total;
    if (x < -tol || y < -tol)
        throw ParamError("requested cond/uncond weights below the structural minimum");
    x = std::max(0.0, x);
    y = std::max(0.0, y);

    const double execs = K * double(hot_blocks);
    return {x / execs, y / execs};
}

struct BuildResult {
    CodeImage image;
    Plan plan;
};

BuildResult build_hot_cold(const GenParams& p, std::mt19937_64& rng) {
    const size_t hot = std::llround(double(p.function_count) * p.hot_fraction);
    if (hot < 1) throw ParamError("hot function count must be >= 1");
    if (p.emit_cold && p.cold_entries_per_hot_line < 1)
        throw ParamError("co-location degree must be >= 1 when cold code is emitted");
    const size_t cpl = std::clamp<size_t>(p.cold_entries_per_hot_line, 1, 4);
    const size_t head_rets = p.emit_cold ? std::min<size_t>(2, cpl) : 0;
    const size_t tail_rets = p.emit_cold ? cpl - head_rets : 0;
    const size_t ustride = p.uncond_stub_fraction > 0.0
                               ? std::max<size_t>(1, std::llround(1.0 / p.uncond_stub_fraction))
                               : 0;

    // Cold entry count is needed up front for the slot solve. Stubs beyond
    // the hot-line shadow slots overflow onto dedicated cold lines, four per
    // line, so the cold working set can exceed 4x the hot line count.
    size_t hot_line_stubs = 0;
    for (size_t i = 0; i < hot; ++i) {
        const bool uline = ustride && ((i + 1) % ustride == 0);
        hot_line_stubs += head_rets + (uline ? 2 : tail_rets);
    }
    size_t cold_lines = 0;
    if (p.emit_cold && p.function_count > hot + hot_line_stubs) {
        const size_t overflow = p.function_count - hot - hot_line_stubs;
        cold_lines = (overflow + 3) / 4;
    }
    const size_t cold_count = hot_line_stubs + 4 * cold_lines;
    const size_t batch = p.emit_cold && cold_count
                             ? std::max<size_t>(1, std::llround(p.cold_subset_fraction *
                                                                double(cold_count)))
                             : 0;
    const SlotBudget slots = p.honor_weights ? solve_slots(p, hot, batch) : SlotBudget{};

    Asm a(p.isa, p.code_base);

    // Driver: hot loop, cold gate, dispatcher, trampoline.
    a.label("iter_top");
    for (size_t i = 0; i < hot; ++i) {
        a.pad_no_straddle(a.call_len());
        a.call("hot_" + std::to_string(i));
    }
    a.pad_no_straddle(a.condbr_len());
    const uint64_t gate_pc = a.pc();
    if (p.emit_cold) a.condbr("cold_dispatch");
    a.pad_no_straddle(a.jmp_len());
    a.jmp("iter_top");

    uint64_t dsp_cond_pc = 0;
    if (p.emit_cold) {
        a.label("cold_dispatch");
        a.label("dsp_loop");
        a.pad_no_straddle(a.call_len());
        a.call("trampoline");
        a.pad_no_straddle(a.condbr_len());
        dsp_cond_pc = a.pc();
        a.condbr("dsp_loop");
        a.pad_no_straddle(a.jmp_len());
        a.jmp("iter_top");
    }

    // Trampoline on its own line, entered at offset 0.
    a.align_line_filler();
    a.label("trampoline");
    const uint64_t tramp_pc = a.pc();
    if (p.emit_cold) a.ijmp();
    a.align_line_filler();

    // Hot lines: cold return stubs in the head, hot body, hot return exit,
    // cold stubs in the tail.
    std::vector<uint64_t> cold_targets;
    double cond_acc = 0.0, unc_acc = 0.0;
    std::vector<bool> chain(hot, false);
    if (p.call_chain_p > 0.0 && p.max_call_depth > 1) {
        size_t run = 0;
        std::bernoulli_distribution coin(p.call_chain_p);
        for (size_t i = 0; i + 1 < hot; ++i) {
            if (run + 1 < p.max_call_depth && coin(rng)) {
                chain[i] = true;
                run++;
            } else {
                run = 0;
            }
        }
    }

    for (size_t i = 0; i < hot; ++i) {
        assert((a.off() & 63) == 0);
        a.label("hotline_" + std::to_string(i));
        for (size_t r = 0; r < head_rets; ++r) {
            cold_targets.push_back(a.pc());
            a.ret();
        }
        const size_t entry = head_rets;
        a.label("hot_" + std::to_string(i));

        const bool uline = ustride && ((i + 1) % ustride == 0);
        const size_t tail_size = uline ? a.jmp_len() + 1 : tail_rets;
        const size_t pad = rng() % 4;
        const size_t exit_off = 63 - tail_size - pad;

        // Injected branch slots, then nop padding up to the hot exit.
        cond_acc += slots.cond_per_block;
        unc_acc += slots.uncond_per_block;
        size_t n_cond = size_t(cond_acc);
        cond_acc -= double(n_cond);
        size_t n_unc = size_t(unc_acc);
        unc_acc -= double(n_unc);

        size_t slot_bytes = n_cond * (a.cond_skip_len() + 1) + n_unc * a.ujmp_slot_len() +
                            (chain[i] ? a.call_len() : 0);
        if (entry + slot_bytes + 1 > exit_off)
            throw ParamError("branch weights require more slots than fit a hot block");
        if (chain[i]) a.call("hot_" + std::to_string(i + 1));
        for (size_t s = 0; s < n_cond; ++s) {
            a.cond_skip(1);
            a.nop(1);
        }
        for (size_t s = 0; s < n_unc; ++s) a.ujmp_slot();

        const size_t body_left = exit_off - (a.off() & 63);
        size_t body_instrs = p.instrs_per_function > 2 ? p.instrs_per_function - 2 : 1;
        a.fill_nops(body_left, body_instrs);
        assert((a.off() & 63) == exit_off);
        a.ret();  // hot exit

        if (uline) {
            cold_targets.push_back(a.pc());
            a.jmp("hotline_" + std::to_string((i + 1) % hot));
            cold_targets.push_back(a.pc());
            a.ret();
        } else {
            for (size_t r = 0; r < tail_rets; ++r) {
                cold_targets.push_back(a.pc());
                a.ret();
            }
        }
        a.align_line_filler();
    }

    // Cold-only lines: two return stubs at the line start, two mid-line, with
    // decodable nop chains between so head and tail walks cover every stub.
    for (size_t i = 0; i < cold_lines; ++i) {
        assert((a.off() & 63) == 0);
        cold_targets.push_back(a.pc());
        a.ret();
        cold_targets.push_back(a.pc());
        a.ret();
        const size_t mid = 16 + rng() % 36;
        a.fill_nops(mid - 2);
        cold_targets.push_back(a.pc());
        a.ret();
        cold_targets.push_back(a.pc());
        a.ret();
        a.fill_nops(kLineBytes - mid - 2);
    }

    BuildResult out;
    out.plan.entry = a.label_addr("iter_top");
    out.plan.gate_pc = p.emit_cold ? gate_pc : 0;
    out.plan.dsp_cond_pc = dsp_cond_pc;
    out.plan.tramp_pc = p.emit_cold ? tramp_pc : 0;
    out.plan.cold_targets = std::move(cold_targets);
    out.plan.period = p.cold_batch_period;
    out.plan.batch_size = batch;
    out.image.add_segment(p.code_base, a.finalize());
    return out;
}

// Layout with every branch target line-aligned and every taken branch ending
// exactly at byte 63, leaving no decodable shadow bytes anywhere.
BuildResult build_no_shadow(const GenParams& p) {
    const size_t hot = std::max<size_t>(1, std::llround(double(p.function_count) * p.hot_fraction));
    Asm a(p.isa, p.code_base);

    a.label("iter_top");
    for (size_t i = 0; i < hot; ++i) {
        assert((a.off() & 63) == 0);
        a.fill_nops(kLineBytes - a.call_len());
        a.call("fn_" + std::to_string(i));
    }
    a.fill_nops(kLineBytes - a.jmp_len());
    a.jmp("iter_top");

    for (size_t i = 0; i < hot; ++i) {
        assert((a.off() & 63) == 0);
        a.label("fn_" + std::to_string(i));
        a.fill_nops(kLineBytes - 1, p.instrs_per_function);
        a.ret();
    }

    BuildResult out;
    out.plan.entry = a.label_addr("iter_top");
    out.image.add_segment(p.code_base, a.finalize());
    return out;
}

std::vector<TraceRecord> interpret(const CodeImage& image, const Plan& plan,
                                   const GenParams& p, std::mt19937_64& rng) {
    std::vector<TraceRecord> records;
    records.reserve(p.instruction_count);

    uint64_t pc = plan.entry;
    uint64_t iter = 0;
    std::deque<uint64_t> batch;
    std::vector<uint64_t> ras;

    while (records.size() < p.instruction_count) {
        const auto win = image.read_bytes(pc, 15, p.isa);
        const auto d = decode_at(win, 0, p.isa);
        if (!d) throw std::logic_error("generator emitted undecodable bytes");

        TraceRecord r;
        r.pc = pc;
        r.len = d->length;
        r.cls = uint8_t(d->cls);
        uint64_t next = pc + d->length;

        switch (d->cls) {
            case BranchClass::NonBranch:
                break;
            case BranchClass::DirectCond: {
                bool taken;
                if (pc == plan.gate_pc) {
                    iter++;
                    taken = plan.period && (iter % plan.period == 0) &&
                            !plan.cold_targets.empty();
                    if (taken) {
                        std::vector<uint64_t> pool = plan.cold_targets;
                        std::shuffle(pool.begin(), pool.end(), rng);
                        batch.assign(pool.begin(), pool.begin() + plan.batch_size);
                    }
                } else if (pc == plan.dsp_cond_pc && plan.dsp_cond_pc) {
                    taken = !batch.empty();
                } else {
                    taken = rng() & 1;
                }
                r.target = branch_target(pc, *d);
                if (taken) {
                    r.flags = 1;
                    next = r.target;
                }
                break;
            }
            case BranchClass::DirectUncond:
                r.flags = 1;
                r.target = branch_target(pc, *d);
                next = r.target;
                break;
            case BranchClass::Call:
                r.flags = 1;
                r.target = branch_target(pc, *d);
                ras.push_back(pc + d->length);
                next = r.target;
                break;
            case BranchClass::Return:
                if (ras.empty()) throw std::logic_error("generator return with empty stack");
                r.flags = 1;
                r.target = ras.back();
                ras.pop_back();
                next = r.target;
                break;
            case BranchClass::IndirectUncond: {
                if (pc != plan.tramp_pc || batch.empty())
                    throw std::logic_error("unexpected indirect jump in generated code");
                r.flags = 1;
                r.target = batch.front();
                batch.pop_front();
                next = r.target;
                break;
            }
            case BranchClass::IndirectCall:
                throw std::logic_error("generator does not emit indirect calls");
        }

        records.push_back(r);
        pc = next;
    }
    return records;
}

}  // namespace

GenResult generate_synthetic(const GenParams& params) {
    if (params.function_count < 1) throw ParamError("function count must be >= 1");
    if (params.hot_fraction <= 0.0 || params.hot_fraction > 1.0)
        throw ParamError("hot fraction must be in (0, 1]");
    if (params.instruction_count < 1) throw ParamError("instruction count must be >= 1");
    if (params.cold_subset_fraction <= 0.0 || params.cold_subset_fraction > 1.0)
        throw ParamError("cold subset fraction must be in (0, 1]");

    std::mt19937_64 rng(params.seed);
    BuildResult built = params.layout == GenLayout::NoShadow ? build_no_shadow(params)
                                                             : build_hot_cold(params, rng);
    std::mt19937_64 run_rng(params.seed ^ 0x9E3779B97F4A7C15ull);
    GenResult out;
    out.records = interpret(built.image, built.plan, params, run_rng);
    out.image = std::move(built.image);
    return out;
}

std::optional<GenParams> preset_params(const std::string& name) {
    GenParams p;
    p.honor_weights = false;
    if (name == "hot-cold") {
        p.function_count = 1300;     // 100 hot blocks, 1200 cold stubs
        p.hot_fraction = 100.0 / 1300.0;
        p.cold_entries_per_hot_line = 4;
        p.uncond_stub_fraction = 0.2;
        p.cold_batch_period = 3;
        p.cold_subset_fraction = 0.3;
        p.instruction_count = 500000;
        p.seed = 7;
        return p;
    }
    if (name == "no-shadow") {
        p.layout = GenLayout::NoShadow;
        p.function_count = 1100;
        p.hot_fraction = 0.2;
        p.emit_cold = false;
        p.instruction_count = 200000;
        p.seed = 7;
        return p;
    }
    if (name == "return-heavy") {
        p.function_count = 1100;
        p.hot_fraction = 0.2;
        p.cold_entries_per_hot_line = 4;
        p.uncond_stub_fraction = 0.0;  // returns only
        p.cold_batch_period = 3;
        p.cold_subset_fraction = 0.6;
        p.instruction_count = 500000;
        p.seed = 7;
        return p;
    }
    return std::nullopt;
}

}  // namespace skia
