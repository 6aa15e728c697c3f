#include "skia/frontend_sim.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <unordered_map>

namespace skia {

namespace {

constexpr size_t kMaxBlockInstrs = 16;

enum class ExitSource : uint8_t { None, Btb, USbb, RSbb, Fallthrough };
enum class ResteerKind : uint8_t { None, Decode, Execute };

struct FtqEntry {
    size_t begin_idx = 0;
    size_t end_idx = 0;  // exclusive
    bool wrong_path = false;

    ResteerKind resteer = ResteerKind::None;
    uint64_t correct_pc = 0;
    ExitSource exit_source = ExitSource::None;
    bool exit_taken = false;
    uint64_t exit_target = 0;

    std::vector<uint64_t> lines;
    bool head_seen = false;
    uint64_t ready_at = 0;
};

struct SbdEvent {
    CacheLineView view;
    bool head = false;
};

struct LineHist {
    int last_entry = -1;  // entry offset of the previous fetch of this line
    int last_tail = -1;   // first post-exit byte of the previous taken exit
};

class GsharePred {
public:
    explicit GsharePred(size_t bits) : mask_((size_t(1) << bits) - 1), table_(mask_ + 1, 1) {}

    bool predict(uint64_t pc, uint64_t hist) const { return table_[index(pc, hist)] >= 2; }
    void train(uint64_t pc, uint64_t hist, bool taken) {
        uint8_t& c = table_[index(pc, hist)];
        if (taken) {
            if (c < 3) c++;
        } else if (c > 0) {
            c--;
        }
    }

private:
    size_t index(uint64_t pc, uint64_t hist) const { return (pc ^ hist) & mask_; }

    size_t mask_;
    std::vector<uint8_t> table_;
};

struct Prediction {
    bool taken = false;
    uint64_t target = 0;
    ExitSource source = ExitSource::Fallthrough;
};

class Sim {
public:
    Sim(const CodeImage& image, const std::vector<TraceRecord>& records,
        const SimConfig& config, const SimHooks& hooks, OpportunityReport* opp)
        : image_(image),
          records_(records),
          cfg_(config),
          hooks_(hooks),
          opp_(opp),
          btb_(config.btb_entries, config.assoc_ways),
          sbb_(config.usbb_entries, config.rsbb_entries, config.assoc_ways),
          spec_ras_(config.ras_depth),
          arch_ras_(config.ras_depth),
          l1_(config.l1i_size_bytes, config.l1i_ways, config.l1i_miss_latency),
          gshare_(config.gshare_bits) {}

    Stats run() {
        cfg_.validate();
        if (records_.empty()) return stats_;

        spec_pc_ = records_[0].pc;
        decode_gate_ = cfg_.fetch_to_decode_depth;

        const uint64_t limit = 1000 + 64 * uint64_t(records_.size());
        while (commit_idx_ < records_.size()) {
            cycle_++;
            if (cycle_ > limit) throw SimError("simulation exceeded its cycle limit");
            run_sbd_events();
            iag_step();
            decode_step();
        }

        stats_.retired = commit_idx_;
        stats_.cycles = cycle_;
        stats_.l1i = l1_.counters();
        if (opp_) {
            opp_->retired = stats_.retired;
            opp_->btb_miss_total = stats_.btb_miss_total;
            opp_->btb_miss_l1_resident = stats_.btb_miss_l1_resident;
            opp_->btb_miss_l1_absent = stats_.btb_miss_l1_absent;
            opp_->btb_miss_by_class = stats_.btb_miss_by_class;
        }
        return stats_;
    }

private:
    static uint64_t line_of(uint64_t pc) { return pc & ~uint64_t(63); }

    bool sbd_on() const { return cfg_.sbd_mode != SbdMode::Off; }
    bool sbd_head() const {
        return cfg_.sbd_mode == SbdMode::HeadOnly || cfg_.sbd_mode == SbdMode::Both;
    }
    bool sbd_tail() const {
        return cfg_.sbd_mode == SbdMode::TailOnly || cfg_.sbd_mode == SbdMode::Both;
    }

    // ---- SBD ----

    void schedule_sbd(uint64_t start_pc, bool exit_taken, uint64_t exit_pc, uint8_t exit_len) {
        if (!sbd_on()) return;
        if (sbd_head() && (start_pc & 63) != 0) {
            const uint64_t line = line_of(start_pc);
            if (auto view = make_view(line)) {
                view->entry_offset = uint8_t(start_pc & 63);
                push_event(line, {*view, /*head=*/true});
            }
        }
        if (sbd_tail() && exit_taken) {
            const uint64_t end = exit_pc + exit_len;
            if ((end & 63) != 0) {
                const uint64_t line = line_of(end);
                if (auto view = make_view(line)) {
                    view->tail_start = uint8_t(end & 63);
                    push_event(line, {*view, /*head=*/false});
                }
            }
        }
    }

    std::optional<CacheLineView> make_view(uint64_t line) {
        CacheLineView v;
        v.base_addr = line;
        try {
            v.bytes = image_.read_line(line, cfg_.isa);
        } catch (const SimError&) {
            return std::nullopt;  // speculative fetch of unmapped memory
        }
        return v;
    }

    void push_event(uint64_t line, SbdEvent ev) {
        uint64_t ready = cycle_;
        if (auto r = l1_.ready_at(line)) ready = std::max(ready, *r);
        events_.emplace(ready + cfg_.sbd_delay, std::move(ev));
    }

    void run_sbd_events() {
        while (!events_.empty() && events_.begin()->first <= cycle_) {
            const SbdEvent ev = std::move(events_.begin()->second);
            events_.erase(events_.begin());
            std::vector<ShadowBranch> found =
                ev.head ? decode_head(ev.view, cfg_.isa, cfg_.index_policy, cfg_.max_valid_paths)
                        : decode_tail(ev.view, cfg_.isa);
            for (const ShadowBranch& sb : found) {
                sbb_.insert(sb);
                if (ev.head) stats_.sbb_insert_head++;
                else stats_.sbb_insert_tail++;
                stats_.sbb_insert_by_kind[size_t(sb.kind)]++;
                if (hooks_.on_sbb_insert) hooks_.on_sbb_insert(sb);
            }
        }
    }

    // ---- IAG / BPU ----

    // Forms the block-exit prediction at branch pc P. `len` and oracle
    // direction come from the trace when on the correct path; wrong-path
    // walks pass decoded values and predict off-trace conditionals not-taken.
    Prediction predict_branch(uint64_t pc, uint8_t len, bool oracle_taken, bool have_oracle) {
        Prediction p;
        const bool dir_taken = cfg_.direction_predictor == DirPredictor::Oracle
                                   ? (have_oracle ? oracle_taken : false)
                                   : gshare_.predict(pc, spec_hist_);
        if (auto hit = btb_.lookup(pc)) {
            switch (hit->type) {
                case BtbType::DirectCond:
                    p.taken = dir_taken;
                    p.target = hit->target;
                    break;
                case BtbType::DirectUncond:
                    p.taken = true;
                    p.target = hit->target;
                    break;
                case BtbType::Call:
                    p.taken = true;
                    p.target = hit->target;
                    spec_ras_.push(pc + len);
                    break;
                case BtbType::Return:
                    p.taken = true;
                    if (auto ra = spec_ras_.pop()) p.target = *ra;
                    else p.target = hit->target;
                    break;
            }
            p.source = ExitSource::Btb;
            return p;
        }
        if (sbd_on()) {
            if (auto hit = sbb_.lookup(pc)) {
                stats_.sbb_hits++;
                if (hit->source == SbbPrediction::Source::USbb) {
                    p.taken = true;
                    p.target = hit->target;
                    p.source = ExitSource::USbb;
                    if (hit->kind == ShadowKind::Call) spec_ras_.push(pc + len);
                } else {
                    p.taken = true;
                    p.source = ExitSource::RSbb;
                    if (auto ra = spec_ras_.pop()) p.target = *ra;
                    else p.taken = false;  // empty RAS, no target to supply
                }
                return p;
            }
        }
        p.taken = false;
        p.source = ExitSource::Fallthrough;
        return p;
    }

    void account_btb_miss(const TraceRecord& r) {
        if (!r.taken()) return;
        if (btb_.peek(r.pc)) return;
        if (sbd_on() && sbb_.peek(r.pc)) return;
        stats_.btb_miss_total++;
        stats_.btb_miss_by_class[r.cls]++;
        if (l1_.resident(line_of(r.pc))) stats_.btb_miss_l1_resident++;
        else stats_.btb_miss_l1_absent++;
        if (opp_) {
            const auto it = line_hist_.find(line_of(r.pc));
            const int off = int(r.pc & 63);
            if (it != line_hist_.end() && it->second.last_entry > off) opp_->head_shadow_misses++;
            else if (it != line_hist_.end() && it->second.last_tail >= 0 &&
                     off >= it->second.last_tail)
                opp_->tail_shadow_misses++;
            else opp_->body_misses++;
        }
    }

    void note_fetch_history(uint64_t start_pc, bool exit_taken, uint64_t exit_pc,
                            uint8_t exit_len) {
        if (!opp_) return;
        line_hist_[line_of(start_pc)].last_entry = int(start_pc & 63);
        if (exit_taken) {
            const uint64_t end = exit_pc + exit_len;
            if ((end & 63) != 0) line_hist_[line_of(end)].last_tail = int(end & 63);
        }
    }

    void add_span_lines(FtqEntry& e, uint64_t pc, uint8_t len) {
        for (uint64_t line = line_of(pc); line <= line_of(pc + len - 1); line += kLineBytes) {
            if (e.lines.empty() || e.lines.back() != line) e.lines.push_back(line);
        }
    }

    void push_entry(FtqEntry&& e) {
        const AccessKind kind = e.wrong_path ? AccessKind::WrongPathPrefetch
                                             : AccessKind::Prefetch;
        for (uint64_t line : e.lines) l1_.access(line, kind, cycle_);
        ftq_.push_back(std::move(e));
    }

    void iag_step() {
        if (ftq_.size() >= cfg_.ftq_entries) return;
        if (on_path_) iag_step_on_path();
        else iag_step_wrong_path();
    }

    void iag_step_on_path() {
        if (iag_idx_ >= records_.size()) return;

        FtqEntry e;
        e.begin_idx = iag_idx_;
        size_t i = iag_idx_;
        const TraceRecord* exit = nullptr;
        while (i < records_.size()) {
            const TraceRecord& r = records_[i];
            add_span_lines(e, r.pc, r.len);
            if (r.branch_class() != BranchClass::NonBranch) {
                exit = &r;
                i++;
                break;
            }
            i++;
            if (i - e.begin_idx >= kMaxBlockInstrs) break;
        }
        e.end_idx = i;

        const uint64_t start_pc = records_[e.begin_idx].pc;
        bool exit_taken = false;
        uint64_t exit_pc = 0;
        uint8_t exit_len = 0;

        if (exit) {
            account_btb_miss(*exit);
            Prediction p = predict_branch(exit->pc, exit->len, exit->taken(), true);
            if (cfg_.direction_predictor == DirPredictor::Gshare &&
                exit->branch_class() == BranchClass::DirectCond)
                spec_hist_ = (spec_hist_ << 1) | uint64_t(p.taken);

            const uint64_t true_next = exit->taken() ? exit->target : exit->pc + exit->len;
            const uint64_t pred_next = p.taken ? p.target : exit->pc + exit->len;
            e.exit_source = p.source;
            e.exit_taken = p.taken;
            e.exit_target = p.target;
            exit_taken = p.taken;
            exit_pc = exit->pc;
            exit_len = exit->len;

            if (pred_next == true_next && p.taken == exit->taken()) {
                iag_idx_ = e.end_idx;
                spec_pc_ = true_next;
            } else {
                e.resteer = resteer_kind_for(*exit, p);
                e.correct_pc = true_next;
                on_path_ = false;
                spec_pc_ = pred_next;
                iag_idx_ = e.end_idx;
            }
        } else {
            // Capped or trace-final block; predict sequential continuation.
            iag_idx_ = e.end_idx;
            if (e.end_idx < records_.size()) spec_pc_ = records_[e.end_idx].pc;
        }

        note_fetch_history(start_pc, exit_taken, exit_pc, exit_len);
        push_entry(std::move(e));
        schedule_sbd(start_pc, exit_taken, exit_pc, exit_len);
    }

    static ResteerKind resteer_kind_for(const TraceRecord& r, const Prediction& p) {
        const BranchClass cls = r.branch_class();
        const bool direct = cls == BranchClass::DirectCond || cls == BranchClass::DirectUncond ||
                            cls == BranchClass::Call;
        if (r.taken() && !p.taken)
            return direct || cls == BranchClass::Return ? ResteerKind::Decode
                                                        : ResteerKind::Execute;
        if (!r.taken() && p.taken) return ResteerKind::Execute;  // direction mispredict
        return direct ? ResteerKind::Decode : ResteerKind::Execute;  // wrong target
    }

    void iag_step_wrong_path() {
        FtqEntry e;
        e.wrong_path = true;
        uint64_t pc = spec_pc_;
        const uint64_t start_pc = pc;
        size_t count = 0;
        bool exit_taken = false;
        uint64_t exit_pc = 0;
        uint8_t exit_len = 0;

        while (count < kMaxBlockInstrs) {
            const auto bytes = image_.read_bytes(pc, 15, cfg_.isa);
            const auto d = decode_at(bytes, 0, cfg_.isa);
            if (!d) break;  // ran into unmapped or invalid bytes
            add_span_lines(e, pc, d->length);
            count++;
            if (d->cls != BranchClass::NonBranch) {
                Prediction p = predict_branch(pc, d->length, false, false);
                if (cfg_.direction_predictor == DirPredictor::Gshare &&
                    d->cls == BranchClass::DirectCond)
                    spec_hist_ = (spec_hist_ << 1) | uint64_t(p.taken);
                exit_taken = p.taken;
                exit_pc = pc;
                exit_len = d->length;
                spec_pc_ = p.taken ? p.target : pc + d->length;
                break;
            }
            pc += d->length;
            spec_pc_ = pc;
        }

        if (count == 0) return;  // wrong-path fetch is stalled on garbage
        push_entry(std::move(e));
        schedule_sbd(start_pc, exit_taken, exit_pc, exit_len);
    }

    // ---- Decode / commit ----

    void decode_step() {
        size_t consumed = 0;
        size_t budget = cfg_.decode_width;

        while (budget > 0 && cycle_ >= decode_gate_ && !ftq_.empty()) {
            FtqEntry& e = ftq_.front();
            if (e.wrong_path) break;  // stale entry awaiting flush
            if (!e.head_seen) {
                e.head_seen = true;
                uint64_t ready = cycle_;
                for (uint64_t line : e.lines) {
                    const auto res = l1_.access(line, AccessKind::Demand, cycle_);
                    ready = std::max(ready, res.ready_at);
                }
                e.ready_at = ready;
            }
            if (cycle_ < e.ready_at) break;  // fetch stall

            bool resteered = false;
            while (budget > 0 && commit_idx_ < e.end_idx) {
                const bool is_exit = commit_idx_ + 1 == e.end_idx &&
                                     records_[commit_idx_].branch_class() != BranchClass::NonBranch;
                commit_one(records_[commit_idx_], is_exit ? &e : nullptr);
                commit_idx_++;
                consumed++;
                budget--;
                if (is_exit && e.resteer != ResteerKind::None) {
                    do_resteer(e);
                    resteered = true;
                    break;
                }
            }
            if (resteered) break;
            if (commit_idx_ == e.end_idx) ftq_.pop_front();
            else break;  // decode width exhausted mid-entry
        }

        if (consumed == 0) stats_.decoder_idle_cycles++;
    }

    void commit_one(const TraceRecord& r, const FtqEntry* exit_entry) {
        const BranchClass cls = r.branch_class();
        if (cls == BranchClass::NonBranch) return;

        btb_.insert(r.pc, btb_type_of(cls), r.target);
        if (cls == BranchClass::Call || cls == BranchClass::IndirectCall)
            arch_ras_.push(r.pc + r.len);
        if (cls == BranchClass::Return) arch_ras_.pop();
        if (cls == BranchClass::DirectCond && cfg_.direction_predictor == DirPredictor::Gshare) {
            gshare_.train(r.pc, arch_hist_, r.taken());
            arch_hist_ = (arch_hist_ << 1) | uint64_t(r.taken());
        }

        if (!exit_entry) return;
        const FtqEntry& e = *exit_entry;
        if (e.exit_source == ExitSource::USbb) {
            const bool kind_ok = cls == BranchClass::DirectUncond || cls == BranchClass::Call;
            if (kind_ok && r.taken() && e.exit_target == r.target) {
                stats_.sbb_hits_committed++;
                sbb_.mark_retired(r.pc);
            } else {
                stats_.sbb_bogus_targets++;
                if (cfg_.invalidate_on_bogus) sbb_.invalidate(r.pc);
            }
        } else if (e.exit_source == ExitSource::RSbb) {
            if (cls == BranchClass::Return) {
                stats_.sbb_hits_committed++;
                sbb_.mark_retired(r.pc);
            } else {
                stats_.sbb_bogus_targets++;
                if (cfg_.invalidate_on_bogus) sbb_.invalidate(r.pc);
            }
        }
    }

    void do_resteer(const FtqEntry& e) {
        if (e.resteer == ResteerKind::Decode) {
            stats_.decode_resteers++;
            decode_gate_ = cycle_ + cfg_.decode_resteer_repair + cfg_.fetch_to_decode_depth;
        } else {
            stats_.execute_resteers++;
            decode_gate_ = cycle_ + cfg_.decode_resteer_repair + cfg_.fetch_to_decode_depth +
                           cfg_.execute_resteer_penalty;
        }
        const uint64_t correct = e.correct_pc;
        ftq_.clear();
        on_path_ = true;
        iag_idx_ = commit_idx_;
        spec_pc_ = correct;
        spec_ras_ = arch_ras_;
        spec_hist_ = arch_hist_;
    }

    const CodeImage& image_;
    const std::vector<TraceRecord>& records_;
    SimConfig cfg_;
    SimHooks hooks_;
    OpportunityReport* opp_;

    Btb btb_;
    Sbb sbb_;
    Ras spec_ras_;
    Ras arch_ras_;
    L1ICache l1_;
    GsharePred gshare_;
    uint64_t spec_hist_ = 0;
    uint64_t arch_hist_ = 0;

    std::deque<FtqEntry> ftq_;
    std::multimap<uint64_t, SbdEvent> events_;
    std::unordered_map<uint64_t, LineHist> line_hist_;

    uint64_t cycle_ = 0;
    uint64_t decode_gate_ = 0;
    size_t commit_idx_ = 0;
    size_t iag_idx_ = 0;
    uint64_t spec_pc_ = 0;
    bool on_path_ = true;

    Stats stats_;
};

}  // namespace

Stats run(const CodeImage& image, const std::vector<TraceRecord>& records,
          const SimConfig& config, const SimHooks& hooks) {
    Sim sim(image, records, config, hooks, nullptr);
    return sim.run();
}

OpportunityReport analyze(const CodeImage& image, const std::vector<TraceRecord>& records,
                          const SimConfig& config) {
    SimConfig cfg = config;
    cfg.sbd_mode = SbdMode::Off;
    OpportunityReport report;
    Sim sim(image, records, cfg, {}, &report);
    sim.run();
    return report;
}

}  // namespace skia
