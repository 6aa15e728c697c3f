#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "skia/frontend_sim.hpp"
#include "skia/metrics.hpp"
#include "skia/trace_gen.hpp"

namespace {

using namespace skia;

struct CommonInputs {
    std::string image_path;
    std::string trace_path;
    std::string config_path;
};

SimConfig load_config(const std::string& path) {
    SimConfig cfg = path.empty() ? SimConfig{} : SimConfig::load(path);
    cfg.apply_env_overrides();
    cfg.validate();
    return cfg;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw SimError("cannot write " + path);
    out << text;
    if (!text.empty() && text.back() != '\n') out << "\n";
}

void check_trace(const CodeImage& image, const std::vector<TraceRecord>& records,
                 IsaKind isa) {
    const auto violations = validate_trace(image, records, isa);
    if (!violations.empty()) {
        std::ostringstream os;
        os << "trace/image inconsistency at record " << violations.front().index << ": "
           << violations.front().what << " (" << violations.size() << " violation(s))";
        throw SimError(os.str());
    }
}

int cmd_simulate(const CommonInputs& in, const std::string& sbd, const std::string& out,
                 const std::string& label) {
    SimConfig cfg = load_config(in.config_path);
    if (!sbd.empty()) {
        auto mode = sbd_mode_from_string(sbd);
        if (!mode) throw SimError("unknown sbd mode: " + sbd);
        cfg.sbd_mode = *mode;
    }
    const CodeImage image = CodeImage::load(in.image_path);
    const auto records = read_trace(in.trace_path);
    check_trace(image, records, cfg.isa);

    const Stats stats = run(image, records, cfg);
    const std::string name = label.empty() ? to_string(cfg.sbd_mode) : label;
    const std::string json = report_json(stats, cfg, name);
    const std::string csv = csv_header() + "\n" + csv_row(stats, cfg, name) + "\n";
    if (out.empty()) {
        std::cout << json << "\n";
    } else {
        write_file(out + ".json", json);
        write_file(out + ".csv", csv);
    }
    return 0;
}

int cmd_analyze(const CommonInputs& in, const std::string& out) {
    SimConfig cfg = load_config(in.config_path);
    const CodeImage image = CodeImage::load(in.image_path);
    const auto records = read_trace(in.trace_path);
    check_trace(image, records, cfg.isa);

    const OpportunityReport report = analyze(image, records, cfg);
    SimConfig reported = cfg;
    reported.sbd_mode = SbdMode::Off;
    const std::string json = opportunity_json(report, reported);
    if (out.empty()) std::cout << json << "\n";
    else write_file(out, json);
    return 0;
}

int cmd_gen(const std::string& preset, const std::string& isa_name, uint64_t instructions,
            uint64_t seed, bool have_seed, const std::string& out) {
    auto params = preset_params(preset);
    if (!params) throw ParamError("unknown preset: " + preset);
    if (!isa_name.empty()) {
        auto isa = isa_from_string(isa_name);
        if (!isa) throw ParamError("unknown isa: " + isa_name);
        params->isa = *isa;
    }
    if (instructions) params->instruction_count = instructions;
    if (have_seed) params->seed = seed;
    if (const char* s = std::getenv("SKIA_SEED")) params->seed = std::stoull(s, nullptr, 0);

    const GenResult result = generate_synthetic(*params);
    result.image.save(out + ".image.json");
    write_trace(out + ".sbtrace", result.records);
    std::cout << "wrote " << out << ".image.json and " << out << ".sbtrace ("
              << result.records.size() << " records)\n";
    return 0;
}

int cmd_sweep(const CommonInputs& in, const std::string& axis,
              const std::vector<size_t>& values, const std::string& out) {
    if (values.empty()) throw SimError("sweep requires at least one value");
    const SimConfig base = load_config(in.config_path);
    const CodeImage image = CodeImage::load(in.image_path);
    const auto records = read_trace(in.trace_path);
    check_trace(image, records, base.isa);

    std::ostringstream csv;
    csv << csv_header() << "\n";
    for (size_t v : values) {
        SimConfig cfg = base;
        if (axis == "btb_entries") cfg.btb_entries = v;
        else if (axis == "usbb_entries") cfg.usbb_entries = v;
        else if (axis == "rsbb_entries") cfg.rsbb_entries = v;
        else throw SimError("unknown sweep axis: " + axis);
        cfg.validate();
        const Stats stats = run(image, records, cfg);
        csv << csv_row(stats, cfg, axis + "=" + std::to_string(v)) << "\n";
    }
    if (out.empty()) std::cout << csv.str();
    else write_file(out, csv.str());
    return 0;
}

int cmd_decode_line(const std::string& image_path, const std::string& line_addr_str,
                    unsigned entry_offset, int tail_start, const std::string& isa_name) {
    auto isa = isa_from_string(isa_name);
    if (!isa) throw SimError("unknown isa: " + isa_name);
    const uint64_t line_addr = std::stoull(line_addr_str, nullptr, 0);
    if (line_addr & 63) throw SimError("line address must be 64-byte aligned");
    if (entry_offset > 63) throw SimError("entry offset must be in 0..63");

    const CodeImage image = CodeImage::load(image_path);
    CacheLineView view;
    view.base_addr = line_addr;
    view.bytes = image.read_line(line_addr, *isa);
    view.entry_offset = uint8_t(entry_offset);
    if (tail_start >= 0) {
        if (tail_start > 64) throw SimError("tail start must be in 0..64");
        view.tail_start = uint8_t(tail_start);
    }
    std::cout << dump_line_analysis(view, *isa);
    return 0;
}

int cmd_audit_bits(size_t btb, size_t usbb, size_t rsbb, size_t ways) {
    std::cout << format_audit({audit_btb(btb, ways), audit_usbb(usbb, ways),
                               audit_rsbb(rsbb, ways)});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Shadow-branch front-end simulator"};
    app.require_subcommand(1);

    CommonInputs in;
    std::string sbd, out, label;
    auto* sim = app.add_subcommand("simulate", "Run the front-end simulation on a trace");
    sim->add_option("--image", in.image_path, "Code image JSON")->required();
    sim->add_option("--trace", in.trace_path, "Binary trace file")->required();
    sim->add_option("--config", in.config_path, "Simulator config JSON");
    sim->add_option("--sbd", sbd, "Override sbd mode: off|head|tail|both");
    sim->add_option("--out", out, "Output path prefix (.json/.csv)");
    sim->add_option("--label", label, "Row label for the reports");

    auto* ana = app.add_subcommand("analyze", "BTB-miss opportunity breakdown (sbd off)");
    ana->add_option("--image", in.image_path)->required();
    ana->add_option("--trace", in.trace_path)->required();
    ana->add_option("--config", in.config_path);
    ana->add_option("--out", out, "Output JSON path");

    std::string preset = "hot-cold", gen_isa;
    uint64_t instructions = 0, seed = 0;
    auto* gen = app.add_subcommand("gen", "Generate a synthetic code image and trace");
    gen->add_option("--preset", preset, "hot-cold | no-shadow | return-heavy");
    gen->add_option("--isa", gen_isa, "svl | x86");
    gen->add_option("--instructions", instructions, "Trace length");
    auto* seed_opt = gen->add_option("--seed", seed, "Generator seed");
    gen->add_option("--out", out, "Output path prefix")->required();

    std::string axis;
    std::vector<size_t> values;
    auto* sweep = app.add_subcommand("sweep", "Sweep one structure size, one CSV row each");
    sweep->add_option("--image", in.image_path)->required();
    sweep->add_option("--trace", in.trace_path)->required();
    sweep->add_option("--config", in.config_path);
    sweep->add_option("--vary", axis, "btb_entries | usbb_entries | rsbb_entries")->required();
    sweep->add_option("--values", values, "Entry counts to sweep")->required();
    sweep->add_option("--out", out, "Output CSV path");

    std::string line_addr, dl_isa = "svl";
    unsigned entry_offset = 0;
    int tail_start = -1;
    auto* dl = app.add_subcommand("decode-line", "Dump shadow analysis of one cache line");
    dl->add_option("--image", in.image_path)->required();
    dl->add_option("--line-addr", line_addr)->required();
    dl->add_option("--entry-offset", entry_offset)->required();
    dl->add_option("--tail-start", tail_start);
    dl->add_option("--isa", dl_isa, "svl | x86");

    size_t btb = 8192, usbb = 768, rsbb = 2024, ways = 4;
    auto* audit = app.add_subcommand("audit-bits", "Report per-structure storage bits");
    audit->add_option("--btb-entries", btb);
    audit->add_option("--usbb-entries", usbb);
    audit->add_option("--rsbb-entries", rsbb);
    audit->add_option("--ways", ways);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 2 : 0;
    }

    try {
        if (sim->parsed()) return cmd_simulate(in, sbd, out, label);
        if (ana->parsed()) return cmd_analyze(in, out);
        if (gen->parsed())
            return cmd_gen(preset, gen_isa, instructions, seed, seed_opt->count() > 0, out);
        if (sweep->parsed()) return cmd_sweep(in, axis, values, out);
        if (dl->parsed())
            return cmd_decode_line(in.image_path, line_addr, entry_offset, tail_start, dl_isa);
        if (audit->parsed()) return cmd_audit_bits(btb, usbb, rsbb, ways);
    } catch (const SimError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const TraceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParamError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
