#include "skia/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "skia/memory.hpp"

namespace skia {

const char* to_string(SbdMode m) {
    switch (m) {
        case SbdMode::Off: return "off";
        case SbdMode::HeadOnly: return "head";
        case SbdMode::TailOnly: return "tail";
        case SbdMode::Both: return "both";
    }
    return "?";
}

const char* to_string(DirPredictor p) {
    return p == DirPredictor::Oracle ? "oracle" : "gshare";
}

std::optional<SbdMode> sbd_mode_from_string(std::string_view s) {
    if (s == "off") return SbdMode::Off;
    if (s == "head") return SbdMode::HeadOnly;
    if (s == "tail") return SbdMode::TailOnly;
    if (s == "both") return SbdMode::Both;
    return std::nullopt;
}

void SimConfig::validate() const {
    auto fail = [](const std::string& msg) { throw SimError("bad config: " + msg); };
    if (btb_entries < assoc_ways || btb_entries % assoc_ways)
        fail("btb_entries must be a positive multiple of assoc_ways");
    if (usbb_entries < assoc_ways || usbb_entries % assoc_ways)
        fail("usbb_entries must be a positive multiple of assoc_ways");
    if (rsbb_entries < assoc_ways || rsbb_entries % assoc_ways)
        fail("rsbb_entries must be a positive multiple of assoc_ways");
    if (assoc_ways < 1) fail("assoc_ways must be >= 1");
    if (ras_depth < 1) fail("ras_depth must be >= 1");
    const size_t lines = l1i_size_bytes / kLineBytes;
    if (l1i_size_bytes % kLineBytes || lines < l1i_ways || lines % l1i_ways)
        fail("l1i geometry must be a whole number of sets of 64-byte lines");
    if (l1i_miss_latency < 1) fail("l1i_miss_latency must be >= 1");
    if (ftq_entries < 1) fail("ftq_entries must be >= 1");
    if (decode_width < 1) fail("decode_width must be >= 1");
    if (fetch_to_decode_depth < 1) fail("fetch_to_decode_depth must be >= 1");
    if (decode_resteer_repair < 1) fail("decode_resteer_repair must be >= 1");
    if (execute_resteer_penalty < 1) fail("execute_resteer_penalty must be >= 1");
    if (sbd_delay < 1) fail("sbd_delay must be >= 1");
    if (gshare_bits < 1 || gshare_bits > 30) fail("gshare_bits must be in 1..30");
    if (max_valid_paths < 1) fail("max_valid_paths must be >= 1");
}

std::string SimConfig::to_json() const {
    nlohmann::json j;
    j["isa"] = to_string(isa);
    j["btb_entries"] = btb_entries;
    j["usbb_entries"] = usbb_entries;
    j["rsbb_entries"] = rsbb_entries;
    j["assoc_ways"] = assoc_ways;
    j["ras_depth"] = ras_depth;
    j["l1i_size_bytes"] = l1i_size_bytes;
    j["l1i_ways"] = l1i_ways;
    j["l1i_miss_latency"] = l1i_miss_latency;
    j["ftq_entries"] = ftq_entries;
    j["decode_width"] = decode_width;
    j["fetch_to_decode_depth"] = fetch_to_decode_depth;
    j["decode_resteer_repair"] = decode_resteer_repair;
    j["execute_resteer_penalty"] = execute_resteer_penalty;
    j["sbd_delay"] = sbd_delay;
    j["sbd_mode"] = to_string(sbd_mode);
    j["direction_predictor"] = to_string(direction_predictor);
    j["gshare_bits"] = gshare_bits;
    j["index_policy"] = to_string(index_policy);
    j["max_valid_paths"] = max_valid_paths;
    j["invalidate_on_bogus"] = invalidate_on_bogus;
    j["seed"] = seed;
    return j.dump(2);
}

SimConfig SimConfig::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SimError(std::string("bad config json: ") + e.what());
    }
    static const char* known[] = {
        "isa", "btb_entries", "usbb_entries", "rsbb_entries", "assoc_ways", "ras_depth",
        "l1i_size_bytes", "l1i_ways", "l1i_miss_latency", "ftq_entries", "decode_width",
        "fetch_to_decode_depth", "decode_resteer_repair", "execute_resteer_penalty",
        "sbd_delay", "sbd_mode", "direction_predictor", "gshare_bits", "index_policy",
        "max_valid_paths", "invalidate_on_bogus", "seed"};
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw SimError("bad config: unknown key \"" + key + "\"");
    }
    SimConfig c;
    try {
        if (j.contains("isa")) {
            auto k = isa_from_string(j["isa"].get<std::string>());
            if (!k) throw SimError("bad config: unknown isa");
            c.isa = *k;
        }
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) field = j[key].template get<std::decay_t<decltype(field)>>();
        };
        get("btb_entries", c.btb_entries);
        get("usbb_entries", c.usbb_entries);
        get("rsbb_entries", c.rsbb_entries);
        get("assoc_ways", c.assoc_ways);
        get("ras_depth", c.ras_depth);
        get("l1i_size_bytes", c.l1i_size_bytes);
        get("l1i_ways", c.l1i_ways);
        get("l1i_miss_latency", c.l1i_miss_latency);
        get("ftq_entries", c.ftq_entries);
        get("decode_width", c.decode_width);
        get("fetch_to_decode_depth", c.fetch_to_decode_depth);
        get("decode_resteer_repair", c.decode_resteer_repair);
        get("execute_resteer_penalty", c.execute_resteer_penalty);
        get("sbd_delay", c.sbd_delay);
        if (j.contains("sbd_mode")) {
            auto m = sbd_mode_from_string(j["sbd_mode"].get<std::string>());
            if (!m) throw SimError("bad config: unknown sbd_mode");
            c.sbd_mode = *m;
        }
        if (j.contains("direction_predictor")) {
            const std::string s = j["direction_predictor"].get<std::string>();
            if (s == "oracle") c.direction_predictor = DirPredictor::Oracle;
            else if (s == "gshare") c.direction_predictor = DirPredictor::Gshare;
            else throw SimError("bad config: unknown direction_predictor");
        }
        get("gshare_bits", c.gshare_bits);
        if (j.contains("index_policy")) {
            auto p = index_policy_from_string(j["index_policy"].get<std::string>());
            if (!p) throw SimError("bad config: unknown index_policy");
            c.index_policy = *p;
        }
        get("max_valid_paths", c.max_valid_paths);
        get("invalidate_on_bogus", c.invalidate_on_bogus);
        get("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        throw SimError(std::string("bad config json: ") + e.what());
    }
    c.validate();
    return c;
}

SimConfig SimConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SimError("cannot open config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

void SimConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw SimError("cannot write config: " + path);
    out << to_json() << "\n";
}

void SimConfig::apply_env_overrides() {
    if (const char* s = std::getenv("SKIA_SEED")) {
        try {
            seed = std::stoull(s, nullptr, 0);
        } catch (const std::exception&) {
            throw SimError("SKIA_SEED is not a number");
        }
    }
}

}  // namespace skia
