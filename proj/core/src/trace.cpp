#include "skia/trace.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace skia {

namespace {

constexpr char kMagic[4] = {'S', 'B', 'T', 'R'};
constexpr uint32_t kVersion = 1;
constexpr size_t kRecordBytes = 19;

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(uint8_t(v >> (8 * i)));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(uint8_t(v >> (8 * i)));
}

uint32_t get_u32(const uint8_t* p) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(p[i]) << (8 * i);
    return v;
}

uint64_t get_u64(const uint8_t* p) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(p[i]) << (8 * i);
    return v;
}

}  // namespace

std::vector<uint8_t> serialize_trace(const std::vector<TraceRecord>& records) {
    std::vector<uint8_t> out;
    out.reserve(16 + records.size() * kRecordBytes);
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u32(out, kVersion);
    put_u64(out, records.size());
    for (const auto& r : records) {
        put_u64(out, r.pc);
        put_u64(out, r.target);
        out.push_back(r.len);
        out.push_back(r.cls);
        out.push_back(r.flags);
    }
    return out;
}

std::vector<TraceRecord> deserialize_trace(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 16) throw TraceError(TraceError::Kind::Truncated, "trace header truncated");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw TraceError(TraceError::Kind::BadMagic, "bad trace magic");
    const uint32_t version = get_u32(bytes.data() + 4);
    if (version != kVersion) {
        std::ostringstream os;
        os << "unsupported trace version " << version;
        throw TraceError(TraceError::Kind::BadVersion, os.str());
    }
    const uint64_t count = get_u64(bytes.data() + 8);
    if (bytes.size() != 16 + count * kRecordBytes)
        throw TraceError(TraceError::Kind::Truncated, "trace record payload truncated");

    std::vector<TraceRecord> records(count);
    const uint8_t* p = bytes.data() + 16;
    for (uint64_t i = 0; i < count; ++i, p += kRecordBytes) {
        records[i].pc = get_u64(p);
        records[i].target = get_u64(p + 8);
        records[i].len = p[16];
        records[i].cls = p[17];
        records[i].flags = p[18];
    }
    return records;
}

void write_trace(const std::string& path, const std::vector<TraceRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw TraceError(TraceError::Kind::Io, "cannot write trace: " + path);
    auto bytes = serialize_trace(records);
    out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

std::vector<TraceRecord> read_trace(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TraceError(TraceError::Kind::Io, "cannot open trace: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return deserialize_trace(bytes);
}

std::vector<TraceViolation> validate_trace(const CodeImage& image,
                                           const std::vector<TraceRecord>& records,
                                           IsaKind isa) {
    std::vector<TraceViolation> out;
    auto report = [&](size_t i, const std::string& msg) { out.push_back({i, msg}); };

    for (size_t i = 0; i < records.size(); ++i) {
        const TraceRecord& r = records[i];
        const auto bytes = image.read_bytes(r.pc, 15, isa);
        auto d = decode_at(bytes, 0, isa);
        if (!d) {
            report(i, "bytes at pc do not decode");
        } else {
            if (d->length != r.len) report(i, "recorded len disagrees with decode");
            if (static_cast<uint8_t>(d->cls) != r.cls)
                report(i, "recorded class disagrees with decode");
        }
        if (r.branch_class() == BranchClass::NonBranch && (r.taken() || r.target != 0))
            report(i, "non-branch with taken flag or target");

        if (i + 1 < records.size()) {
            const uint64_t next = records[i + 1].pc;
            if (r.taken()) {
                if (next != r.target) report(i, "taken branch successor pc != target");
            } else {
                if (next != r.pc + r.len) report(i, "fall-through successor pc mismatch");
            }
        }
    }
    return out;
}

}  // namespace skia
