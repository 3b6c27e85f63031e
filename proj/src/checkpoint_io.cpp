#include "checkpoint_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <sstream>

#include "robustadapt/errors.hpp"
#include "robustadapt/util.hpp"

namespace robustadapt::ckpt {

const std::string& Header::get(const std::string& key) const {
    for (const auto& [k, v] : fields)
        if (k == key) return v;
    throw FormatError("checkpoint header missing key '" + key + "'");
}

std::string hexfloat(float v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%a", double(v));
    return buf;
}

float parse_hexfloat(const std::string& s, const std::string& field) {
    char* end = nullptr;
    const float v = std::strtof(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw FormatError(field + ": cannot parse float '" + s + "'");
    return v;
}

void write_checkpoint(const std::filesystem::path& path, Header header,
                      const std::vector<char>& payload) {
    header.add("payload_bytes", std::to_string(payload.size()));
    header.add("checksum", to_hex(fnv1a64(payload)));

    std::string out;
    for (const auto& [k, v] : header.fields) out += k + " = " + v + "\n";
    out += "\n";
    out.append(payload.begin(), payload.end());
    atomic_write_file(path, out);
}

Loaded read_checkpoint(const std::filesystem::path& path, const std::string& expected_kind) {
    const auto bytes = read_file_bytes(path);

    Loaded loaded;
    size_t pos = 0;
    while (pos < bytes.size()) {
        size_t eol = pos;
        while (eol < bytes.size() && bytes[eol] != '\n') ++eol;
        if (eol == bytes.size())
            throw FormatError("checkpoint header not terminated by a blank line (offset " +
                              std::to_string(pos) + ")");
        const std::string line(bytes.begin() + pos, bytes.begin() + eol);
        pos = eol + 1;
        if (line.empty()) break;  // header/payload separator
        const auto eq = line.find(" = ");
        if (eq == std::string::npos)
            throw FormatError("checkpoint header: expected 'key = value', got '" + line + "'");
        loaded.fields[line.substr(0, eq)] = line.substr(eq + 3);
    }

    const auto version = loaded.fields.find("format_version");
    if (version == loaded.fields.end() || version->second != "1")
        throw VersionMismatchError("checkpoint format_version '" +
                                   (version == loaded.fields.end() ? "?" : version->second) +
                                   "', expected 1");
    const auto kind = loaded.fields.find("kind");
    if (kind == loaded.fields.end() || kind->second != expected_kind)
        throw FormatError("checkpoint kind '" +
                          (kind == loaded.fields.end() ? "?" : kind->second) + "', expected '" +
                          expected_kind + "'");

    const auto want = loaded.fields.find("payload_bytes");
    if (want == loaded.fields.end()) throw FormatError("checkpoint header missing payload_bytes");
    const size_t payload_bytes = size_t(std::stoull(want->second));
    const size_t actual = bytes.size() - pos;
    if (actual != payload_bytes)
        throw FormatError("checkpoint payload: expected " + std::to_string(payload_bytes) +
                          " bytes at offset " + std::to_string(pos) + ", found " +
                          std::to_string(actual));
    loaded.payload.assign(bytes.begin() + pos, bytes.end());

    const auto sum = loaded.fields.find("checksum");
    if (sum == loaded.fields.end()) throw FormatError("checkpoint header missing checksum");
    const std::string got = to_hex(fnv1a64(loaded.payload));
    if (got != sum->second)
        throw FormatError("checkpoint checksum mismatch: header " + sum->second + ", payload " +
                          got);
    return loaded;
}

std::vector<float> PayloadReader::take(size_t count, const char* field) {
    const size_t need = count * sizeof(float);
    if (offset_ + need > payload_.size())
        throw FormatError(std::string(field) + ": payload truncated at byte offset " +
                          std::to_string(offset_) + " (need " + std::to_string(need) + " more)");
    std::vector<float> out(count);
    std::memcpy(out.data(), payload_.data() + offset_, need);
    offset_ += need;
    return out;
}

void PayloadReader::expect_done(const char* what) const {
    if (offset_ != payload_.size())
        throw FormatError(std::string(what) + ": " + std::to_string(payload_.size() - offset_) +
                          " unread payload bytes");
}

void append_floats(std::vector<char>& payload, const float* data, size_t count) {
    const size_t old = payload.size();
    payload.resize(old + count * sizeof(float));
    std::memcpy(payload.data() + old, data, count * sizeof(float));
}

}  // namespace robustadapt::ckpt
