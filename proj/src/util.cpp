#include "robustadapt/util.hpp"

#include <cstdio>
#include <fstream>

#include "robustadapt/errors.hpp"

namespace robustadapt {

uint64_t fnv1a64(std::span<const char> bytes, uint64_t seed) {
    uint64_t h = seed;
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    return h;
}

std::string to_hex(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::vector<char> read_file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open " + p.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed for " + p.string());
    return bytes;
}

void atomic_write_file(const std::filesystem::path& p, std::span<const char> bytes) {
    const std::filesystem::path tmp = p.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), std::streamsize(bytes.size()));
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, p, ec);
    if (ec) throw IoError("rename " + tmp.string() + " -> " + p.string() + ": " + ec.message());
}

void atomic_write_file(const std::filesystem::path& p, const std::string& text) {
    atomic_write_file(p, std::span<const char>(text.data(), text.size()));
}

}  // namespace robustadapt
