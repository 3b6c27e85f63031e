#pragma once

// Internal helpers for the checkpoint container: a text header of
// `key = value` lines, a blank line, then a raw payload of f32 blobs whose
// fnv1a64 checksum is stored in the header.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace robustadapt::ckpt {

struct Header {
    // Insertion-ordered keys so files are byte-stable.
    std::vector<std::pair<std::string, std::string>> fields;

    void add(const std::string& key, const std::string& value) { fields.emplace_back(key, value); }
    const std::string& get(const std::string& key) const;
};

std::string hexfloat(float v);
float parse_hexfloat(const std::string& s, const std::string& field);

void write_checkpoint(const std::filesystem::path& path, Header header,
                      const std::vector<char>& payload);

struct Loaded {
    std::map<std::string, std::string> fields;
    std::vector<char> payload;
};

/// Verifies payload length and checksum; throws FormatError / VersionMismatch.
Loaded read_checkpoint(const std::filesystem::path& path, const std::string& expected_kind);

/// Sequential payload reader for fixed-size f32 blobs.
class PayloadReader {
public:
    explicit PayloadReader(const std::vector<char>& payload) : payload_(payload) {}
    std::vector<float> take(size_t count, const char* field);
    void expect_done(const char* what) const;

private:
    const std::vector<char>& payload_;
    size_t offset_ = 0;
};

void append_floats(std::vector<char>& payload, const float* data, size_t count);

}  // namespace robustadapt::ckpt
