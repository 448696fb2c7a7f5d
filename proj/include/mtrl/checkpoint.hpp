#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mtrl/nn/tensor.hpp"

namespace mtrl {

// Self-describing binary container: named blocks with a per-block checksum.
// Tensor payloads are little-endian 32-bit floats with explicit shapes.
class CheckpointWriter {
public:
    void add_tensor(const std::string& name, const nn::Mat& m);
    void add_text(const std::string& name, const std::string& text);
    void write(const std::string& path) const;

private:
    struct Block {
        std::string name;
        uint8_t type;  // 0 tensor, 1 text
        std::vector<uint8_t> payload;
    };
    std::vector<Block> blocks_;
};

class CheckpointReader {
public:
    explicit CheckpointReader(const std::string& path);

    bool has(const std::string& name) const;
    std::vector<std::string> names() const;
    nn::Mat tensor(const std::string& name) const;
    std::string text(const std::string& name) const;

private:
    struct Block {
        uint8_t type;
        std::vector<uint8_t> payload;
    };
    const Block& block(const std::string& name, uint8_t type) const;
    std::map<std::string, Block> blocks_;
    std::string path_;
};

uint32_t crc32(const uint8_t* data, size_t len);

}  // namespace mtrl
