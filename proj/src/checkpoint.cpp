#include "mtrl/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace mtrl {

namespace {

constexpr char kMagic[8] = {'M', 'T', 'R', 'L', 'C', 'K', 'P', '1'};

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(uint8_t(v >> (8 * i)));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(uint8_t(v >> (8 * i)));
}

struct Cursor {
    const uint8_t* p;
    size_t left;
    const std::string& path;

    void need(size_t n) const {
        if (left < n) fail(path + ": truncated checkpoint");
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= uint32_t(p[i]) << (8 * i);
        p += 4;
        left -= 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= uint64_t(p[i]) << (8 * i);
        p += 8;
        left -= 8;
        return v;
    }
    uint8_t u8() {
        need(1);
        uint8_t v = *p;
        ++p;
        --left;
        return v;
    }
    std::vector<uint8_t> bytes(size_t n) {
        need(n);
        std::vector<uint8_t> v(p, p + n);
        p += n;
        left -= n;
        return v;
    }
};

}  // namespace

uint32_t crc32(const uint8_t* data, size_t len) {
    static uint32_t table[256];
    static bool ready = false;
    if (!ready) {
        for (uint32_t i = 0; i < 256; ++i) {
            uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            table[i] = c;
        }
        ready = true;
    }
    uint32_t c = 0xFFFFFFFFu;
    for (size_t i = 0; i < len; ++i) c = table[(c ^ data[i]) & 0xFF] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

void CheckpointWriter::add_tensor(const std::string& name, const nn::Mat& m) {
    Block b;
    b.name = name;
    b.type = 0;
    put_u32(b.payload, uint32_t(m.rows()));
    put_u32(b.payload, uint32_t(m.cols()));
    size_t off = b.payload.size();
    b.payload.resize(off + size_t(m.size()) * 4);
    static_assert(std::endian::native == std::endian::little,
                  "tensor payloads are written little-endian");
    std::memcpy(b.payload.data() + off, m.data(), size_t(m.size()) * 4);
    blocks_.push_back(std::move(b));
}

void CheckpointWriter::add_text(const std::string& name, const std::string& text) {
    Block b;
    b.name = name;
    b.type = 1;
    b.payload.assign(text.begin(), text.end());
    blocks_.push_back(std::move(b));
}

void CheckpointWriter::write(const std::string& path) const {
    std::vector<uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 8);
    put_u32(out, uint32_t(blocks_.size()));
    for (const auto& b : blocks_) {
        put_u32(out, uint32_t(b.name.size()));
        out.insert(out.end(), b.name.begin(), b.name.end());
        out.push_back(b.type);
        put_u64(out, b.payload.size());
        out.insert(out.end(), b.payload.begin(), b.payload.end());
        put_u32(out, crc32(b.payload.data(), b.payload.size()));
    }
    std::ofstream f(path, std::ios::binary);
    require(f.good(), "cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(out.data()), std::streamsize(out.size()));
    require(f.good(), "write failed: " + path);
}

CheckpointReader::CheckpointReader(const std::string& path) : path_(path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), "cannot open: " + path);
    std::vector<uint8_t> data((std::istreambuf_iterator<char>(f)),
                              std::istreambuf_iterator<char>());
    require(data.size() >= 12, path + ": not a checkpoint file");
    require(std::memcmp(data.data(), kMagic, 8) == 0,
            path + ": bad magic (not a checkpoint, or unsupported version)");
    Cursor c{data.data() + 8, data.size() - 8, path_};
    uint32_t count = c.u32();
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t name_len = c.u32();
        auto name_bytes = c.bytes(name_len);
        std::string name(name_bytes.begin(), name_bytes.end());
        Block b;
        b.type = c.u8();
        uint64_t payload_len = c.u64();
        b.payload = c.bytes(payload_len);
        uint32_t want = c.u32();
        uint32_t got = crc32(b.payload.data(), b.payload.size());
        if (want != got)
            fail(path_ + ": block '" + name + "' is corrupted (checksum mismatch)");
        blocks_.emplace(std::move(name), std::move(b));
    }
}

bool CheckpointReader::has(const std::string& name) const { return blocks_.count(name) > 0; }

std::vector<std::string> CheckpointReader::names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : blocks_) out.push_back(k);
    return out;
}

const CheckpointReader::Block& CheckpointReader::block(const std::string& name,
                                                       uint8_t type) const {
    auto it = blocks_.find(name);
    if (it == blocks_.end()) fail(path_ + ": missing block '" + name + "'");
    if (it->second.type != type) fail(path_ + ": block '" + name + "' has wrong type");
    return it->second;
}

nn::Mat CheckpointReader::tensor(const std::string& name) const {
    const Block& b = block(name, 0);
    require(b.payload.size() >= 8, path_ + ": block '" + name + "' too short");
    uint32_t rows = 0, cols = 0;
    for (int i = 0; i < 4; ++i) rows |= uint32_t(b.payload[size_t(i)]) << (8 * i);
    for (int i = 0; i < 4; ++i) cols |= uint32_t(b.payload[size_t(4 + i)]) << (8 * i);
    require(b.payload.size() == 8 + size_t(rows) * cols * 4,
            path_ + ": block '" + name + "' payload size mismatch");
    nn::Mat m(rows, cols);
    std::memcpy(m.data(), b.payload.data() + 8, size_t(m.size()) * 4);
    return m;
}

std::string CheckpointReader::text(const std::string& name) const {
    const Block& b = block(name, 1);
    return std::string(b.payload.begin(), b.payload.end());
}

}  // namespace mtrl
