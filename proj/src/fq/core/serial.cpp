// SPDX-License-Identifier: Apache-2.0
#include "fq/core/serial.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fq/core/fingerprint.hpp"

namespace fq {
namespace {

constexpr char kDictMagic[8] = {'F', 'Q', 'C', 'K', 'P', 'T', '1', '\n'};
constexpr char kTensorMagic[8] = {'F', 'Q', 'T', 'E', 'N', 'S', '1', '\n'};

void write_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void write_i32(std::ostream& os, int32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }

uint32_t read_u32(std::istream& is) {
    uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    if (!is) throw std::runtime_error("truncated tensor file");
    return v;
}

int32_t read_i32(std::istream& is) {
    int32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    if (!is) throw std::runtime_error("truncated tensor file");
    return v;
}

void write_tensor_body(std::ostream& os, const Tensor& t) {
    write_u32(os, static_cast<uint32_t>(t.ndim()));
    for (int d : t.shape()) write_i32(os, d);
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.numel()) * 4);
}

Tensor read_tensor_body(std::istream& is) {
    const uint32_t ndim = read_u32(is);
    if (ndim > 8) throw std::runtime_error("corrupt tensor file: ndim too large");
    std::vector<int> shape(ndim);
    for (auto& d : shape) d = read_i32(is);
    Tensor t(shape);
    is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.numel()) * 4);
    if (!is) throw std::runtime_error("truncated tensor payload");
    return t;
}

}  // namespace

void save_tensors(const std::string& path, const NamedTensors& tensors) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os.write(kDictMagic, 8);
    write_u32(os, static_cast<uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
        write_u32(os, static_cast<uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_tensor_body(os, t);
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

NamedTensors load_tensors(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kDictMagic, 8) != 0)
        throw std::runtime_error("not a parameter dict file: " + path);
    const uint32_t count = read_u32(is);
    NamedTensors out;
    out.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t len = read_u32(is);
        std::string name(len, '\0');
        is.read(name.data(), len);
        if (!is) throw std::runtime_error("truncated name in " + path);
        out.emplace_back(std::move(name), read_tensor_body(is));
    }
    return out;
}

void save_tensor(const std::string& path, const Tensor& t) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os.write(kTensorMagic, 8);
    write_tensor_body(os, t);
    if (!os) throw std::runtime_error("write failed: " + path);
}

Tensor load_tensor(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kTensorMagic, 8) != 0)
        throw std::runtime_error("not a tensor file: " + path);
    return read_tensor_body(is);
}

std::string tensors_fingerprint(const NamedTensors& tensors) {
    Fingerprint f;
    for (const auto& [name, t] : tensors) f.update_tensor(name, t);
    return f.hex();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os << text;
    if (!os) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace fq
