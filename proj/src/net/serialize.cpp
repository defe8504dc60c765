#include "recongan/net/serialize.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace recongan::net {

namespace {

constexpr char kMagic[4] = {'R', 'G', 'T', 'N'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("tensor file truncated");
    return v;
}

}  // namespace

void save_tensors(const std::string& path, const ParamRegistry& reg,
                  const std::string& manifest) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("failed to open for write: " + path);

    out.write(kMagic, 4);
    write_pod(out, kTensorFileVersion);
    write_pod(out, static_cast<uint64_t>(manifest.size()));
    out.write(manifest.data(), static_cast<std::streamsize>(manifest.size()));

    std::vector<const ParamEntry*> sorted;
    for (const auto& e : reg.entries()) sorted.push_back(&e);
    std::sort(sorted.begin(), sorted.end(),
              [](const ParamEntry* a, const ParamEntry* b) { return a->name < b->name; });

    write_pod(out, static_cast<uint32_t>(sorted.size()));
    for (const ParamEntry* e : sorted) {
        write_pod(out, static_cast<uint32_t>(e->name.size()));
        out.write(e->name.data(), static_cast<std::streamsize>(e->name.size()));
        write_pod(out, static_cast<uint32_t>(e->value->ndim()));
        for (int d : e->value->shape()) write_pod(out, static_cast<int32_t>(d));
        out.write(reinterpret_cast<const char*>(e->value->data()),
                  static_cast<std::streamsize>(e->value->size() * sizeof(float)));
    }
    if (!out) throw std::runtime_error("failed while writing: " + path);
}

TensorFile load_tensors(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("failed to open: " + path);

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("not a tensor file: " + path);
    const auto version = read_pod<uint32_t>(in);
    if (version != kTensorFileVersion)
        throw std::runtime_error("tensor file version mismatch in " + path + ": file has v" +
                                 std::to_string(version) + ", reader expects v" +
                                 std::to_string(kTensorFileVersion));

    TensorFile file;
    const auto manifest_len = read_pod<uint64_t>(in);
    file.manifest.resize(manifest_len);
    in.read(file.manifest.data(), static_cast<std::streamsize>(manifest_len));

    const auto count = read_pod<uint32_t>(in);
    for (uint32_t i = 0; i < count; ++i) {
        const auto name_len = read_pod<uint32_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const auto ndim = read_pod<uint32_t>(in);
        std::vector<int> shape(ndim);
        for (auto& d : shape) d = read_pod<int32_t>(in);
        Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.size() * sizeof(float)));
        if (!in) throw std::runtime_error("tensor file truncated: " + path);
        file.tensors.emplace(std::move(name), std::move(t));
    }
    return file;
}

std::vector<std::string> restore_into(const TensorFile& file, ParamRegistry& reg) {
    for (auto& entry : reg.entries()) {
        auto it = file.tensors.find(entry.name);
        if (it == file.tensors.end())
            throw std::runtime_error("tensor missing from file: " + entry.name);
        if (!(it->second.same_shape(*entry.value)))
            throw std::runtime_error("tensor shape mismatch for " + entry.name + ": file " +
                                     it->second.shape_str() + " vs model " +
                                     entry.value->shape_str());
        *entry.value = it->second;
    }
    std::vector<std::string> extras;
    for (const auto& [name, t] : file.tensors) {
        bool known = false;
        for (const auto& entry : reg.entries())
            if (entry.name == name) {
                known = true;
                break;
            }
        if (!known) extras.push_back(name);
    }
    return extras;
}

}  // namespace recongan::net
