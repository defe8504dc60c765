#pragma once

#include <map>
#include <string>

#include "recongan/net/layers.hpp"

namespace recongan::net {

/// Binary container for named float tensors plus a free-form JSON manifest.
/// Layout: magic "RGTN", u32 format version, u64 manifest length, manifest
/// bytes, u32 tensor count, then per tensor: u32 name length, name, u32 ndim,
/// i32 dims, raw f32 data. Tensors are written in name order.
inline constexpr uint32_t kTensorFileVersion = 1;

void save_tensors(const std::string& path, const ParamRegistry& reg, const std::string& manifest);

struct TensorFile {
    std::string manifest;
    std::map<std::string, Tensor> tensors;
};

TensorFile load_tensors(const std::string& path);

/// Copy loaded tensors into registry entries by name. Throws if a registry
/// entry is missing from the file or shapes differ; extra file tensors are
/// reported in the returned list rather than treated as errors.
std::vector<std::string> restore_into(const TensorFile& file, ParamRegistry& reg);

}  // namespace recongan::net
