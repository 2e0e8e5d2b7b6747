// Copyright 2026 The Doodle Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "doodle/train/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "doodle/errors.hpp"

namespace doodle::train {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[4] = {'D', 'F', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

std::string dtype_tag(torch::Dtype t)
{
    switch (t) {
    case torch::kFloat32: return "f32";
    case torch::kFloat64: return "f64";
    case torch::kInt64: return "i64";
    default: throw ValidationError("unsupported tensor dtype for checkpoints");
    }
}

torch::Dtype dtype_from_tag(const std::string& tag)
{
    if (tag == "f32") return torch::kFloat32;
    if (tag == "f64") return torch::kFloat64;
    if (tag == "i64") return torch::kInt64;
    throw ModelError("unknown tensor dtype '" + tag + "' in checkpoint");
}

}  // namespace

const torch::Tensor* Archive::find(const std::string& name) const
{
    for (const auto& t : tensors)
        if (t.name == name) return &t.tensor;
    return nullptr;
}

void save_archive(const Archive& archive, const std::string& path)
{
    nlohmann::json index = nlohmann::json::array();
    std::vector<torch::Tensor> blobs;
    std::uint64_t offset = 0;
    for (const auto& [name, tensor] : archive.tensors) {
        auto t = tensor.detach().cpu().contiguous();
        const auto bytes = static_cast<std::uint64_t>(t.numel() * t.element_size());
        index.push_back({{"name", name}, {"dtype", dtype_tag(t.scalar_type())}, {"shape", t.sizes().vec()},
                         {"offset", offset}, {"bytes", bytes}});
        offset += bytes;
        blobs.push_back(t);
    }
    nlohmann::json header{{"kind", archive.kind}, {"meta", archive.meta}, {"tensors", index}};
    const std::string text = header.dump();

    auto target = std::filesystem::path(path);
    if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ModelError("cannot write checkpoint '" + path + "'");
        const std::uint64_t header_size = text.size();
        out.write(kMagic, 4);
        out.write(reinterpret_cast<const char*>(&kVersion), sizeof kVersion);
        out.write(reinterpret_cast<const char*>(&header_size), sizeof header_size);
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        for (const auto& t : blobs) {
            out.write(static_cast<const char*>(t.data_ptr()), static_cast<std::streamsize>(t.numel() * t.element_size()));
        }
        if (!out) throw ModelError("failed writing checkpoint '" + path + "'");
    }
    std::filesystem::rename(tmp, path);
}

Archive load_archive(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelError("checkpoint '" + path + "' not found");
    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t header_size = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    in.read(reinterpret_cast<char*>(&header_size), sizeof header_size);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw ModelError("'" + path + "' is not a checkpoint");
    if (version != kVersion) throw ModelError("unsupported checkpoint version " + std::to_string(version));
    if (header_size > (1u << 30)) throw ModelError("checkpoint header too large");

    std::string text(header_size, '\0');
    in.read(text.data(), static_cast<std::streamsize>(header_size));
    if (!in) throw ModelError("truncated checkpoint header in '" + path + "'");

    Archive archive;
    try {
        auto header = nlohmann::json::parse(text);
        archive.kind = header.at("kind").get<std::string>();
        archive.meta = header.at("meta");
        const auto data_start = in.tellg();
        for (const auto& entry : header.at("tensors")) {
            auto dtype = dtype_from_tag(entry.at("dtype").get<std::string>());
            auto shape = entry.at("shape").get<std::vector<std::int64_t>>();
            auto offset = entry.at("offset").get<std::uint64_t>();
            auto bytes = entry.at("bytes").get<std::uint64_t>();
            auto t = torch::empty(shape, torch::TensorOptions().dtype(dtype));
            if (static_cast<std::uint64_t>(t.numel() * t.element_size()) != bytes) {
                throw ModelError("tensor size mismatch in checkpoint");
            }
            in.seekg(data_start + static_cast<std::streamoff>(offset));
            in.read(static_cast<char*>(t.data_ptr()), static_cast<std::streamsize>(bytes));
            if (!in) throw ModelError("truncated tensor data in '" + path + "'");
            archive.tensors.push_back({entry.at("name").get<std::string>(), t});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ModelError("malformed checkpoint header: " + std::string(e.what()));
    }
    return archive;
}

std::vector<NamedTensor> module_tensors(const torch::nn::Module& module, const std::string& prefix)
{
    std::vector<NamedTensor> out;
    for (const auto& p : module.named_parameters()) out.push_back({prefix + p.key(), p.value()});
    for (const auto& b : module.named_buffers()) out.push_back({prefix + b.key(), b.value()});
    return out;
}

void load_module_tensors(torch::nn::Module& module, const Archive& archive, const std::string& prefix)
{
    torch::NoGradGuard no_grad;
    auto copy = [&](const std::string& name, torch::Tensor& dst) {
        const torch::Tensor* src = archive.find(prefix + name);
        if (!src) throw ModelError("checkpoint is missing tensor '" + prefix + name + "'");
        if (src->sizes() != dst.sizes()) throw ModelError("shape mismatch for tensor '" + prefix + name + "'");
        dst.copy_(*src);
    };
    for (auto& p : module.named_parameters()) copy(p.key(), p.value());
    for (auto& b : module.named_buffers()) copy(b.key(), b.value());
}

void save_pl(pl::PlNet& net, const std::string& path, const nlohmann::json& extra)
{
    Archive a;
    a.kind = "pl";
    a.meta = {{"config", net->config().to_json()}, {"vocab", net->vocabulary().to_json()}, {"extra", extra}};
    a.tensors = module_tensors(*net, "model.");
    save_archive(a, path);
}

pl::PlNet pl_from_archive(const Archive& archive, const std::string& prefix)
{
    try {
        auto config = pl::PlConfig::from_json(archive.meta.at("config"));
        auto vocab = pl::Vocabulary::from_json(archive.meta.at("vocab"));
        pl::PlNet net(config, vocab);
        const torch::Tensor* probe = archive.find(prefix + "z_proj.weight");
        if (probe && probe->scalar_type() == torch::kFloat64) net->to(torch::kFloat64);
        load_module_tensors(*net, archive, prefix);
        net->mark_trained();
        net->eval();
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw ModelError("malformed part locator checkpoint: " + std::string(e.what()));
    } catch (const ValidationError& e) {
        throw ModelError("invalid part locator checkpoint: " + std::string(e.what()));
    }
}

pl::PlNet load_pl(const std::string& path)
{
    auto a = load_archive(path);
    if (a.kind != "pl" && a.kind != "pl_trainer") throw ModelError("'" + path + "' is not a part locator checkpoint");
    return pl_from_archive(a);
}

void save_ps(ps::PsNet& net, const std::string& path, const nlohmann::json& extra)
{
    Archive a;
    a.kind = "ps";
    a.meta = {{"config", net->config().to_json()}, {"vocab", net->vocabulary().to_json()}, {"extra", extra}};
    a.tensors = module_tensors(*net, "model.");
    save_archive(a, path);
}

ps::PsNet ps_from_archive(const Archive& archive, const std::string& prefix)
{
    try {
        auto config = ps::PsConfig::from_json(archive.meta.at("config"));
        auto vocab = pl::Vocabulary::from_json(archive.meta.at("vocab"));
        ps::PsNet net(config, vocab);
        const torch::Tensor* probe = archive.find(prefix + "generator.fuse.weight");
        if (probe && probe->scalar_type() == torch::kFloat64) net->to(torch::kFloat64);
        load_module_tensors(*net, archive, prefix);
        net->mark_trained();
        net->eval();
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw ModelError("malformed part sketcher checkpoint: " + std::string(e.what()));
    } catch (const ValidationError& e) {
        throw ModelError("invalid part sketcher checkpoint: " + std::string(e.what()));
    }
}

ps::PsNet load_ps(const std::string& path)
{
    auto a = load_archive(path);
    if (a.kind != "ps" && a.kind != "ps_trainer") throw ModelError("'" + path + "' is not a part sketcher checkpoint");
    return ps_from_archive(a);
}

}  // namespace doodle::train
