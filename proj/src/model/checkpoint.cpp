#include <fstream>

#include "../common/binary_io.hpp"
#include "gsformer/errors.hpp"
#include "gsformer/model.hpp"

namespace gsf {

// Layout: "GSF1" | u64 json length | model config JSON | per tensor:
// u32 name length | name | u32 rank | u64 extents... | f64 values (little-endian).
void save_checkpoint(const GSFormer& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write checkpoint '" + path + "'");
    out.write("GSF1", 4);
    const auto config = to_json(model.config()).dump();
    binary::write_uint<std::uint64_t>(out, config.size());
    out.write(config.data(), static_cast<std::streamsize>(config.size()));
    for (const auto& [name, tensor] : model.params().entries()) {
        binary::write_uint<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        binary::write_uint<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.rank()));
        for (auto extent : tensor.shape()) binary::write_uint<std::uint64_t>(out, extent);
        for (double v : tensor.values()) binary::write_f64(out, v);
    }
    if (!out) throw data_error("I/O failure writing checkpoint '" + path + "'");
}

GSFormer load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open checkpoint '" + path + "'");
    binary::expect_magic(in, "GSF1", path);
    const auto length = binary::read_uint<std::uint64_t>(in, "config length");
    if (length > (1u << 24)) throw data_error("checkpoint config length is implausible");
    std::string text(length, '\0');
    if (!in.read(text.data(), static_cast<std::streamsize>(length))) throw data_error("truncated checkpoint config");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("checkpoint config is not valid JSON: ") + e.what());
    }
    GSFormer model(model_config_from_json(j), 0);

    std::vector<std::pair<std::string, Tensor>> tensors;
    while (in.peek() != std::char_traits<char>::eof()) {
        const auto name_len = binary::read_uint<std::uint32_t>(in, "tensor name length");
        if (name_len > 4096) throw data_error("checkpoint tensor name length is implausible");
        std::string name(name_len, '\0');
        if (!in.read(name.data(), name_len)) throw data_error("truncated tensor name");
        const auto rank = binary::read_uint<std::uint32_t>(in, "tensor rank");
        if (rank == 0 || rank > 8) throw data_error("checkpoint tensor '" + name + "' has invalid rank");
        Shape shape(rank);
        for (auto& extent : shape) extent = binary::read_uint<std::uint64_t>(in, "tensor extent");
        std::vector<double> values(numel(shape));
        for (auto& v : values) v = binary::read_f64(in, name.c_str());
        tensors.emplace_back(name, Tensor(shape, std::move(values)));
    }
    model.params().assign(tensors);
    return model;
}

}  // namespace gsf
