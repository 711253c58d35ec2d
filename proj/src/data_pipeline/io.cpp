#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <random>

#include "../common/binary_io.hpp"
#include "gsformer/data.hpp"
#include "gsformer/errors.hpp"

namespace gsf {

namespace {

void check_shapes(const Dataset& ds, std::size_t& frames, std::size_t& joints) {
    if (ds.inputs.size() != ds.targets.size() || ds.inputs.size() != ds.roots.size()) {
        throw data_error("dataset has mismatched input/target/root counts");
    }
    frames = ds.inputs.empty() ? 0 : ds.inputs.front().frames;
    joints = ds.inputs.empty() ? 0 : ds.inputs.front().joints;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& a = ds.inputs[i];
        const auto& b = ds.targets[i];
        if (a.frames != frames || b.frames != frames || a.joints != joints || b.joints != joints ||
            ds.roots[i].size() != frames * 3) {
            throw data_error("sequence " + std::to_string(i) + " differs in shape; the file format needs uniform V, J");
        }
    }
}

void write_floats(std::ostream& out, const std::vector<double>& values) {
    for (double v : values) binary::write_f32(out, static_cast<float>(v));
}

void read_floats(std::istream& in, std::vector<double>& values) {
    for (auto& v : values) v = static_cast<double>(binary::read_f32(in, "sequence payload"));
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::string& path) {
    std::size_t frames = 0;
    std::size_t joints = 0;
    check_shapes(dataset, frames, joints);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write dataset '" + path + "'");
    out.write("GSP1", 4);
    binary::write_uint<std::uint32_t>(out, kDatasetVersion);
    binary::write_uint<std::uint32_t>(out, static_cast<std::uint32_t>(frames));
    binary::write_uint<std::uint32_t>(out, static_cast<std::uint32_t>(joints));
    binary::write_uint<std::uint32_t>(out, 2);
    binary::write_uint<std::uint32_t>(out, static_cast<std::uint32_t>(dataset.camera.width));
    binary::write_uint<std::uint32_t>(out, static_cast<std::uint32_t>(dataset.camera.height));
    binary::write_f32(out, static_cast<float>(dataset.camera.focal));
    binary::write_f32(out, static_cast<float>(dataset.fps));
    binary::write_uint<std::uint64_t>(out, dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        write_floats(out, dataset.inputs[i].coords);
        write_floats(out, dataset.targets[i].coords);
        write_floats(out, dataset.roots[i]);
    }
    if (!out) throw data_error("I/O failure writing dataset '" + path + "'");
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open dataset '" + path + "'");
    binary::expect_magic(in, "GSP1", path);
    const auto version = binary::read_uint<std::uint32_t>(in, "header version");
    if (version != kDatasetVersion) {
        throw data_error("dataset '" + path + "' has format version " + std::to_string(version) + ", expected " +
                         std::to_string(kDatasetVersion));
    }
    const auto frames = binary::read_uint<std::uint32_t>(in, "header V");
    const auto joints = binary::read_uint<std::uint32_t>(in, "header J");
    const auto dims = binary::read_uint<std::uint32_t>(in, "header dims");
    if (dims != 2) throw data_error("malformed header: input dims must be 2, got " + std::to_string(dims));
    Dataset ds;
    ds.camera.width = binary::read_uint<std::uint32_t>(in, "header width");
    ds.camera.height = binary::read_uint<std::uint32_t>(in, "header height");
    ds.camera.focal = binary::read_f32(in, "header focal");
    ds.fps = binary::read_f32(in, "header fps");
    const auto count = binary::read_uint<std::uint64_t>(in, "header count");
    if (count > 0 && (frames == 0 || joints == 0)) throw data_error("malformed header: zero V or J");

    // Reject counts the file cannot hold before allocating.
    const auto here = in.tellg();
    in.seekg(0, std::ios::end);
    const auto remaining = static_cast<std::uint64_t>(in.tellg() - here);
    in.seekg(here);
    const std::uint64_t record = (static_cast<std::uint64_t>(frames) * joints * 5 + frames * 3ull) * 4;
    if (count > 0 && remaining / record < count) throw data_error("truncated payload in '" + path + "'");

    for (std::uint64_t i = 0; i < count; ++i) {
        PoseSequence2D in2d(frames, joints);
        PoseSequence3D out3d(frames, joints);
        std::vector<double> root(static_cast<std::size_t>(frames) * 3);
        read_floats(in, in2d.coords);
        read_floats(in, out3d.coords);
        read_floats(in, root);
        ds.inputs.push_back(std::move(in2d));
        ds.targets.push_back(std::move(out3d));
        ds.roots.push_back(std::move(root));
    }
    if (in.peek() != std::char_traits<char>::eof()) throw data_error("trailing bytes after payload in '" + path + "'");
    return ds;
}

void write_manifest(const Dataset& dataset, const std::string& dataset_path, const std::string& manifest_path) {
    nlohmann::json seqs = nlohmann::json::array();
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        seqs.push_back({{"index", i},
                        {"path", dataset_path},
                        {"V", dataset.inputs[i].frames},
                        {"J", dataset.inputs[i].joints},
                        {"fps", dataset.fps}});
    }
    const nlohmann::json doc = {{"format", "GSP1"},
                                {"version", kDatasetVersion},
                                {"dataset", dataset_path},
                                {"count", dataset.size()},
                                {"sequences", seqs}};
    std::ofstream out(manifest_path);
    if (!out) throw data_error("cannot write manifest '" + manifest_path + "'");
    out << doc.dump(2) << '\n';
}

std::vector<SequenceEntry> read_manifest(const std::string& manifest_path, std::string* dataset_path) {
    std::ifstream in(manifest_path);
    if (!in) throw data_error("cannot open manifest '" + manifest_path + "'");
    try {
        const auto doc = nlohmann::json::parse(in);
        if (dataset_path) *dataset_path = doc.at("dataset").get<std::string>();
        std::vector<SequenceEntry> entries;
        for (const auto& s : doc.at("sequences")) {
            entries.push_back({s.at("index").get<std::size_t>(), s.at("V").get<std::size_t>(),
                               s.at("J").get<std::size_t>(), s.at("fps").get<double>()});
        }
        return entries;
    } catch (const nlohmann::json::exception& e) {
        throw data_error("malformed manifest '" + manifest_path + "': " + e.what());
    }
}

Split split_dataset(std::size_t count, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction <= 1.0)) throw config_error("train_fraction must be in (0, 1]");
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(count)));
    if (count > 1 && n_train == count && train_fraction < 1.0) n_train = count - 1;
    Split split;
    split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

}  // namespace gsf
