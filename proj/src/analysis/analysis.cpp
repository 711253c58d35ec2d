#include "gsformer/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

#include "gsformer/errors.hpp"
#include "gsformer/flops.hpp"

namespace gsf {

Rational::Rational(std::uint64_t n, std::uint64_t d) {
    if (d == 0) throw numeric_error("rational with zero denominator");
    const auto g = std::gcd(n, d);
    num = g == 0 ? 0 : n / g;
    den = g == 0 ? 1 : d / g;
}

std::string Rational::str() const {
    return is_integer() ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
}

Rational operator+(const Rational& a, const Rational& b) {
    const auto l = std::lcm(a.den, b.den);
    return {a.num * (l / a.den) + b.num * (l / b.den), l};
}

Rational operator*(const Rational& a, const Rational& b) {
    const Rational x(a.num, b.den);
    const Rational y(b.num, a.den);
    return {x.num * y.num, x.den * y.den};
}

Rational operator/(const Rational& a, const Rational& b) {
    if (b.num == 0) throw numeric_error("division by a zero rational");
    return a * Rational(b.den, b.num);
}

bool operator<(const Rational& a, const Rational& b) {
    return static_cast<unsigned __int128>(a.num) * b.den < static_cast<unsigned __int128>(b.num) * a.den;
}

namespace {

void require_positive(std::uint64_t v, const char* name) {
    if (v == 0) throw config_error(std::string(name) + " must be >= 1");
}

}  // namespace

Rational analytic_ssa(std::uint64_t frames, std::uint64_t dim, std::uint64_t interval) {
    require_positive(frames, "T");
    require_positive(dim, "D");
    require_positive(interval, "m");
    return {2 * frames * frames * dim, interval};
}

Rational analytic_skt(std::uint64_t frames, std::uint64_t dim, std::uint64_t interval) {
    const auto attention = analytic_ssa(frames, dim, interval);
    return attention + Rational((interval + 4) * frames * dim * dim, interval);
}

Rational analytic_stt(std::uint64_t frames, std::uint64_t dim, std::uint64_t kernel, std::uint64_t stride) {
    require_positive(kernel, "k");
    require_positive(stride, "s");
    return analytic_vanilla(frames, dim) + Rational(2 * (kernel + stride) * frames * dim * dim, stride);
}

Rational analytic_vanilla(std::uint64_t frames, std::uint64_t dim) { return analytic_ssa(frames, dim, 1); }

std::map<std::string, std::uint64_t> empirical_cost(const ModelConfig& config) {
    const GSFormer model(config, 0);
    FlopCounter counter;
    {
        CountingScope scope(counter);
        model.forward(Tensor({config.frames, 2 * config.joints}));
    }
    return counter.mac_table();
}

CostReport cost_report(const ModelConfig& config, std::uint64_t kernel, std::uint64_t stride) {
    config.validate();
    CostReport r;
    r.frames = config.frames;
    r.dim = config.model_dim;
    r.interval = config.interval;
    r.kernel = kernel;
    r.stride = stride;
    r.ssa = analytic_ssa(r.frames, r.dim, r.interval);
    r.skt = analytic_skt(r.frames, r.dim, r.interval);
    r.stt = analytic_stt(r.frames, r.dim, kernel, stride);
    r.vanilla = analytic_vanilla(r.frames, r.dim);
    r.ssa_over_vanilla = r.ssa / r.vanilla;
    r.skt_over_stt = r.skt / r.stt;
    r.empirical = empirical_cost(config);
    for (const auto& [scope, macs] : r.empirical) r.empirical_total += macs;
    r.params = param_count(config);
    return r;
}

nlohmann::json to_json(const CostReport& r) {
    auto rational = [](const Rational& q) {
        nlohmann::json j = {{"value", q.value()}, {"exact", q.str()}};
        if (q.is_integer()) j["macs"] = q.num;
        return j;
    };
    return {{"T", r.frames},
            {"D", r.dim},
            {"m", r.interval},
            {"k", r.kernel},
            {"s", r.stride},
            {"analytic_ssa", rational(r.ssa)},
            {"analytic_skt", rational(r.skt)},
            {"analytic_stt", rational(r.stt)},
            {"analytic_vanilla", rational(r.vanilla)},
            {"ssa_over_vanilla", rational(r.ssa_over_vanilla)},
            {"skt_over_stt", rational(r.skt_over_stt)},
            {"empirical", r.empirical},
            {"empirical_total", r.empirical_total},
            {"params", r.params}};
}

std::vector<AttentionMap> head_average(const std::vector<AttentionMap>& maps) {
    std::map<std::tuple<std::string, std::size_t, std::size_t>, std::pair<AttentionMap, std::size_t>> groups;
    std::vector<AttentionMap> out;
    for (const auto& m : maps) {
        if (m.stage == "spatial") {
            out.push_back(m);
            continue;
        }
        auto key = std::make_tuple(m.stage, m.layer, m.set);
        auto it = groups.find(key);
        if (it == groups.end()) {
            groups.emplace(key, std::make_pair(m, std::size_t{1}));
            continue;
        }
        auto& [acc, count] = it->second;
        if (acc.rows != m.rows || acc.cols != m.cols) throw dimension_error("head maps of one set differ in shape");
        for (std::size_t i = 0; i < acc.values.size(); ++i) acc.values[i] += m.values[i];
        ++count;
    }
    for (auto& [key, entry] : groups) {
        auto& [acc, count] = entry;
        for (auto& v : acc.values) v /= static_cast<double>(count);
        out.push_back(std::move(acc));
    }
    return out;
}

void write_matrix_csv(const std::string& path, std::size_t rows, std::size_t cols, const std::vector<double>& values) {
    if (values.size() != rows * cols) throw dimension_error("matrix values do not match rows x cols");
    std::ofstream out(path);
    if (!out) throw data_error("cannot write '" + path + "'");
    char buf[32];
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            std::snprintf(buf, sizeof buf, "%.9g", values[r * cols + c]);
            out << (c ? "," : "") << buf;
        }
        out << '\n';
    }
    if (!out) throw data_error("I/O failure writing '" + path + "'");
}

std::vector<double> read_matrix_csv(const std::string& path, std::size_t* rows, std::size_t* cols) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open '" + path + "'");
    std::vector<double> values;
    std::size_t n_rows = 0, n_cols = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t count = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                values.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw data_error("'" + path + "': bad number '" + cell + "' on row " + std::to_string(n_rows + 1));
            }
            ++count;
        }
        if (n_rows > 0 && count != n_cols) throw data_error("'" + path + "': ragged rows");
        n_cols = count;
        ++n_rows;
    }
    if (rows) *rows = n_rows;
    if (cols) *cols = n_cols;
    return values;
}

std::vector<AttentionFile> export_attention(const GSFormer& model, const Tensor& clip, const std::string& directory) {
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    if (ec) throw data_error("cannot create '" + directory + "': " + ec.message());

    AttentionTrace trace;
    model.forward(clip, 1, {}, &trace);
    std::vector<AttentionFile> files;
    auto emit = [&](const AttentionMap& m, const std::string& head) {
        AttentionFile f;
        f.stage = m.stage;
        f.layer = m.layer;
        f.head = head;
        f.set = m.set;
        f.rows = m.rows;
        f.cols = m.cols;
        f.file = m.stage + "_l" + std::to_string(m.layer) + "_h" + head + "_s" + std::to_string(m.set) + ".csv";
        write_matrix_csv((std::filesystem::path(directory) / f.file).string(), m.rows, m.cols, m.values);
        files.push_back(f);
    };
    for (const auto& m : trace.maps) emit(m, m.stage == "spatial" ? "0" : std::to_string(m.head));
    for (const auto& m : head_average(trace.maps)) {
        if (m.stage != "spatial") emit(m, "mean");
    }

    nlohmann::json index = nlohmann::json::array();
    for (const auto& f : files) {
        index.push_back({{"file", f.file},
                         {"stage", f.stage},
                         {"layer", f.layer},
                         {"head", f.head},
                         {"set", f.set},
                         {"rows", f.rows},
                         {"cols", f.cols}});
    }
    std::ofstream out(std::filesystem::path(directory) / "index.json");
    if (!out) throw data_error("cannot write attention index in '" + directory + "'");
    out << nlohmann::json{{"maps", index}}.dump(2) << '\n';
    return files;
}

}  // namespace gsf
