#pragma once

#include <cstddef>
#include <cstdint>
#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "gsformer/config.hpp"
#include "gsformer/model.hpp"
#include "gsformer/trace.hpp"

namespace gsf {

// Non-negative fraction kept in lowest terms.
struct Rational {
    std::uint64_t num = 0;
    std::uint64_t den = 1;

    Rational() = default;
    Rational(std::uint64_t n, std::uint64_t d = 1);

    bool is_integer() const { return den == 1; }
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    std::string str() const;  // "n" or "n/d"

    friend bool operator==(const Rational&, const Rational&) = default;
    friend Rational operator+(const Rational& a, const Rational& b);
    friend Rational operator*(const Rational& a, const Rational& b);
    friend Rational operator/(const Rational& a, const Rational& b);
    friend bool operator<(const Rational& a, const Rational& b);
};

// MACs of one attention layer: the two T^2-order products split into m sets.
Rational analytic_ssa(std::uint64_t frames, std::uint64_t dim, std::uint64_t interval);
// SSA plus the merge projection (m * (T/m) * D^2) and feed-forward (4 (T/m) D^2).
Rational analytic_skt(std::uint64_t frames, std::uint64_t dim, std::uint64_t interval);
// Full attention plus a strided convolution feed-forward with kernel k and stride s.
Rational analytic_stt(std::uint64_t frames, std::uint64_t dim, std::uint64_t kernel, std::uint64_t stride);
Rational analytic_vanilla(std::uint64_t frames, std::uint64_t dim);

struct CostReport {
    std::uint64_t frames = 0, dim = 0, interval = 1, kernel = 3, stride = 3;
    Rational ssa, skt, stt, vanilla;
    Rational ssa_over_vanilla, skt_over_stt;
    std::map<std::string, std::uint64_t> empirical;  // MACs per scope, one clip
    std::uint64_t empirical_total = 0;
    std::size_t params = 0;
};

// MACs per labeled scope for one instrumented forward pass on a single clip.
std::map<std::string, std::uint64_t> empirical_cost(const ModelConfig& config);

// Analytic terms at (T, D, m) of `config` plus the empirical per-scope counts.
CostReport cost_report(const ModelConfig& config, std::uint64_t kernel = 3, std::uint64_t stride = 3);
nlohmann::json to_json(const CostReport& report);

struct AttentionFile {
    std::string file;
    std::string stage;
    std::size_t layer = 0;
    std::string head;  // head index, or "mean" for the head-averaged map
    std::size_t set = 0;
    std::size_t rows = 0, cols = 0;
};

// Runs one clip (T x 2J normalized) through `model` and writes every attention matrix as
// CSV under `directory`, plus index.json. Temporal maps are also averaged over heads.
std::vector<AttentionFile> export_attention(const GSFormer& model, const Tensor& clip, const std::string& directory);

// Per-(stage, layer, set) head averages of temporal maps; spatial maps pass through.
std::vector<AttentionMap> head_average(const std::vector<AttentionMap>& maps);

void write_matrix_csv(const std::string& path, std::size_t rows, std::size_t cols, const std::vector<double>& values);
std::vector<double> read_matrix_csv(const std::string& path, std::size_t* rows = nullptr, std::size_t* cols = nullptr);

}  // namespace gsf
