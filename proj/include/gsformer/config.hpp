#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "gsformer/spatial_graph.hpp"

namespace gsf {

enum class Variant { S, Base, L };
enum class TemporalMode { Skipped, VtConv, VtStrided };
enum class CompletionMode { Edge, Expand, Roll };

// Default rolling threshold: 30 at T=243, otherwise round(0.12 * T).
std::size_t default_roll_threshold(std::size_t frames);

struct ModelConfig {
    std::size_t frames = 27;          // T, odd
    std::size_t joints = 17;          // J
    std::size_t interval = 3;         // m, encoder skip interval
    std::size_t decoder_interval = 0; // decoder reduction factor; 0 = same as m
    std::size_t channels = 64;        // C
    std::size_t model_dim = 256;      // D
    std::size_t heads = 8;            // h
    std::size_t encoder_layers = 3;   // L1
    std::size_t decoder_layers = 3;   // L2
    double lambda = 1.0;
    Variant variant = Variant::S;
    SpatialMode spatial_mode = SpatialMode::AdaptiveGraph;
    TemporalMode temporal_mode = TemporalMode::Skipped;
    Activation activation = Activation::Gelu;
    bool temporal_pos_embedding = true;
    std::size_t roll_threshold = default_roll_threshold(27);  // R
    CompletionMode completion = CompletionMode::Edge;
    PartGrouping grouping = PartGrouping::h36m17();

    // Layer presets: S (3,5), base (4,5), L (8,5) at T=243; (3,4) at T=81; (3,3) at T=27.
    static ModelConfig preset(Variant variant, std::size_t frames);

    std::size_t effective_decoder_interval() const { return decoder_interval == 0 ? interval : decoder_interval; }
    SpatialConfig spatial() const;
    // Throws a config error naming the offending field.
    void validate() const;

    bool operator==(const ModelConfig&) const = default;
};

struct TrainConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    double lr_decay = 0.95;  // per epoch
    std::uint64_t seed = 1;
    std::size_t clips_per_sequence = 4;  // random targets drawn per training sequence each epoch
    double train_fraction = 0.9;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

struct RunConfig {
    ModelConfig model;
    TrainConfig train;

    bool operator==(const RunConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& config);
nlohmann::json to_json(const TrainConfig& config);
nlohmann::json to_json(const RunConfig& config);

// Missing fields take defaults; unknown fields and type errors raise a config error with the
// field path (e.g. "model.heads").
ModelConfig model_config_from_json(const nlohmann::json& j, const std::string& path = "model");
TrainConfig train_config_from_json(const nlohmann::json& j, const std::string& path = "train");
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& file);

std::string to_string(Variant v);
std::string to_string(TemporalMode m);
std::string to_string(SpatialMode m);
std::string to_string(CompletionMode m);
std::string to_string(Activation a);
CompletionMode parse_completion(const std::string& s);

}  // namespace gsf
