#include "gsformer/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "gsformer/errors.hpp"
#include "gsformer/skipped_transformer.hpp"

namespace gsf {

using nlohmann::json;

std::size_t default_roll_threshold(std::size_t frames) {
    if (frames == 243) return 30;
    return static_cast<std::size_t>(std::lround(0.12 * static_cast<double>(frames)));
}

ModelConfig ModelConfig::preset(Variant variant, std::size_t frames) {
    ModelConfig c;
    c.variant = variant;
    c.frames = frames;
    c.encoder_layers = variant == Variant::S ? 3 : (variant == Variant::Base ? 4 : 8);
    // Smallest decoder depth that reduces T to one token with m = 3: 27 -> 3, 81 -> 4, 243 -> 5.
    c.decoder_layers = decoder_lengths(frames, 3, 0).size() - 1;
    while (decoder_lengths(frames, 3, c.decoder_layers).back() != 1) ++c.decoder_layers;
    c.roll_threshold = default_roll_threshold(frames);
    return c;
}

SpatialConfig ModelConfig::spatial() const {
    SpatialConfig s;
    s.joints = joints;
    s.channels = channels;
    s.model_dim = model_dim;
    s.activation = activation;
    s.mode = spatial_mode;
    s.grouping = grouping;
    return s;
}

void ModelConfig::validate() const {
    auto fail = [](const std::string& field, const std::string& msg) { throw config_error("model." + field + ": " + msg); };
    if (frames == 0 || frames % 2 == 0) fail("T", "window length must be odd, got " + std::to_string(frames));
    if (joints == 0) fail("J", "must be positive");
    if (channels == 0) fail("C", "must be positive");
    if (model_dim == 0) fail("D", "must be positive");
    if (heads == 0 || model_dim % heads != 0) {
        fail("heads", "D=" + std::to_string(model_dim) + " not divisible by h=" + std::to_string(heads));
    }
    if (interval == 0) fail("m", "must be >= 1");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail("lambda", "must be finite and >= 0");
    if (roll_threshold > (frames - 1) / 2) {
        fail("R", "must satisfy R <= (T-1)/2 = " + std::to_string((frames - 1) / 2));
    }
    try {
        grouping.validate(joints);
    } catch (const Error& e) {
        fail("grouping", e.what());
    }
    if (temporal_mode == TemporalMode::Skipped) {
        const auto chain = decoder_lengths(frames, effective_decoder_interval(), decoder_layers);
        if (chain.back() != 1) {
            fail("L2", "decoder reaches length " + std::to_string(chain.back()) + " (T=" + std::to_string(frames) +
                           ", m=" + std::to_string(effective_decoder_interval()) + ", L2=" +
                           std::to_string(decoder_layers) + "); expected 1");
        }
    } else if (temporal_mode == TemporalMode::VtStrided) {
        const auto chain = decoder_lengths(frames, 3, decoder_layers);
        if (chain.back() != 1) {
            fail("L2", "strided layers reach length " + std::to_string(chain.back()) + "; expected 1");
        }
    }
}

void TrainConfig::validate() const {
    auto fail = [](const std::string& field, const std::string& msg) { throw config_error("train." + field + ": " + msg); };
    if (epochs == 0) fail("epochs", "must be positive");
    if (batch_size == 0) fail("batch_size", "must be positive");
    if (!(learning_rate > 0.0)) fail("learning_rate", "must be positive");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0)) fail("lr_decay", "must be in (0, 1]");
    if (clips_per_sequence == 0) fail("clips_per_sequence", "must be positive");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) fail("train_fraction", "must be in (0, 1)");
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::S: return "S";
        case Variant::Base: return "base";
        case Variant::L: return "L";
    }
    return "?";
}

std::string to_string(TemporalMode m) {
    switch (m) {
        case TemporalMode::Skipped: return "skipped";
        case TemporalMode::VtConv: return "vt_conv";
        case TemporalMode::VtStrided: return "vt_strided";
    }
    return "?";
}

std::string to_string(SpatialMode m) {
    switch (m) {
        case SpatialMode::AdaptiveGraph: return "adaptive_graph";
        case SpatialMode::Mlp: return "mlp";
        case SpatialMode::JointwiseGcn: return "jointwise_gcn";
    }
    return "?";
}

std::string to_string(CompletionMode m) {
    switch (m) {
        case CompletionMode::Edge: return "edge";
        case CompletionMode::Expand: return "expand";
        case CompletionMode::Roll: return "roll";
    }
    return "?";
}

std::string to_string(Activation a) { return a == Activation::Gelu ? "gelu" : "relu"; }

namespace {

template <typename Enum>
Enum parse_enum(const std::string& value, std::initializer_list<Enum> options, const std::string& path) {
    std::string allowed;
    for (auto option : options) {
        if (to_string(option) == value) return option;
        allowed += (allowed.empty() ? "" : "|") + to_string(option);
    }
    throw config_error(path + ": unknown value '" + value + "' (expected " + allowed + ")");
}

// Typed field access with path-qualified errors.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw config_error(path_ + ": expected an object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        const auto& v = j_.at(key);
        const auto field = path_ + "." + key;
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw config_error(field + ": expected a boolean");
            out = v.get<bool>();
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer() || v.get<long long>() < 0) {
                throw config_error(field + ": expected a non-negative integer");
            }
            out = static_cast<T>(v.get<unsigned long long>());
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw config_error(field + ": expected a number");
            out = v.get<double>();
        } else {
            if (!v.is_string()) throw config_error(field + ": expected a string");
            out = v.get<std::string>();
        }
    }

    bool has(const char* key) const { return j_.contains(key); }
    const json& raw(const char* key) {
        seen_.insert(key);
        return j_.at(key);
    }
    std::string field(const char* key) const { return path_ + "." + key; }

    void reject_unknown() const {
        for (const auto& item : j_.items()) {
            if (!seen_.count(item.key())) throw config_error(path_ + "." + item.key() + ": unknown field");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace

json to_json(const ModelConfig& c) {
    return json{{"T", c.frames},
                {"J", c.joints},
                {"m", c.interval},
                {"decoder_m", c.decoder_interval},
                {"C", c.channels},
                {"D", c.model_dim},
                {"heads", c.heads},
                {"L1", c.encoder_layers},
                {"L2", c.decoder_layers},
                {"lambda", c.lambda},
                {"variant", to_string(c.variant)},
                {"spatial_mode", to_string(c.spatial_mode)},
                {"temporal_mode", to_string(c.temporal_mode)},
                {"activation", to_string(c.activation)},
                {"temporal_pos_embedding", c.temporal_pos_embedding},
                {"R", c.roll_threshold},
                {"completion", to_string(c.completion)},
                {"grouping", c.grouping.parts}};
}

json to_json(const TrainConfig& c) {
    return json{{"epochs", c.epochs},
                {"batch_size", c.batch_size},
                {"learning_rate", c.learning_rate},
                {"lr_decay", c.lr_decay},
                {"seed", c.seed},
                {"clips_per_sequence", c.clips_per_sequence},
                {"train_fraction", c.train_fraction}};
}

json to_json(const RunConfig& c) { return json{{"model", to_json(c.model)}, {"train", to_json(c.train)}}; }

ModelConfig model_config_from_json(const json& j, const std::string& path) {
    Reader r(j, path);
    ModelConfig c;
    r.get("T", c.frames);
    c.roll_threshold = default_roll_threshold(c.frames);
    r.get("J", c.joints);
    r.get("m", c.interval);
    r.get("decoder_m", c.decoder_interval);
    r.get("C", c.channels);
    r.get("D", c.model_dim);
    r.get("heads", c.heads);
    r.get("L1", c.encoder_layers);
    r.get("L2", c.decoder_layers);
    r.get("lambda", c.lambda);
    r.get("temporal_pos_embedding", c.temporal_pos_embedding);
    r.get("R", c.roll_threshold);
    std::string text;
    if (r.has("variant")) {
        r.get("variant", text);
        c.variant = parse_enum(text, {Variant::S, Variant::Base, Variant::L}, r.field("variant"));
    }
    if (r.has("spatial_mode")) {
        r.get("spatial_mode", text);
        c.spatial_mode = parse_enum(text, {SpatialMode::AdaptiveGraph, SpatialMode::Mlp, SpatialMode::JointwiseGcn},
                                    r.field("spatial_mode"));
    }
    if (r.has("temporal_mode")) {
        r.get("temporal_mode", text);
        c.temporal_mode = parse_enum(text, {TemporalMode::Skipped, TemporalMode::VtConv, TemporalMode::VtStrided},
                                     r.field("temporal_mode"));
    }
    if (r.has("activation")) {
        r.get("activation", text);
        c.activation = parse_enum(text, {Activation::Gelu, Activation::Relu}, r.field("activation"));
    }
    if (r.has("completion")) {
        r.get("completion", text);
        c.completion = parse_enum(text, {CompletionMode::Edge, CompletionMode::Expand, CompletionMode::Roll},
                                  r.field("completion"));
    }
    if (r.has("grouping")) {
        const auto& g = r.raw("grouping");
        try {
            c.grouping.parts = g.get<std::vector<std::vector<std::size_t>>>();
        } catch (const json::exception&) {
            throw config_error(r.field("grouping") + ": expected a list of joint-index lists");
        }
    }
    r.reject_unknown();
    c.validate();
    return c;
}

TrainConfig train_config_from_json(const json& j, const std::string& path) {
    Reader r(j, path);
    TrainConfig c;
    r.get("epochs", c.epochs);
    r.get("batch_size", c.batch_size);
    r.get("learning_rate", c.learning_rate);
    r.get("lr_decay", c.lr_decay);
    r.get("seed", c.seed);
    r.get("clips_per_sequence", c.clips_per_sequence);
    r.get("train_fraction", c.train_fraction);
    r.reject_unknown();
    c.validate();
    return c;
}

RunConfig run_config_from_json(const json& j) {
    if (!j.is_object()) throw config_error("config: expected a JSON object");
    for (const auto& item : j.items()) {
        if (item.key() != "model" && item.key() != "train") throw config_error(item.key() + ": unknown field");
    }
    RunConfig c;
    if (j.contains("model")) c.model = model_config_from_json(j.at("model"), "model");
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"), "train");
    return c;
}

RunConfig load_run_config(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw config_error("cannot open config file '" + file + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw config_error("config file '" + file + "' is not valid JSON: " + e.what());
    }
    return run_config_from_json(j);
}

CompletionMode parse_completion(const std::string& s) {
    return parse_enum(s, {CompletionMode::Edge, CompletionMode::Expand, CompletionMode::Roll}, "completion");
}

}  // namespace gsf
