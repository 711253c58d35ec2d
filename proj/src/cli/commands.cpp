#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include "gsformer/analysis.hpp"
#include "gsformer/cli.hpp"
#include "gsformer/config.hpp"
#include "gsformer/data.hpp"
#include "gsformer/model.hpp"
#include "gsformer/train.hpp"

namespace gsf {

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Usage:
            return 2;
        case ErrorKind::Data:
            return 3;
        case ErrorKind::Config:
        case ErrorKind::Dimension:
            return 4;
        case ErrorKind::Numeric:
            return 5;
    }
    return 1;
}

std::string format_error(ErrorKind kind, const std::string& message) {
    static const char* names[] = {"dimension", "config", "data", "numeric", "usage"};
    std::string line = message;
    std::replace(line.begin(), line.end(), '\n', ' ');
    return "error[E" + std::to_string(exit_code(kind)) + "] " + names[static_cast<int>(kind)] + ": " + line;
}

namespace {

struct Options {
    // shared
    std::string config_path, data_path, out_path, ckpt_path;
    bool print_config = false;
    // gen-data
    SynthOptions synth;
    // train / sweep
    std::optional<std::size_t> epochs;
    std::optional<std::uint64_t> seed;
    bool deterministic = false;
    // eval
    std::string completion;
    std::optional<std::size_t> roll_threshold;
    std::string split = "test";
    bool boundary_only = false;
    // flops
    std::optional<std::size_t> frames, dim, interval;
    std::size_t kernel = 3, stride = 3;
    // dump-attention
    std::size_t index = 0;
    std::optional<std::size_t> frame;
    // sweep
    std::string param;
    std::vector<double> values;
};

RunConfig load_config(const Options& o) {
    RunConfig rc = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
    if (o.epochs) rc.train.epochs = *o.epochs;
    if (o.seed) rc.train.seed = *o.seed;
    rc.model.validate();
    rc.train.validate();
    return rc;
}

PreparedData load_data(const std::string& path) { return PreparedData::from(load_dataset(path)); }

std::vector<std::size_t> pick_split(const Options& o, const TrainConfig& train, std::size_t count) {
    if (o.split == "all") {
        std::vector<std::size_t> all(count);
        for (std::size_t i = 0; i < count; ++i) all[i] = i;
        return all;
    }
    const auto split = split_dataset(count, train.train_fraction, train.seed);
    if (o.split == "test") return split.test;
    if (o.split == "train") return split.train;
    throw usage_error("--split must be test, train or all");
}

CompletionPolicy policy_of(const ModelConfig& m) { return {m.completion, m.roll_threshold}; }

void print_metrics(std::ostream& out, const EvalResult& r) {
    out << std::setprecision(6) << std::fixed;
    out << "MPJPE: " << r.mpjpe << " mm\n";
    out << "P-MPJPE: " << r.p_mpjpe << " mm" << (r.degenerate ? " (degenerate frames left unaligned)" : "") << "\n";
    out << "frames: " << r.frames << "\n";
    out.unsetf(std::ios::floatfield);
}

nlohmann::json metrics_json(const EvalResult& r) {
    return {{"mpjpe_mm", r.mpjpe}, {"p_mpjpe_mm", r.p_mpjpe}, {"frames", r.frames}, {"degenerate", r.degenerate}};
}

int cmd_gen_data(const Options& o, std::ostream& out) {
    const auto ds = synth_generate(o.synth).quantized();
    save_dataset(ds, o.out_path);
    const auto manifest = o.out_path + ".json";
    write_manifest(ds, o.out_path, manifest);
    out << "wrote " << ds.size() << " sequences (V=" << o.synth.frames << ", J=" << o.synth.joints << ") to "
        << o.out_path << " and " << manifest << "\n";
    return 0;
}

struct TrainOutcome {
    EvalResult test;
    std::vector<EpochRecord> history;
};

TrainOutcome train_and_eval(GSFormer& model, const PreparedData& data, const RunConfig& rc, std::ostream* log) {
    const auto split = split_dataset(data.size(), rc.train.train_fraction, rc.train.seed);
    TrainOptions opts;
    opts.policy = policy_of(rc.model);
    opts.eval_each_epoch = false;
    if (log) {
        opts.on_epoch = [log](const EpochRecord& r) {
            *log << "epoch " << r.epoch << " lr " << r.learning_rate << " loss " << r.loss << " (L_t " << r.loss_target
                 << ", L_f " << r.loss_full << ") " << std::setprecision(3) << r.seconds << "s\n"
                 << std::setprecision(6) << std::flush;
        };
    }
    TrainOutcome result;
    result.history = train(model, data, split, rc.train, opts);
    if (!split.test.empty()) result.test = evaluate(model, data, split.test, {opts.policy, false, 64});
    return result;
}

int cmd_train(const Options& o, std::ostream& out) {
    const auto rc = load_config(o);
    const auto data = load_data(o.data_path);
    std::filesystem::create_directories(o.out_path);
    const auto started = std::chrono::steady_clock::now();
    GSFormer model(rc.model, rc.train.seed);
    const auto result = train_and_eval(model, data, rc, &out);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    const auto ckpt = (std::filesystem::path(o.out_path) / "model.ckpt").string();
    save_checkpoint(model, ckpt);
    const auto split = split_dataset(data.size(), rc.train.train_fraction, rc.train.seed);
    nlohmann::json history = nlohmann::json::array();
    for (const auto& r : result.history) {
        history.push_back({{"epoch", r.epoch},
                           {"learning_rate", r.learning_rate},
                           {"loss", r.loss},
                           {"loss_target", r.loss_target},
                           {"loss_full", r.loss_full},
                           {"seconds", r.seconds}});
    }
    nlohmann::json manifest = {{"config", to_json(rc)},
                               {"seed", rc.train.seed},
                               {"dataset", o.data_path},
                               {"checkpoint", ckpt},
                               {"deterministic", o.deterministic},
                               {"history", history},
                               {"final", metrics_json(result.test)},
                               {"wall_time_s", wall}};
    if (!split.test.empty()) {
        manifest["baselines"] = {
            {"mean_pose", metrics_json(MeanPoseBaseline::fit(data, split.train).evaluate(data, split.test))},
            {"linear_lifter", metrics_json(LinearLifter::fit(data, split.train).evaluate(data, split.test))}};
    }
    std::ofstream mf(std::filesystem::path(o.out_path) / "manifest.json");
    if (!mf) throw data_error("cannot write manifest in '" + o.out_path + "'");
    mf << manifest.dump(2) << '\n';
    print_metrics(out, result.test);
    out << "checkpoint: " << ckpt << "\n";
    return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
    const auto model = load_checkpoint(o.ckpt_path);
    const auto data = load_data(o.data_path);
    if (data.joints != model.config().joints) {
        throw config_error("checkpoint was trained with J=" + std::to_string(model.config().joints) +
                           " but the dataset has J=" + std::to_string(data.joints));
    }
    RunConfig rc;
    if (!o.config_path.empty()) rc = load_run_config(o.config_path);
    if (o.seed) rc.train.seed = *o.seed;
    CompletionPolicy policy = policy_of(model.config());
    if (!o.completion.empty()) policy.mode = parse_completion(o.completion);
    if (o.roll_threshold) policy.threshold = *o.roll_threshold;
    const auto sequences = pick_split(o, rc.train, data.size());
    print_metrics(out, evaluate(model, data, sequences, {policy, o.boundary_only, 64}));
    return 0;
}

int cmd_flops(const Options& o, std::ostream& out) {
    RunConfig rc = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
    auto& m = rc.model;
    if (o.frames) {
        m.frames = *o.frames;
        if (o.config_path.empty()) {
            const auto preset = ModelConfig::preset(m.variant, m.frames);
            m.encoder_layers = preset.encoder_layers;
            m.decoder_layers = preset.decoder_layers;
            m.roll_threshold = default_roll_threshold(m.frames);
        }
    }
    if (o.dim) m.model_dim = *o.dim;
    if (o.interval) m.interval = *o.interval;
    out << to_json(cost_report(m, o.kernel, o.stride)).dump(2) << "\n";
    return 0;
}

int cmd_dump_attention(const Options& o, std::ostream& out) {
    const auto model = load_checkpoint(o.ckpt_path);
    const auto data = load_data(o.data_path);
    if (data.joints != model.config().joints) throw config_error("checkpoint and dataset disagree on J");
    if (o.index >= data.size()) {
        throw data_error("sequence index " + std::to_string(o.index) + " out of range (" +
                         std::to_string(data.size()) + " sequences)");
    }
    const auto target = o.frame.value_or(data.lengths[o.index] / 2);
    const auto batch = make_batch(data, {{o.index, target}}, model.config().frames, policy_of(model.config()));
    const auto files = export_attention(model, batch.inputs, o.out_path);
    out << "wrote " << files.size() << " attention maps to " << o.out_path << "\n";
    return 0;
}

int cmd_sweep(const Options& o, std::ostream& out) {
    const auto base = load_config(o);
    const auto data = load_data(o.data_path);
    if (o.values.empty()) throw usage_error("--values needs at least one value");
    std::ofstream csv(o.out_path);
    if (!csv) throw data_error("cannot write '" + o.out_path + "'");
    csv << "value,mpjpe_mm,macs,macs_empirical\n";
    for (double value : o.values) {
        RunConfig rc = base;
        auto& m = rc.model;
        if (o.param == "m") {
            if (value < 1 || value != std::floor(value)) throw usage_error("m values must be positive integers");
            m.interval = static_cast<std::size_t>(value);
            // m = 1 cannot shorten the sequence, so the decoder keeps its own factor then.
            if (m.interval >= 2) m.decoder_interval = m.interval;
            else if (m.decoder_interval == 0) m.decoder_interval = base.model.effective_decoder_interval();
        } else if (o.param == "R") {
            if (value < 0 || value != std::floor(value)) throw usage_error("R values must be non-negative integers");
            m.completion = CompletionMode::Roll;
            m.roll_threshold = static_cast<std::size_t>(value);
        } else if (o.param == "lambda") {
            m.lambda = value;
        } else {
            throw usage_error("--param must be m, R or lambda");
        }
        m.validate();
        GSFormer model(m, rc.train.seed);
        const auto result = train_and_eval(model, data, rc, nullptr);
        const auto macs = analytic_skt(m.frames, m.model_dim, m.interval);
        std::uint64_t empirical = 0;
        for (const auto& [scope, count] : empirical_cost(m)) empirical += count;
        csv << value << "," << std::setprecision(17) << result.test.mpjpe << "," << macs.value() << "," << empirical
            << "\n";
        out << o.param << "=" << value << " MPJPE " << std::setprecision(6) << result.test.mpjpe << " mm, SKT MACs "
            << macs.str() << "\n";
    }
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Skipped-attention 2-D to 3-D pose lifting: data, training, evaluation and cost analysis",
                 "gsformer"};
    app.require_subcommand(0, 1);
    Options o;
    app.add_flag("--print-config", o.print_config, "Print the full run configuration (defaults or --config) as JSON");
    app.add_option("--config", o.config_path, "Run configuration JSON used with --print-config");

    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic paired 2-D/3-D dataset");
    gen->add_option("--seed", o.synth.seed, "Random seed")->capture_default_str();
    gen->add_option("--count", o.synth.count, "Number of sequences")->capture_default_str();
    gen->add_option("--frames", o.synth.frames, "Frames per sequence (V)")->capture_default_str();
    gen->add_option("--joints", o.synth.joints, "Joints per pose (J)")->capture_default_str();
    gen->add_option("--noise", o.synth.noise, "Gaussian 2-D noise sigma in pixels")->capture_default_str();
    gen->add_option("--out", o.out_path, "Output dataset file; the manifest goes to <out>.json")->required();

    auto* tr = app.add_subcommand("train", "Train a model and write model.ckpt and manifest.json");
    tr->add_option("--config", o.config_path, "Run configuration JSON (defaults when omitted)");
    tr->add_option("--data", o.data_path, "Dataset file")->required();
    tr->add_option("--out", o.out_path, "Output directory")->required();
    tr->add_option("--epochs", o.epochs, "Override train.epochs");
    tr->add_option("--seed", o.seed, "Override train.seed");
    tr->add_flag("--deterministic", o.deterministic, "Sequential reductions only (bit-stable metrics)");

    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint; prints MPJPE and P-MPJPE");
    ev->add_option("--ckpt", o.ckpt_path, "Checkpoint file")->required();
    ev->add_option("--data", o.data_path, "Dataset file")->required();
    ev->add_option("--config", o.config_path, "Run configuration whose train split settings select the test set");
    ev->add_option("--seed", o.seed, "Split seed (train.seed)");
    ev->add_option("--split", o.split, "Sequences to evaluate: test, train or all")->capture_default_str();
    ev->add_option("--completion", o.completion, "Override completion: edge, expand or roll");
    ev->add_option("--R", o.roll_threshold, "Override rolling threshold R");
    ev->add_flag("--boundary-only", o.boundary_only, "Only targets whose window leaves the video");

    auto* fl = app.add_subcommand("flops", "Print the analytic and measured cost report as JSON");
    fl->add_option("--config", o.config_path, "Run configuration JSON");
    fl->add_option("--frames,-T", o.frames, "Override T");
    fl->add_option("--dim,-D", o.dim, "Override D");
    fl->add_option("--interval,-m", o.interval, "Override m");
    fl->add_option("--kernel,-k", o.kernel, "Strided baseline kernel k")->capture_default_str();
    fl->add_option("--stride,-s", o.stride, "Strided baseline stride s")->capture_default_str();

    auto* da = app.add_subcommand("dump-attention", "Export attention maps of one clip as CSV + index.json");
    da->add_option("--ckpt", o.ckpt_path, "Checkpoint file")->required();
    da->add_option("--data", o.data_path, "Dataset file")->required();
    da->add_option("--index", o.index, "Sequence index")->capture_default_str();
    da->add_option("--frame", o.frame, "Target frame (default: middle of the sequence)");
    da->add_option("--out", o.out_path, "Output directory")->required();

    auto* sw = app.add_subcommand("sweep", "Train and evaluate one model per value; writes a CSV");
    sw->add_option("--param", o.param, "m, R or lambda")->required()->check(CLI::IsMember({"m", "R", "lambda"}));
    sw->add_option("--values", o.values, "Values to sweep")->required();
    sw->add_option("--config", o.config_path, "Base run configuration JSON");
    sw->add_option("--data", o.data_path, "Dataset file")->required();
    sw->add_option("--out", o.out_path, "Output CSV")->required();
    sw->add_option("--epochs", o.epochs, "Override train.epochs");
    sw->add_option("--seed", o.seed, "Override train.seed");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << format_error(ErrorKind::Usage, e.what()) << "\n";
        return exit_code(ErrorKind::Usage);
    }

    try {
        if (o.print_config) {
            out << to_json(o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path)).dump(2) << "\n";
            return 0;
        }
        if (gen->parsed()) return cmd_gen_data(o, out);
        if (tr->parsed()) return cmd_train(o, out);
        if (ev->parsed()) return cmd_eval(o, out);
        if (fl->parsed()) return cmd_flops(o, out);
        if (da->parsed()) return cmd_dump_attention(o, out);
        if (sw->parsed()) return cmd_sweep(o, out);
        err << format_error(ErrorKind::Usage, "no command given; run with --help") << "\n";
        return exit_code(ErrorKind::Usage);
    } catch (const Error& e) {
        err << format_error(e.kind(), e.what()) << "\n";
        return exit_code(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        err << format_error(ErrorKind::Data, e.what()) << "\n";
        return exit_code(ErrorKind::Data);
    }
}

}  // namespace gsf
