#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gsformer/cli.hpp"
#include "gsformer/config.hpp"
#include "gsformer/data.hpp"

using namespace gsf;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = 0;
    std::string out, err;
};

Result run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    Result r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

// Runs the installed binary; returns its exit status and stderr.
Result run_binary(const std::string& args) {
    const auto err_file = fs::temp_directory_path() / ("gsf_cli_err_" + std::to_string(::getpid()));
    const std::string cmd = std::string(GSF_CLI_PATH) + " " + args + " > /dev/null 2> " + err_file.string();
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(err_file);
    r.err.assign(std::istreambuf_iterator<char>(in), {});
    fs::remove(err_file);
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

class CliWorkspace : public ::testing::Test {
protected:
    fs::path dir = fs::temp_directory_path() / ("gsf_cli_" + std::to_string(::getpid()));

    void SetUp() override { fs::create_directories(dir); }
    void TearDown() override { fs::remove_all(dir); }

    std::string path(const std::string& name) const { return (dir / name).string(); }

    std::string small_config() const {
        RunConfig rc;
        rc.model.model_dim = 16;
        rc.model.heads = 2;
        rc.model.channels = 8;
        rc.train.epochs = 1;
        rc.train.batch_size = 16;
        rc.train.clips_per_sequence = 2;
        const auto p = path("config.json");
        std::ofstream(p) << to_json(rc).dump(2);
        return p;
    }

    std::string small_data(const std::string& name = "data.gsp") const {
        const auto p = path(name);
        EXPECT_EQ(run({"gen-data", "--seed", "3", "--count", "10", "--frames", "30", "--out", p}).code, 0);
        return p;
    }
};

}  // namespace

TEST(ExitCodes, Mapping) {
    EXPECT_EQ(exit_code(ErrorKind::Usage), 2);
    EXPECT_EQ(exit_code(ErrorKind::Data), 3);
    EXPECT_EQ(exit_code(ErrorKind::Config), 4);
    EXPECT_EQ(exit_code(ErrorKind::Dimension), 4);
    EXPECT_EQ(exit_code(ErrorKind::Numeric), 5);
    EXPECT_EQ(format_error(ErrorKind::Data, "bad"), "error[E3] data: bad");
}

TEST(Binary, ErrorsAreSingleLineWithCodePrefix) {
    auto r = run_binary("--no-such-flag");
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(r.err.rfind("error[E2] ", 0), 0u) << r.err;
    EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);

    r = run_binary("eval --ckpt /nonexistent.ckpt --data /nonexistent.gsp");
    EXPECT_EQ(r.code, 3);
    EXPECT_EQ(r.err.rfind("error[E3] ", 0), 0u) << r.err;

    EXPECT_EQ(run_binary("").code, 2);
    EXPECT_EQ(run_binary("--help").code, 0);
}

TEST(Flops, ReportsReferenceCosts) {
    const auto r = run({"flops", "-T", "243", "-D", "256", "-m", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_NE(j.dump().find("47236608"), std::string::npos);
    EXPECT_NE(j.dump().find("10077696"), std::string::npos);
    EXPECT_NE(j.dump().find("93934080"), std::string::npos);
}

TEST(PrintConfig, DefaultsRoundTrip) {
    const auto r = run({"--print-config"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto parsed = run_config_from_json(nlohmann::json::parse(r.out));
    EXPECT_EQ(parsed, RunConfig{});
    EXPECT_EQ(to_json(parsed).dump(), nlohmann::json::parse(r.out).dump());
}

TEST(GenData, DocumentedDefaults) {
    const SynthOptions o;
    EXPECT_EQ(o.count, 2000u);
    EXPECT_EQ(o.frames, 100u);
    EXPECT_EQ(o.joints, 17u);
}

TEST_F(CliWorkspace, GenDataIsDeterministic) {
    const auto a = small_data("a.gsp");
    const auto b = small_data("b.gsp");
    EXPECT_EQ(slurp(a), slurp(b));
    EXPECT_TRUE(fs::exists(a + ".json"));
    const auto d = load_dataset(a);
    EXPECT_EQ(d.size(), 10u);
    EXPECT_EQ(d.inputs[0].frames, 30u);
}

TEST_F(CliWorkspace, InvalidConfigNamesField) {
    const auto cfg = path("bad.json");
    std::ofstream(cfg) << R"({"model": {"heads": 7}})";
    const auto data = small_data();
    const auto r = run({"train", "--config", cfg, "--data", data, "--out", path("run")});
    EXPECT_EQ(r.code, 4);
    EXPECT_NE(r.err.find("model.heads"), std::string::npos) << r.err;
}

TEST_F(CliWorkspace, TrainEvalDumpAndMismatch) {
    const auto cfg = small_config();
    const auto data = small_data();
    auto r = run({"train", "--config", cfg, "--data", data, "--out", path("run"), "--deterministic"});
    ASSERT_EQ(r.code, 0) << r.err;
    ASSERT_TRUE(fs::exists(path("run/model.ckpt")));
    const auto manifest = nlohmann::json::parse(slurp(path("run/manifest.json")));
    for (const char* key : {"config", "seed", "dataset", "history", "final", "wall_time_s"}) {
        EXPECT_TRUE(manifest.contains(key)) << key;
    }
    EXPECT_EQ(manifest["history"].size(), 1u);

    r = run({"eval", "--ckpt", path("run/model.ckpt"), "--data", data, "--config", cfg});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("MPJPE: "), std::string::npos);
    EXPECT_NE(r.out.find("P-MPJPE: "), std::string::npos);
    const double reported = manifest["final"]["mpjpe_mm"].get<double>();
    EXPECT_NE(r.out.find(std::to_string(reported).substr(0, 6)), std::string::npos) << r.out << reported;

    r = run({"dump-attention", "--ckpt", path("run/model.ckpt"), "--data", data, "--out", path("maps")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(path("maps/index.json")));

    // Same-shaped dataset with 5 joints.
    Dataset five;
    PoseSequence2D in(30, 5);
    PoseSequence3D gt(30, 5);
    five.inputs.push_back(in);
    five.targets.push_back(gt);
    five.roots.push_back(std::vector<double>(90, 0.0));
    save_dataset(five, path("five.gsp"));
    r = run({"eval", "--ckpt", path("run/model.ckpt"), "--data", path("five.gsp"), "--split", "all"});
    EXPECT_EQ(r.code, 4);
    EXPECT_NE(r.err.find("J"), std::string::npos) << r.err;
}

TEST_F(CliWorkspace, RetrainingReproducesMetrics) {
    const auto cfg = small_config();
    const auto data = small_data();
    ASSERT_EQ(run({"train", "--config", cfg, "--data", data, "--out", path("a"), "--deterministic"}).code, 0);
    ASSERT_EQ(run({"train", "--config", cfg, "--data", data, "--out", path("b"), "--deterministic"}).code, 0);
    const auto a = nlohmann::json::parse(slurp(path("a/manifest.json")));
    const auto b = nlohmann::json::parse(slurp(path("b/manifest.json")));
    EXPECT_EQ(a["final"].dump(), b["final"].dump());
    EXPECT_EQ(slurp(path("a/model.ckpt")), slurp(path("b/model.ckpt")));
}

TEST_F(CliWorkspace, SweepOverInterval) {
    const auto cfg = small_config();
    const auto data = small_data();
    const auto r = run({"sweep", "--param", "m", "--values", "1", "3", "5", "7", "9", "--config", cfg, "--data", data,
                        "--out", path("sweep.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream csv(slurp(path("sweep.csv")));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "value,mpjpe_mm,macs,macs_empirical");
    std::vector<double> macs;
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        ASSERT_EQ(cells.size(), 4u) << line;
        macs.push_back(std::stod(cells[2]));
    }
    ASSERT_EQ(macs.size(), 5u);
    for (std::size_t i = 1; i < macs.size(); ++i) EXPECT_LT(macs[i], macs[i - 1]);
}
