#include "nslab/config.hpp"
#include "nslab/errors.hpp"
#include "nslab/experiment.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace nslab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("nslab_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    os << text;
}

std::string read_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string("env -u NSLAB_OUT \"") + NSLAB_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

// Small enough to run the whole pipeline in a few seconds.
const char* kTinyConfig = R"([data]
train_count = 24
val_count = 8
video_count = 2
resolution = 12
step = 1.0
channel_step = 0.25

[train]
realizations = 1
epochs = 2
batch_size = 8

[analysis]
mc_trials = 4
)";

} // namespace

TEST_SUITE("cli") {

TEST_CASE("config parsing with sections") {
    const auto cfg = parse_config("seed = 9\n# comment\n[train]\nepochs = 3\nsetups = softplus_avepool\n[data]\nstep=0.2\n");
    CHECK(cfg.seed == 9);
    CHECK(cfg.epochs == 3);
    CHECK(cfg.step == 0.2);
    REQUIRE(cfg.setups.size() == 1);
    CHECK(cfg.setups[0] == Setup::softplus_avepool);
    CHECK(cfg.batch_size == 64);
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse_config("[train]\nepoch = 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[train]\nepochs = -3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[data]\nstep = fast\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[data\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("novalue\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[data]\nresolution = 30\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("dataset = cifar\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[train]\nsetups = tanh\n"), ConfigError);
}

TEST_CASE("canonical rendering and hash") {
    ExperimentConfig a, b;
    CHECK(a.canonical() == b.canonical());
    b.seed = 2;
    CHECK(fnv1a64(a.canonical()) != fnv1a64(b.canonical()));
    CHECK(parse_config(a.canonical()).canonical() == a.canonical());
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);

    ExperimentConfig p;
    p.apply_paper_scale();
    CHECK(p.train_count == 10000);
    CHECK(p.video_count == 100);
    CHECK(p.realizations == 10);
}

TEST_CASE("csv validation") {
    const auto dir = scratch("csv");
    write_file(dir / "ok.csv", "a,b\n1,2\n3,4\n");
    CHECK(validate_csv(dir / "ok.csv") == 2);
    write_file(dir / "bad.csv", "a,b\n1,2\n3\n");
    CHECK_THROWS_AS(validate_csv(dir / "bad.csv"), ValidationError);
    CHECK_THROWS_AS(validate_csv(dir / "none.csv"), MissingInputError);
    fs::remove_all(dir);
}

TEST_CASE("command line exit codes") {
    const auto dir = scratch("codes");
    CHECK(run_cli("--version") == 0);
    CHECK(run_cli("") == 2);
    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("--config " + (dir / "missing.cfg").string() + " train") == 2);
    write_file(dir / "bad.cfg", "[train]\nepochz = 1\n");
    CHECK(run_cli("--config " + (dir / "bad.cfg").string() + " train") == 2);
    CHECK(run_cli("--jobs 0 train") == 2);
    // No generated data yet.
    CHECK(run_cli("--out " + (dir / "empty").string() + " train") == 3);
    CHECK(run_cli("--out " + (dir / "empty").string() + " report") == 3);
    fs::remove_all(dir);
}

TEST_CASE("end-to-end run is deterministic") {
    const auto dir = scratch("e2e");
    write_file(dir / "tiny.cfg", kTinyConfig);
    const std::string base = "--config " + (dir / "tiny.cfg").string() + " --seed 5 ";
    REQUIRE(run_cli(base + "--out " + (dir / "a").string() + " all") == 0);
    REQUIRE(run_cli(base + "--out " + (dir / "b").string() + " all") == 0);
    for (const char* f : {"data/train.nsis", "data/val.nsis", "checkpoints/relu_maxpool_r00.nsmn",
                          "reports/avenonsmooth.csv", "reports/r2_summary.csv", "reports/channels.params",
                          "reports/manifest.txt"}) {
        INFO(f);
        REQUIRE(fs::exists(dir / "a" / f));
        CHECK(read_file(dir / "a" / f) == read_file(dir / "b" / f));
    }

    // A tampered table fails report validation.
    std::ofstream(dir / "a" / "reports" / "pearson.csv", std::ios::app) << "1,2,3,4,5,6,7\n";
    CHECK(run_cli(base + "--out " + (dir / "a").string() + " report") == 3);

    // A different seed changes the data.
    REQUIRE(run_cli("--config " + (dir / "tiny.cfg").string() + " --seed 6 --out " + (dir / "c").string() +
                    " gen-data") == 0);
    CHECK(read_file(dir / "a" / "data/train.nsis") != read_file(dir / "c" / "data/train.nsis"));
    fs::remove_all(dir);
}

} // TEST_SUITE
