#include "test_support.hpp"

#include "mccop/cli/pipeline.hpp"
#include "mccop/textio.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace mccop;
using namespace mccop::testing;
namespace fs = std::filesystem;

namespace {

// Small enough for the whole gen-data / train / run chain to finish in seconds.
const char* kToyIni = R"([world]
length = 4
dim = 8
min_separation = 4
jitter_sigma = 0.4
motif = 1:W:2,3:F:0.5
pairs = none
seed = 3

[data]
n = 400

[train]
hidden = 32,16
max_epochs = 30
batch_size = 32

[campaign]
seeds = 0
max_samples = 6
)";

int run_cli(const std::string& args) {
    const std::string cmd = std::string(MCCOP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("mccop_test_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("config round trip") {
    const CampaignConfig d;
    const auto text = config_to_ini(d);
    CHECK(config_to_ini(parse_config(text)) == text);
    CHECK(config_to_ini(parse_config("")) == text);

    auto c = parse_config(kToyIni);
    CHECK(c.world.length == 4);
    CHECK(c.world.motif.size() == 2);
    CHECK(c.world.pairs.empty());
    CHECK(c.train.hidden == std::vector<Index>{32, 16});
    CHECK(c.seeds == std::vector<std::uint64_t>{0});
    CHECK(c.mccop.k == d.mccop.k);  // untouched sections keep their defaults
    CHECK(config_to_ini(parse_config(config_to_ini(c))) == config_to_ini(c));

    c.mccop.fixed_mask = std::vector<bool>{true, false, false, true};
    c.ablation.k_values = {2, 0};
    const auto again = parse_config(config_to_ini(c));
    REQUIRE(again.mccop.fixed_mask);
    CHECK(*again.mccop.fixed_mask == *c.mccop.fixed_mask);
    CHECK(again.ablation.k_values == std::vector<int>{2, 0});
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse_config("[world]\nbogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[nowhere]\nk = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[mccop]\nk = five\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[mccop]\ntau = 0.3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[campaign]\nmethods = mccop,annealing\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/mccop.ini"), ConfigError);
    CHECK(parse_list(" a, b ,c ") == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("predictor routing and ablation grid") {
    CHECK(!uses_smoothed_predictor("gd"));
    CHECK(uses_smoothed_predictor("mccop"));
    CHECK(uses_smoothed_predictor("hill_climb"));
    CHECK(uses_smoothed_predictor("ga"));

    CampaignConfig c;
    const auto grid = ablation_grid(c);
    CHECK(grid.size() == 16 * 2 * 4);
    CHECK(std::count_if(grid.begin(), grid.end(), [](const auto& x) { return x.all_off(); }) == 1);
    CHECK(AblationCell{true, false, true, true, false, 3}.label() == "sn+fgsm+softplus");
    CHECK(AblationCell{}.label() == "none");

    c.ablation.cell_budget = 10;
    const auto w = toy_world();
    const auto d = make_dataset(w, world_codebook(w), 100, Binarization::otsu, 1);
    CHECK_THROWS_AS(run_ablation(d, world_codebook(w), c, grid), ConfigError);
}

TEST_CASE("table1 rows and csv") {
    std::vector<PredictorPair> pairs(2);
    const double vals[2][4] = {{0.9, 0.92, 3.0, 1.0}, {0.8, 0.86, 5.0, 2.0}};
    for (int s = 0; s < 2; ++s) {
        pairs[s].unsmoothed.report.test_auroc = vals[s][0];
        pairs[s].smoothed.report.test_auroc = vals[s][1];
        pairs[s].unsmoothed.report.avg_grad_norm = vals[s][2];
        pairs[s].smoothed.report.avg_grad_norm = vals[s][3];
    }
    const auto rows = table1_rows({4, 9}, pairs);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].label == "4");
    CHECK(rows[1].label == "9");
    CHECK(rows[2].label == "mean");
    CHECK(rows[2].auroc_before == doctest::Approx(0.85));
    CHECK(rows[2].grad_norm_after == doctest::Approx(1.5));
    CHECK(rows[3].label == "std");
    CHECK(rows[3].grad_norm_before == doctest::Approx(std::sqrt(2.0)));  // sample std of {3, 5}
    const auto csv = table1_csv(rows);
    CHECK(csv.rfind("seed,auroc_before,auroc_after,grad_norm_before,grad_norm_after\n"
                    "4,0.900000,0.920000,3.000000,1.000000\n",
                    0) == 0);
}

TEST_CASE("cli exit codes") {
    const auto dir = scratch("codes");
    write_text((dir / "bad.ini").string(), "[world]\nbogus = 1\n");
    CHECK(run_cli("gen-data --config " + (dir / "bad.ini").string() + " --out " + (dir / "x").string()) == 2);
    CHECK(run_cli("train --out " + (dir / "empty").string()) == 3);
    CHECK(run_cli("gen-data --out " + (dir / "y").string() + " --methods nothing") == 2);
    CHECK(run_cli("--no-such-flag") == 2);
    fs::remove_all(dir);
}

TEST_CASE("pipeline through the cli is deterministic across worker counts") {
    const auto dir = scratch("pipeline");
    const auto ini = (dir / "toy.ini").string();
    write_text(ini, kToyIni);
    const auto out = (dir / "run").string();
    REQUIRE(run_cli("gen-data --config " + ini + " --out " + out) == 0);
    REQUIRE(run_cli("train --config " + ini + " --out " + out) == 0);
    CHECK(fs::exists(out + "/table1.csv"));
    CHECK(fs::exists(out + "/models/seed0_smoothed.json"));

    REQUIRE(run_cli("run --config " + ini + " --out " + out + " --jobs 1") == 0);
    const auto first = read_text(out + "/summary.csv");
    const auto seqs = read_text(out + "/sequences.tsv");
    REQUIRE(run_cli("run --config " + ini + " --out " + out + " --jobs 3") == 0);
    CHECK(read_text(out + "/summary.csv") == first);
    CHECK(read_text(out + "/sequences.tsv") == seqs);

    const auto lines = read_lines(out + "/summary.csv");
    REQUIRE(lines.size() == 5);
    CHECK(lines[0] == summary_header());
    for (std::size_t i = 1; i < lines.size(); ++i) CHECK(split_fields(lines[i])[0] == kMethods[i - 1]);

    for (const char* f : {"campaign.csv", "timing.csv", "mutfreq.csv", "rediscovery.csv", "config.ini"})
        CHECK(fs::exists(out + "/" + f));

    // report rebuilds the same summary from campaign.csv alone
    fs::remove(out + "/summary.csv");
    REQUIRE(run_cli("report --config " + ini + " --out " + out) == 0);
    CHECK(read_text(out + "/summary.csv") == first);

    const auto records = read_campaign(out);
    CHECK(records.size() == static_cast<std::size_t>(std::count(seqs.begin(), seqs.end(), '\n')) - 1);
    fs::remove_all(dir);
}
