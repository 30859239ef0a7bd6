#pragma once

#include "mccop/baselines/baselines.hpp"
#include "mccop/latentworld/dataset.hpp"
#include "mccop/optimizer/optimizer.hpp"
#include "mccop/predictor/predictor.hpp"
#include "mccop/projector/projector.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mccop {

inline const std::vector<std::string> kMethods{"mccop", "gd", "hill_climb", "ga"};

struct AblationConfig {
    std::vector<int> k_values{1, 3, 5, 0};  // 0 means every position
    bool projection_off = true;
    bool projection_on = true;
    std::size_t cell_budget = 160;
};

/// Everything one pipeline run needs. Defaults are the reference settings.
struct CampaignConfig {
    WorldConfig world = WorldConfig::default_world();
    std::size_t n = 1000;
    Binarization binarization = Binarization::otsu;
    std::uint64_t data_seed = 11;

    SmoothingConfig smoothing = SmoothingConfig::all();
    TrainHyperparams train;

    MccopConfig mccop;
    ProjectorConfig projector;
    GdConfig gd;
    HillClimbConfig hill_climb;
    GaConfig ga;

    std::vector<std::string> methods = kMethods;
    std::vector<std::uint64_t> seeds{0, 1, 2};
    std::size_t max_samples = 0;  // 0: every eligible test item
    int jobs = 1;
    std::string out = "runs/default";

    AblationConfig ablation;

    void validate() const;
};

/// Reads an INI file over the defaults. Unknown sections or keys are errors.
CampaignConfig load_config(const std::string& path);
CampaignConfig parse_config(const std::string& ini_text);

/// The effective configuration as INI text (round-trips through parse_config).
std::string config_to_ini(const CampaignConfig& cfg);

std::vector<std::string> parse_list(const std::string& s);

}  // namespace mccop
