#pragma once

#include "mccop/cli/config.hpp"
#include "mccop/evaluation/evaluation.hpp"

#include <string>
#include <vector>

namespace mccop {

/// Test items of the source class the predictor classifies correctly, by id.
std::vector<const DatasetItem*> eligible_samples(const LabeledDataset& data, const TrainedPredictor& p, int target,
                                                 std::size_t max_samples = 0);

/// Runs `method` over `samples` with per-sample seeded substreams. Record
/// order follows `samples` whatever the worker count.
std::vector<CampaignRecord> run_method(const std::string& method, const std::vector<const DatasetItem*>& samples,
                                       const TrainedPredictor& p, const Codebook& codebook,
                                       const CampaignConfig& cfg, std::uint64_t seed, int jobs);

/// Which predictor a method runs against: gd uses the unsmoothed model,
/// everything else the smoothed one.
bool uses_smoothed_predictor(const std::string& method);

struct PredictorPair {
    TrainedPredictor unsmoothed;
    TrainedPredictor smoothed;
};

/// Paired training for one seed: SmoothingConfig::none() and cfg.smoothing.
PredictorPair train_pair(const LabeledDataset& data, const CampaignConfig& cfg, std::uint64_t seed);

std::string model_prefix(const std::string& out, std::uint64_t seed, bool smoothed);

struct Table1Row {
    std::string label;  // seed number, "mean" or "std"
    double auroc_before = 0.0;
    double auroc_after = 0.0;
    double grad_norm_before = 0.0;
    double grad_norm_after = 0.0;
};
std::vector<Table1Row> table1_rows(const std::vector<std::uint64_t>& seeds, const std::vector<PredictorPair>& pairs);
std::string table1_csv(const std::vector<Table1Row>& rows);

/// Full campaign over every configured method and seed given trained pairs.
struct CampaignOutput {
    std::vector<CampaignRecord> records;
    std::vector<MethodSummary> summaries;
};
CampaignOutput run_campaign(const LabeledDataset& data, const Codebook& codebook, const CampaignConfig& cfg,
                            const std::vector<PredictorPair>& pairs);

/// Writes campaign.csv, summary.csv, sequences.tsv, slices_d<k>.csv,
/// timing.csv, mutfreq.csv and rediscovery.csv under `out`.
void write_reports(const std::string& out, const CampaignOutput& campaign, const LabeledDataset& data, int target);

struct AblationCell {
    bool spectral = false;
    bool jacobian = false;
    bool fgsm = false;
    bool softplus = false;
    bool projection = false;
    int k = 0;  // 0: every position

    bool all_off() const { return !spectral && !jacobian && !fgsm && !softplus && !projection && k == 0; }
    std::string label() const;
};

struct AblationRow {
    AblationCell cell;
    MethodSummary summary;
};

std::vector<AblationCell> ablation_grid(const CampaignConfig& cfg);

/// Trains one predictor per (smoothing subset, seed) and runs each cell. The
/// all-off cell runs the gradient-descent baseline. Throws ConfigError when
/// the grid exceeds the cell budget.
std::vector<AblationRow> run_ablation(const LabeledDataset& data, const Codebook& codebook, const CampaignConfig& cfg,
                                      const std::vector<AblationCell>& cells);
std::string ablation_csv(const std::vector<AblationRow>& rows);

/// Re-reads campaign.csv + sequences.tsv.
std::vector<CampaignRecord> read_campaign(const std::string& out);

}  // namespace mccop
