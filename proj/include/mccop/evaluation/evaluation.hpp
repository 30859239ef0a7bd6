#pragma once

#include "mccop/latentworld/dataset.hpp"
#include "mccop/optimizer/result.hpp"
#include "mccop/projector/projector.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mccop {

/// One campaign row: a method's result on one test item under one seed.
struct CampaignRecord {
    std::size_t sample_id = 0;  // dataset item id
    std::uint64_t seed = 0;
    double manifold_distance = 0.0;  // of the returned embedding (zero-jitter encoding for discrete methods)
    CounterfactualResult result;
};

struct CampaignMetrics {
    std::size_t total = 0;
    std::size_t successes = 0;
    std::size_t adversarial = 0;
    double success_rate = 0.0;
    std::optional<double> adversarial_rate;  // undefined when nothing reached tau
    std::optional<double> edit_mean;         // successful runs only
    std::optional<double> edit_std;          // population std over successful runs
    double mean_duration = 0.0;
};

/// Aggregates one list of results. Throws DataError when empty.
CampaignMetrics campaign_metrics(std::span<const CounterfactualResult> results);

/// Table-2-shaped row: per-seed rates averaged over seeds (sample std across
/// seeds), edit distance pooled over every successful run.
struct MethodSummary {
    std::string method;
    std::size_t seeds = 0;
    std::size_t samples = 0;
    double success_rate = 0.0;
    double success_rate_std = 0.0;
    std::optional<double> adversarial_rate;
    std::optional<double> adversarial_rate_std;
    std::optional<double> edit_mean;
    std::optional<double> edit_std;
};

/// Groups `records` of one method by seed (ascending) and summarizes.
MethodSummary summarize_method(const std::string& method, std::span<const CampaignRecord> records);

/// Kyte-Doolittle hydropathy of one residue. Throws DataError for unknown letters.
double kyte_doolittle(char residue);
double gravy(const ResidueSequence& seq);

struct SliceRow {
    std::string method;
    std::size_t sample_id = 0;
    std::uint64_t seed = 0;
    std::string sequence;
    double gravy_original = 0.0;
    double gravy_counterfactual = 0.0;
    double manifold_distance = 0.0;
};

/// Successful results with edit distance exactly d.
std::vector<SliceRow> slice_by_edit_distance(std::span<const CampaignRecord> records, std::size_t d);

struct TimingRow {
    std::string method;
    std::size_t runs = 0;
    double mean_total_s = 0.0;
    double gradient_frac = 0.0;
    double projection_frac = 0.0;
    double reencode_frac = 0.0;
    double other_frac = 0.0;
};

/// Per-method mean duration and phase shares; methods in first-seen order.
std::vector<TimingRow> timing_profile(std::span<const CampaignRecord> records);

struct Rediscovery {
    std::string method;
    std::size_t sample_id = 0;
    std::uint64_t seed = 0;
    std::string sequence;
    std::size_t dataset_id = 0;
    Split split = Split::train;
};

/// Successful counterfactuals whose decoded sequence occurs verbatim in the
/// dataset with `target_label`.
std::vector<Rediscovery> rediscovery_check(std::span<const CampaignRecord> records, const LabeledDataset& data,
                                           int target_label);

/// counts[method][(position, residue)] over successful runs' mutated positions.
using MutationCounts = std::map<std::string, std::map<std::pair<std::size_t, char>, std::size_t>>;
MutationCounts mutation_frequencies(std::span<const CampaignRecord> records);

// Report text. Column names are fixed:
//   campaign.csv  id,method,seed,success,adversarial,steps,edit_distance,final_confidence,duration_s,
//                 gradient_s,projection_s,reencode_s,other_s,manifold_distance,gravy_original,
//                 gravy_counterfactual,leakage,mutated_positions
//   summary.csv   method,seeds,samples,success_rate,success_rate_std,adversarial_rate,
//                 adversarial_rate_std,edit_distance,edit_distance_std
//   sequences.tsv id<TAB>method<TAB>seed<TAB>original<TAB>counterfactual
//   slices_d<k>.csv method,id,seed,sequence,gravy_original,gravy_counterfactual,manifold_distance
//   timing.csv    method,runs,mean_total_s,gradient_frac,projection_frac,reencode_frac,other_frac
//   mutfreq.csv   method,position,residue,count
// Undefined statistics are written as NA. summary.csv carries no timings so
// that it is reproducible byte for byte.
std::string campaign_csv(std::span<const CampaignRecord> records);
std::string summary_header();
std::string summary_metrics_fields(const MethodSummary& s);  // every column after `method`
std::string summary_row(const MethodSummary& s);
std::string summary_csv(std::span<const MethodSummary> rows);
std::string sequences_tsv(std::span<const CampaignRecord> records);
std::string slices_csv(std::span<const SliceRow> rows);
std::string timing_csv(std::span<const TimingRow> rows);
std::string mutfreq_csv(const MutationCounts& counts);

}  // namespace mccop
