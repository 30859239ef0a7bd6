#include "mccop/cli/pipeline.hpp"

#include "mccop/textio.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace mccop {

std::vector<const DatasetItem*> eligible_samples(const LabeledDataset& data, const TrainedPredictor& p, int target,
                                                 std::size_t max_samples) {
    const int source = target > 0 ? 0 : 1;
    std::vector<const DatasetItem*> candidates;
    for (const auto* it : data.split(Split::test))
        if (it->label == source) candidates.push_back(it);
    std::vector<Embedding> zs;
    for (const auto* it : candidates) zs.push_back(it->embedding);
    const auto f = predict_logits(p, zs);
    std::vector<const DatasetItem*> out;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const bool predicted_source = source == 0 ? f[i] < 0.0 : f[i] > 0.0;
        if (predicted_source) out.push_back(candidates[i]);
        if (max_samples > 0 && out.size() == max_samples) break;
    }
    return out;
}

bool uses_smoothed_predictor(const std::string& method) { return method != "gd"; }

namespace {

CampaignRecord run_one(const std::string& method, const DatasetItem& item, const TrainedPredictor& p,
                       const Codebook& codebook, const CampaignConfig& cfg, std::uint64_t seed) {
    CampaignRecord rec;
    rec.sample_id = item.id;
    rec.seed = seed;
    const std::uint64_t sub = substream_seed(seed, {tag(method.c_str()), item.id});
    if (method == "mccop") {
        rec.result = optimize(item.embedding, p, codebook, cfg.projector, cfg.mccop, sub);
    } else if (method == "gd") {
        rec.result = gd_counterfactual(item.embedding, p, codebook, cfg.gd);
    } else if (method == "hill_climb") {
        Rng rng(sub);
        rec.result = hill_climb(decode(item.embedding, codebook), p, codebook, cfg.hill_climb, rng);
    } else if (method == "ga") {
        Rng rng(sub);
        rec.result = genetic_algorithm(decode(item.embedding, codebook), p, codebook, cfg.ga, rng);
    } else {
        throw ConfigError("unknown method '" + method + "'");
    }
    rec.result.method = method;
    rec.manifold_distance = rec.result.final_embedding.size() > 0
                                ? manifold_distance(rec.result.final_embedding, codebook)
                                : manifold_distance(encode_exact(rec.result.decoded, codebook), codebook);
    return rec;
}

// Runs fn(i) for i in [0, n) on `jobs` threads; rethrows the first failure.
template <typename Fn> void parallel_for(std::size_t n, int jobs, Fn fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    const auto count = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    for (std::size_t w = 0; w < count; ++w)
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = n;
                }
            }
        });
    for (auto& t : workers) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace

std::vector<CampaignRecord> run_method(const std::string& method, const std::vector<const DatasetItem*>& samples,
                                       const TrainedPredictor& p, const Codebook& codebook,
                                       const CampaignConfig& cfg, std::uint64_t seed, int jobs) {
    std::vector<CampaignRecord> out(samples.size());
    parallel_for(samples.size(), jobs, [&](std::size_t i) { out[i] = run_one(method, *samples[i], p, codebook, cfg, seed); });
    return out;
}

PredictorPair train_pair(const LabeledDataset& data, const CampaignConfig& cfg, std::uint64_t seed) {
    PredictorPair pair;
    pair.unsmoothed = train_predictor(data, SmoothingConfig::none(), cfg.train, seed);
    pair.smoothed = train_predictor(data, cfg.smoothing, cfg.train, seed);
    return pair;
}

std::string model_prefix(const std::string& out, std::uint64_t seed, bool smoothed) {
    return out + "/models/seed" + std::to_string(seed) + (smoothed ? "_smoothed" : "_unsmoothed");
}

std::vector<Table1Row> table1_rows(const std::vector<std::uint64_t>& seeds, const std::vector<PredictorPair>& pairs) {
    std::vector<Table1Row> rows;
    for (std::size_t i = 0; i < pairs.size(); ++i)
        rows.push_back({std::to_string(seeds[i]), pairs[i].unsmoothed.report.test_auroc,
                        pairs[i].smoothed.report.test_auroc, pairs[i].unsmoothed.report.avg_grad_norm,
                        pairs[i].smoothed.report.avg_grad_norm});
    Table1Row mean{"mean"}, sd{"std"};
    const double n = static_cast<double>(rows.size());
    for (const auto& r : rows) {
        mean.auroc_before += r.auroc_before / n;
        mean.auroc_after += r.auroc_after / n;
        mean.grad_norm_before += r.grad_norm_before / n;
        mean.grad_norm_after += r.grad_norm_after / n;
    }
    if (rows.size() > 1) {
        for (const auto& r : rows) {
            sd.auroc_before += std::pow(r.auroc_before - mean.auroc_before, 2) / (n - 1);
            sd.auroc_after += std::pow(r.auroc_after - mean.auroc_after, 2) / (n - 1);
            sd.grad_norm_before += std::pow(r.grad_norm_before - mean.grad_norm_before, 2) / (n - 1);
            sd.grad_norm_after += std::pow(r.grad_norm_after - mean.grad_norm_after, 2) / (n - 1);
        }
        sd.auroc_before = std::sqrt(sd.auroc_before);
        sd.auroc_after = std::sqrt(sd.auroc_after);
        sd.grad_norm_before = std::sqrt(sd.grad_norm_before);
        sd.grad_norm_after = std::sqrt(sd.grad_norm_after);
    }
    rows.push_back(mean);
    rows.push_back(sd);
    return rows;
}

std::string table1_csv(const std::vector<Table1Row>& rows) {
    std::ostringstream os;
    os << "seed,auroc_before,auroc_after,grad_norm_before,grad_norm_after\n";
    for (const auto& r : rows)
        os << r.label << ',' << format_fixed(r.auroc_before) << ',' << format_fixed(r.auroc_after) << ','
           << format_fixed(r.grad_norm_before) << ',' << format_fixed(r.grad_norm_after) << '\n';
    return os.str();
}

CampaignOutput run_campaign(const LabeledDataset& data, const Codebook& codebook, const CampaignConfig& cfg,
                            const std::vector<PredictorPair>& pairs) {
    if (pairs.size() != cfg.seeds.size()) throw CampaignError("campaign: need one predictor pair per seed");
    CampaignOutput out;
    for (const auto& method : cfg.methods) {
        std::vector<CampaignRecord> method_records;
        for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
            const auto& p = uses_smoothed_predictor(method) ? pairs[s].smoothed : pairs[s].unsmoothed;
            const int target = method == "mccop" ? cfg.mccop.target
                               : method == "gd" ? cfg.gd.target
                               : method == "hill_climb" ? cfg.hill_climb.target
                                                        : cfg.ga.target;
            const auto samples = eligible_samples(data, p, target, cfg.max_samples);
            auto recs = run_method(method, samples, p, codebook, cfg, cfg.seeds[s], cfg.jobs);
            method_records.insert(method_records.end(), recs.begin(), recs.end());
        }
        out.summaries.push_back(summarize_method(method, method_records));
        out.records.insert(out.records.end(), method_records.begin(), method_records.end());
    }
    return out;
}

void write_reports(const std::string& out, const CampaignOutput& c, const LabeledDataset& data, int target) {
    std::filesystem::create_directories(out);
    write_text(out + "/campaign.csv", campaign_csv(c.records));
    write_text(out + "/summary.csv", summary_csv(c.summaries));
    write_text(out + "/sequences.tsv", sequences_tsv(c.records));
    std::size_t max_d = 0;
    for (const auto& r : c.records)
        if (r.result.success) max_d = std::max(max_d, r.result.edit_distance);
    for (std::size_t d = 1; d <= max_d; ++d)
        write_text(out + "/slices_d" + std::to_string(d) + ".csv", slices_csv(slice_by_edit_distance(c.records, d)));
    write_text(out + "/timing.csv", timing_csv(timing_profile(c.records)));
    write_text(out + "/mutfreq.csv", mutfreq_csv(mutation_frequencies(c.records)));
    std::ostringstream os;
    os << "method,id,seed,sequence,dataset_id,split\n";
    for (const auto& m : rediscovery_check(c.records, data, target > 0 ? 1 : 0))
        os << m.method << ',' << m.sample_id << ',' << m.seed << ',' << m.sequence << ',' << m.dataset_id << ','
           << split_name(m.split) << '\n';
    write_text(out + "/rediscovery.csv", os.str());
}

std::string AblationCell::label() const {
    std::vector<std::string> parts;
    if (spectral) parts.push_back("sn");
    if (jacobian) parts.push_back("jac");
    if (fgsm) parts.push_back("fgsm");
    if (softplus) parts.push_back("softplus");
    return parts.empty() ? "none" : join(parts, "+");
}

std::vector<AblationCell> ablation_grid(const CampaignConfig& cfg) {
    std::vector<AblationCell> cells;
    std::vector<bool> projections;
    if (cfg.ablation.projection_off) projections.push_back(false);
    if (cfg.ablation.projection_on) projections.push_back(true);
    for (int mask = 0; mask < 16; ++mask)
        for (bool proj : projections)
            for (int k : cfg.ablation.k_values)
                cells.push_back({(mask & 1) != 0, (mask & 2) != 0, (mask & 4) != 0, (mask & 8) != 0, proj, k});
    return cells;
}

namespace {

SmoothingConfig cell_smoothing(const AblationCell& cell, const SmoothingConfig& base) {
    SmoothingConfig s = base;
    s.spectral_norm = cell.spectral;
    s.jacobian_lambda = cell.jacobian ? (base.jacobian_lambda > 0.0 ? base.jacobian_lambda : 1e-3) : 0.0;
    s.fgsm_augment = cell.fgsm;
    s.softplus = cell.softplus;
    return s;
}

int smoothing_key(const AblationCell& c) {
    return (c.spectral ? 1 : 0) | (c.jacobian ? 2 : 0) | (c.fgsm ? 4 : 0) | (c.softplus ? 8 : 0);
}

}  // namespace

std::vector<AblationRow> run_ablation(const LabeledDataset& data, const Codebook& codebook, const CampaignConfig& cfg,
                                      const std::vector<AblationCell>& cells) {
    if (cells.size() > cfg.ablation.cell_budget)
        throw ConfigError("ablation: " + std::to_string(cells.size()) + " cells exceed the budget of " +
                          std::to_string(cfg.ablation.cell_budget));
    std::map<std::pair<int, std::uint64_t>, TrainedPredictor> models;
    auto model = [&](const AblationCell& cell, std::uint64_t seed) -> const TrainedPredictor& {
        const auto key = std::make_pair(smoothing_key(cell), seed);
        auto it = models.find(key);
        if (it == models.end())
            it = models.emplace(key, train_predictor(data, cell_smoothing(cell, cfg.smoothing), cfg.train, seed)).first;
        return it->second;
    };

    std::vector<AblationRow> rows;
    for (const auto& cell : cells) {
        std::vector<CampaignRecord> records;
        CampaignConfig c = cfg;
        c.mccop.k = cell.k == 0 ? static_cast<int>(data.world.length) : cell.k;
        c.mccop.fixed_mask.reset();
        if (!cell.projection) c.projector.alpha = 0.0;
        const std::string method = cell.all_off() ? "gd" : "mccop";
        const int target = cell.all_off() ? c.gd.target : c.mccop.target;
        for (auto seed : cfg.seeds) {
            const auto& p = model(cell, seed);
            const auto samples = eligible_samples(data, p, target, cfg.max_samples);
            auto recs = run_method(method, samples, p, codebook, c, seed, cfg.jobs);
            records.insert(records.end(), recs.begin(), recs.end());
        }
        rows.push_back({cell, summarize_method(method, records)});
    }
    return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::ostringstream os;
    os << "smoothing,projection,k,method," << summary_header().substr(std::string("method,").size()) << '\n';
    for (const auto& r : rows)
        os << r.cell.label() << ',' << (r.cell.projection ? "on" : "off") << ','
           << (r.cell.k == 0 ? std::string("all") : std::to_string(r.cell.k)) << ',' << r.summary.method << ','
           << summary_metrics_fields(r.summary) << '\n';
    return os.str();
}

std::vector<CampaignRecord> read_campaign(const std::string& out) {
    const auto rows = read_lines(out + "/campaign.csv");
    const auto seqs = read_lines(out + "/sequences.tsv");
    if (rows.size() != seqs.size()) throw DataError("report: campaign.csv and sequences.tsv disagree in length");
    std::vector<CampaignRecord> records;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto f = split_fields(rows[i]);
        const auto s = split_fields(seqs[i], '\t');
        if (f.size() != 18 || s.size() != 5) throw DataError("report: malformed row " + std::to_string(i + 1));
        CampaignRecord rec;
        rec.sample_id = static_cast<std::size_t>(parse_int(f[0]));
        rec.seed = static_cast<std::uint64_t>(parse_int(f[2]));
        auto& r = rec.result;
        r.method = f[1];
        r.success = f[3] == "1";
        r.adversarial = f[4] == "1";
        r.steps_used = static_cast<int>(parse_int(f[5]));
        r.final_confidence = parse_double(f[7]);
        r.duration_s = parse_double(f[8]);
        r.phases = {parse_double(f[9]), parse_double(f[10]), parse_double(f[11]), parse_double(f[12])};
        rec.manifold_distance = parse_double(f[13]);
        if (s[0] != f[0] || s[1] != f[1]) throw DataError("report: row " + std::to_string(i + 1) + " mismatch");
        r.original = ResidueSequence(s[3]);
        r.decoded = ResidueSequence(s[4]);
        finalize_result(r);
        r.leakage = static_cast<std::size_t>(parse_int(f[16]));
        if (r.edit_distance != static_cast<std::size_t>(parse_int(f[6])))
            throw DataError("report: edit distance of row " + std::to_string(i + 1) + " disagrees with sequences");
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace mccop
