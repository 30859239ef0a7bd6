// mccop: dataset generation, predictor training, counterfactual campaigns,
// ablations and reports, all driven by one INI config.

#include "mccop/cli/pipeline.hpp"
#include "mccop/textio.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

using namespace mccop;

namespace {

enum Exit { ok = 0, other = 1, config = 2, data = 3, training = 4, campaign = 5 };

struct Options {
    std::string config_path;
    std::string seeds;
    std::string out;
    std::string methods;
    int jobs = 0;
};

CampaignConfig resolve(const Options& o) {
    CampaignConfig c = o.config_path.empty() ? parse_config("") : load_config(o.config_path);
    if (!o.seeds.empty()) {
        c.seeds.clear();
        for (const auto& s : parse_list(o.seeds)) {
            const long long x = parse_int(s);
            if (x < 0) throw ConfigError("--seed: seeds must be >= 0");
            c.seeds.push_back(static_cast<std::uint64_t>(x));
        }
    }
    if (!o.out.empty()) c.out = o.out;
    if (!o.methods.empty()) c.methods = parse_list(o.methods);
    if (o.jobs > 0) c.jobs = o.jobs;
    c.validate();
    std::filesystem::create_directories(c.out);
    write_text(c.out + "/config.ini", config_to_ini(c));
    return c;
}

std::string data_dir(const CampaignConfig& c) { return c.out + "/data"; }

void print_file(const std::string& text) { std::cout << text; }

int cmd_gen_data(const CampaignConfig& c) {
    const auto cb = world_codebook(c.world);
    const auto d = make_dataset(c.world, cb, c.n, c.binarization, c.data_seed);
    save_dataset(d, data_dir(c));
    std::cout << "dataset: " << d.items.size() << " items (" << binarization_name(d.mode) << ")\n";
    for (auto s : {Split::train, Split::val, Split::test})
        std::cout << "  " << split_name(s) << ": " << d.count(s) << " (label0 " << d.count(s, 0) << ", label1 "
                  << d.count(s, 1) << ")\n";
    std::cout << "written to " << data_dir(c) << "\n";
    return ok;
}

int cmd_train(const CampaignConfig& c) {
    const auto d = load_dataset(data_dir(c));
    std::filesystem::create_directories(c.out + "/models");
    std::vector<PredictorPair> pairs;
    for (auto seed : c.seeds) {
        pairs.push_back(train_pair(d, c, seed));
        save_predictor(pairs.back().unsmoothed, model_prefix(c.out, seed, false));
        save_predictor(pairs.back().smoothed, model_prefix(c.out, seed, true));
        std::cout << "seed " << seed << ": trained (epochs " << pairs.back().unsmoothed.report.epochs.size() << " / "
                  << pairs.back().smoothed.report.epochs.size() << ")\n";
    }
    const auto table = table1_csv(table1_rows(c.seeds, pairs));
    write_text(c.out + "/table1.csv", table);
    print_file(table);
    return ok;
}

std::vector<PredictorPair> load_pairs(const CampaignConfig& c) {
    std::vector<PredictorPair> pairs;
    for (auto seed : c.seeds)
        pairs.push_back({load_predictor(model_prefix(c.out, seed, false)), load_predictor(model_prefix(c.out, seed, true))});
    return pairs;
}

int cmd_run(const CampaignConfig& c) {
    const auto d = load_dataset(data_dir(c));
    const auto cb = world_codebook(d.world);
    const auto pairs = load_pairs(c);
    const auto result = run_campaign(d, cb, c, pairs);
    write_reports(c.out, result, d, c.mccop.target);
    print_file(summary_csv(result.summaries));
    return ok;
}

int cmd_ablate(const CampaignConfig& c) {
    const auto d = load_dataset(data_dir(c));
    const auto cb = world_codebook(d.world);
    const auto rows = run_ablation(d, cb, c, ablation_grid(c));
    const auto text = ablation_csv(rows);
    write_text(c.out + "/ablation.csv", text);
    print_file(text);
    // success rate against k within each (smoothing, projection) group: reported only
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        const auto& a = rows[i];
        const auto& b = rows[i + 1];
        if (a.cell.label() != b.cell.label() || a.cell.projection != b.cell.projection) continue;
        const bool larger_k = (b.cell.k == 0 && a.cell.k != 0) || (a.cell.k != 0 && b.cell.k > a.cell.k);
        if (larger_k && b.summary.success_rate < a.summary.success_rate)
            std::cout << "note: success rate drops from k=" << a.cell.k << " to k="
                      << (b.cell.k == 0 ? std::string("all") : std::to_string(b.cell.k)) << " in cell "
                      << a.cell.label() << (a.cell.projection ? "/proj" : "") << "\n";
    }
    return ok;
}

int cmd_report(const CampaignConfig& c) {
    const auto records = read_campaign(c.out);
    // configured methods, so that a method with no eligible samples keeps its row
    std::vector<std::string> methods = c.methods;
    for (const auto& r : records)
        if (std::find(methods.begin(), methods.end(), r.result.method) == methods.end())
            methods.push_back(r.result.method);
    CampaignOutput out;
    out.records = records;
    for (const auto& m : methods) {
        std::vector<CampaignRecord> subset;
        for (const auto& r : records)
            if (r.result.method == m) subset.push_back(r);
        out.summaries.push_back(summarize_method(m, subset));
    }
    const auto d = load_dataset(data_dir(c));
    write_reports(c.out, out, d, c.mccop.target);
    print_file(summary_csv(out.summaries));
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Counterfactual optimization over a synthetic latent world"};
    app.require_subcommand(1);
    Options o;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "INI config file (defaults when omitted)");
        sub->add_option("--seed", o.seeds, "Comma-separated seeds, overrides [campaign] seeds");
        sub->add_option("--out", o.out, "Output directory, overrides [campaign] out");
        sub->add_option("--methods", o.methods, "Comma-separated methods: mccop,gd,hill_climb,ga");
        sub->add_option("--jobs", o.jobs, "Worker threads for per-sample work");
    };
    auto* gen = app.add_subcommand("gen-data", "Generate and save the labeled dataset");
    auto* train = app.add_subcommand("train", "Train paired unsmoothed/smoothed predictors per seed");
    auto* run = app.add_subcommand("run", "Run counterfactual campaigns and write reports");
    auto* ablate = app.add_subcommand("ablate", "Run the smoothing x projection x k ablation grid");
    auto* report = app.add_subcommand("report", "Rebuild reports from an existing campaign.csv");
    for (auto* s : {gen, train, run, ablate, report}) add_common(s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? ok : config;
    }

    try {
        const auto c = resolve(o);
        if (gen->parsed()) return cmd_gen_data(c);
        if (train->parsed()) return cmd_train(c);
        if (run->parsed()) return cmd_run(c);
        if (ablate->parsed()) return cmd_ablate(c);
        if (report->parsed()) return cmd_report(c);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return data;
    } catch (const TrainingError& e) {
        std::cerr << "training error: " << e.what() << "\n";
        return training;
    } catch (const CampaignError& e) {
        std::cerr << "campaign error: " << e.what() << "\n";
        return campaign;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return other;
    }
    return other;
}
