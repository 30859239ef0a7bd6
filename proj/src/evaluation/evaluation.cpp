#include "mccop/evaluation/evaluation.hpp"

#include "mccop/textio.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

namespace mccop {

namespace {

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v, bool sample) {
    const std::size_t dof = sample ? 1 : 0;
    if (v.size() <= dof) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - dof));
}

std::string fmt(double x) { return format_fixed(x, 6); }
std::string fmt(const std::optional<double>& x) { return x ? format_fixed(*x, 6) : "NA"; }

}  // namespace

CampaignMetrics campaign_metrics(std::span<const CounterfactualResult> results) {
    if (results.empty()) throw DataError("campaign_metrics: no results");
    CampaignMetrics m;
    m.total = results.size();
    std::vector<double> edits;
    double duration = 0.0;
    for (const auto& r : results) {
        if (r.success) {
            ++m.successes;
            edits.push_back(static_cast<double>(r.edit_distance));
        }
        if (r.adversarial) ++m.adversarial;
        duration += r.duration_s;
    }
    m.success_rate = static_cast<double>(m.successes) / static_cast<double>(m.total);
    const std::size_t reached = m.successes + m.adversarial;
    if (reached > 0) m.adversarial_rate = static_cast<double>(m.adversarial) / static_cast<double>(reached);
    if (!edits.empty()) {
        m.edit_mean = mean_of(edits);
        m.edit_std = std_of(edits, false);
    }
    m.mean_duration = duration / static_cast<double>(m.total);
    return m;
}

MethodSummary summarize_method(const std::string& method, std::span<const CampaignRecord> records) {
    MethodSummary s;
    s.method = method;
    std::map<std::uint64_t, std::vector<CounterfactualResult>> by_seed;
    std::vector<double> edits;
    for (const auto& rec : records) {
        by_seed[rec.seed].push_back(rec.result);
        if (rec.result.success) edits.push_back(static_cast<double>(rec.result.edit_distance));
    }
    s.seeds = by_seed.size();
    s.samples = records.size();
    if (records.empty()) return s;
    std::vector<double> success, adversarial;
    for (const auto& [seed, rs] : by_seed) {
        const auto m = campaign_metrics(rs);
        success.push_back(m.success_rate);
        if (m.adversarial_rate) adversarial.push_back(*m.adversarial_rate);
    }
    s.success_rate = mean_of(success);
    s.success_rate_std = std_of(success, true);
    if (!adversarial.empty()) {
        s.adversarial_rate = mean_of(adversarial);
        s.adversarial_rate_std = std_of(adversarial, true);
    }
    if (!edits.empty()) {
        s.edit_mean = mean_of(edits);
        s.edit_std = std_of(edits, false);
    }
    return s;
}

double kyte_doolittle(char residue) {
    switch (residue) {
    case 'A': return 1.8;
    case 'R': return -4.5;
    case 'N': return -3.5;
    case 'D': return -3.5;
    case 'C': return 2.5;
    case 'Q': return -3.5;
    case 'E': return -3.5;
    case 'G': return -0.4;
    case 'H': return -3.2;
    case 'I': return 4.5;
    case 'L': return 3.8;
    case 'K': return -3.9;
    case 'M': return 1.9;
    case 'F': return 2.8;
    case 'P': return -1.6;
    case 'S': return -0.8;
    case 'T': return -0.7;
    case 'W': return -0.9;
    case 'Y': return -1.3;
    case 'V': return 4.2;
    default: throw DataError(std::string("gravy: unknown residue '") + residue + "'");
    }
}

double gravy(const ResidueSequence& seq) {
    if (seq.size() == 0) throw DataError("gravy: empty sequence");
    double s = 0.0;
    for (std::size_t i = 0; i < seq.size(); ++i) s += kyte_doolittle(seq[i]);
    return s / static_cast<double>(seq.size());
}

std::vector<SliceRow> slice_by_edit_distance(std::span<const CampaignRecord> records, std::size_t d) {
    if (d < 1) throw ConfigError("slice: d must be >= 1");
    std::vector<SliceRow> out;
    for (const auto& rec : records) {
        const auto& r = rec.result;
        if (!r.success || r.edit_distance != d) continue;
        out.push_back({r.method, rec.sample_id, rec.seed, r.decoded.str(), gravy(r.original), gravy(r.decoded),
                       rec.manifold_distance});
    }
    return out;
}

std::vector<TimingRow> timing_profile(std::span<const CampaignRecord> records) {
    std::vector<TimingRow> rows;
    std::vector<PhaseTimes> sums;
    for (const auto& rec : records) {
        const auto& r = rec.result;
        auto it = std::find_if(rows.begin(), rows.end(), [&](const auto& t) { return t.method == r.method; });
        std::size_t k;
        if (it == rows.end()) {
            rows.push_back({});
            rows.back().method = r.method;
            sums.push_back({});
            k = rows.size() - 1;
        } else {
            k = static_cast<std::size_t>(it - rows.begin());
        }
        ++rows[k].runs;
        sums[k].gradient += r.phases.gradient;
        sums[k].projection += r.phases.projection;
        sums[k].reencode += r.phases.reencode;
        sums[k].other += r.phases.other;
    }
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const double total = sums[k].total();
        rows[k].mean_total_s = total / static_cast<double>(rows[k].runs);
        if (total > 0.0) {
            rows[k].gradient_frac = sums[k].gradient / total;
            rows[k].projection_frac = sums[k].projection / total;
            rows[k].reencode_frac = sums[k].reencode / total;
            rows[k].other_frac = sums[k].other / total;
        }
    }
    return rows;
}

std::vector<Rediscovery> rediscovery_check(std::span<const CampaignRecord> records, const LabeledDataset& data,
                                           int target_label) {
    std::unordered_multimap<std::string, const DatasetItem*> index;
    for (const auto& it : data.items)
        if (it.label == target_label) index.emplace(it.sequence.str(), &it);
    std::vector<Rediscovery> out;
    for (const auto& rec : records) {
        if (!rec.result.success) continue;
        const auto [lo, hi] = index.equal_range(rec.result.decoded.str());
        std::vector<const DatasetItem*> hits;
        for (auto i = lo; i != hi; ++i) hits.push_back(i->second);
        std::sort(hits.begin(), hits.end(), [](auto a, auto b) { return a->id < b->id; });
        for (const auto* h : hits)
            out.push_back({rec.result.method, rec.sample_id, rec.seed, h->sequence.str(), h->id, h->split});
    }
    return out;
}

MutationCounts mutation_frequencies(std::span<const CampaignRecord> records) {
    MutationCounts counts;
    for (const auto& rec : records) {
        const auto& r = rec.result;
        if (!r.success) continue;
        auto& m = counts[r.method];
        for (auto pos : r.mutated_positions) ++m[{pos, r.decoded[pos]}];
    }
    return counts;
}

std::string campaign_csv(std::span<const CampaignRecord> records) {
    std::ostringstream os;
    os << "id,method,seed,success,adversarial,steps,edit_distance,final_confidence,duration_s,gradient_s,"
          "projection_s,reencode_s,other_s,manifold_distance,gravy_original,gravy_counterfactual,leakage,"
          "mutated_positions\n";
    for (const auto& rec : records) {
        const auto& r = rec.result;
        std::vector<std::string> pos;
        for (auto p : r.mutated_positions) pos.push_back(std::to_string(p));
        os << rec.sample_id << ',' << r.method << ',' << rec.seed << ',' << (r.success ? 1 : 0) << ','
           << (r.adversarial ? 1 : 0) << ',' << r.steps_used << ',' << r.edit_distance << ','
           << fmt(r.final_confidence) << ',' << fmt(r.duration_s) << ',' << fmt(r.phases.gradient) << ','
           << fmt(r.phases.projection) << ',' << fmt(r.phases.reencode) << ',' << fmt(r.phases.other) << ','
           << fmt(rec.manifold_distance) << ',' << fmt(gravy(r.original)) << ',' << fmt(gravy(r.decoded)) << ','
           << r.leakage << ',' << join(pos, ";") << '\n';
    }
    return os.str();
}

std::string summary_header() {
    return "method,seeds,samples,success_rate,success_rate_std,adversarial_rate,adversarial_rate_std,edit_distance,"
           "edit_distance_std";
}

std::string summary_metrics_fields(const MethodSummary& s) {
    std::ostringstream os;
    os << s.seeds << ',' << s.samples << ',' << fmt(s.success_rate) << ',' << fmt(s.success_rate_std) << ','
       << fmt(s.adversarial_rate) << ',' << fmt(s.adversarial_rate_std) << ',' << fmt(s.edit_mean) << ','
       << fmt(s.edit_std);
    return os.str();
}

std::string summary_row(const MethodSummary& s) { return s.method + "," + summary_metrics_fields(s); }

std::string summary_csv(std::span<const MethodSummary> rows) {
    std::string out = summary_header() + "\n";
    for (const auto& r : rows) out += summary_row(r) + "\n";
    return out;
}

std::string sequences_tsv(std::span<const CampaignRecord> records) {
    std::string out = "id\tmethod\tseed\toriginal\tcounterfactual\n";
    for (const auto& rec : records)
        out += std::to_string(rec.sample_id) + "\t" + rec.result.method + "\t" + std::to_string(rec.seed) + "\t" +
               rec.result.original.str() + "\t" + rec.result.decoded.str() + "\n";
    return out;
}

std::string slices_csv(std::span<const SliceRow> rows) {
    std::ostringstream os;
    os << "method,id,seed,sequence,gravy_original,gravy_counterfactual,manifold_distance\n";
    for (const auto& r : rows)
        os << r.method << ',' << r.sample_id << ',' << r.seed << ',' << r.sequence << ',' << fmt(r.gravy_original)
           << ',' << fmt(r.gravy_counterfactual) << ',' << fmt(r.manifold_distance) << '\n';
    return os.str();
}

std::string timing_csv(std::span<const TimingRow> rows) {
    std::ostringstream os;
    os << "method,runs,mean_total_s,gradient_frac,projection_frac,reencode_frac,other_frac\n";
    for (const auto& r : rows)
        os << r.method << ',' << r.runs << ',' << fmt(r.mean_total_s) << ',' << fmt(r.gradient_frac) << ','
           << fmt(r.projection_frac) << ',' << fmt(r.reencode_frac) << ',' << fmt(r.other_frac) << '\n';
    return os.str();
}

std::string mutfreq_csv(const MutationCounts& counts) {
    std::ostringstream os;
    os << "method,position,residue,count\n";
    for (const auto& [method, m] : counts)
        for (const auto& [key, n] : m) os << method << ',' << key.first << ',' << key.second << ',' << n << '\n';
    return os.str();
}

}  // namespace mccop
