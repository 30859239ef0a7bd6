#include "mccop/latentworld/dataset.hpp"

#include "mccop/latentworld/binarize.hpp"
#include "mccop/latentworld/world_json.hpp"
#include "mccop/textio.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <optional>
#include <random>

namespace mccop {

const char* split_name(Split s) {
    switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    }
    return "?";
}

Split parse_split(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw DataError("unknown split '" + s + "'");
}

const char* binarization_name(Binarization b) { return b == Binarization::otsu ? "otsu" : "tercile"; }

Binarization parse_binarization(const std::string& s) {
    if (s == "otsu") return Binarization::otsu;
    if (s == "tercile") return Binarization::tercile;
    throw ConfigError("unknown binarization '" + s + "' (expected otsu or tercile)");
}

std::vector<const DatasetItem*> LabeledDataset::split(Split s) const {
    std::vector<const DatasetItem*> out;
    for (const auto& it : items)
        if (it.split == s) out.push_back(&it);
    return out;
}

std::size_t LabeledDataset::count(Split s) const {
    return static_cast<std::size_t>(std::count_if(items.begin(), items.end(), [&](const auto& it) { return it.split == s; }));
}

std::size_t LabeledDataset::count(Split s, int label) const {
    return static_cast<std::size_t>(
        std::count_if(items.begin(), items.end(), [&](const auto& it) { return it.split == s && it.label == label; }));
}

Embedding item_embedding(const WorldConfig& world, const Codebook& codebook, std::uint64_t seed, std::size_t draw,
                         const ResidueSequence& seq) {
    auto rng = substream(seed, {tag("jitter"), draw});
    return encode(seq, codebook, world.jitter_sigma, rng);
}

namespace {

// Per-class holdout sizes: at least one item per class, totals matched to
// round(frac * n) by largest remainder.
std::vector<std::size_t> holdout_sizes(const std::vector<std::size_t>& class_sizes, double frac) {
    std::size_t n = 0;
    for (auto c : class_sizes) n += c;
    const auto target = static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
    std::vector<std::size_t> out(class_sizes.size());
    std::vector<double> rem(class_sizes.size());
    std::size_t total = 0;
    for (std::size_t c = 0; c < class_sizes.size(); ++c) {
        const double exact = frac * static_cast<double>(class_sizes[c]);
        out[c] = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(exact)));
        rem[c] = exact - std::floor(exact);
        total += out[c];
    }
    std::vector<std::size_t> order(class_sizes.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return rem[a] > rem[b]; });
    for (std::size_t i = 0; total < target && i < order.size(); ++i, ++total) ++out[order[i]];
    return out;
}

bool splits_ok(const LabeledDataset& d) {
    for (auto s : {Split::train, Split::val, Split::test})
        if (d.count(s, 0) == 0 || d.count(s, 1) == 0) return false;
    return true;
}

std::optional<LabeledDataset> attempt(const WorldConfig& world, const Codebook& codebook, std::size_t n,
                                      Binarization mode, std::uint64_t seed, std::uint64_t round) {
    LabeledDataset d;
    d.world = world;
    d.mode = mode;
    d.seed = seed;
    d.generated = n;

    // draw indices are global across rounds so every sequence keeps its own jitter stream
    const std::size_t draw0 = static_cast<std::size_t>(round) * n;
    auto seq_rng = substream(seed, {tag("sequences"), round});
    std::vector<ResidueSequence> seqs;
    std::vector<double> scores;
    seqs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        seqs.push_back(sample_sequence(world, seq_rng));
        scores.push_back(ground_truth_score(seqs.back(), world));
    }

    std::vector<int> labels(n, -1);
    try {
        if (mode == Binarization::otsu) {
            d.threshold = otsu_threshold(scores);
            for (std::size_t i = 0; i < n; ++i) labels[i] = scores[i] >= d.threshold ? 1 : 0;
        } else {
            const auto t = binarize_middle_tercile(scores);
            d.low_cut = t.low_cut;
            d.high_cut = t.high_cut;
            labels = t.labels;
        }
    } catch (const DataError&) {
        return std::nullopt;
    }

    auto noise_rng = substream(seed, {tag("label-noise"), round});
    std::bernoulli_distribution flip(world.label_noise);
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] < 0) continue;
        DatasetItem it;
        it.id = d.items.size();
        it.draw = draw0 + i;
        it.sequence = seqs[i];
        it.raw_score = scores[i];
        it.label = labels[i];
        // always consume a draw so flips do not depend on earlier outcomes
        it.label_flipped = flip(noise_rng) && world.label_noise > 0.0;
        if (it.label_flipped) it.label = 1 - it.label;
        d.items.push_back(std::move(it));
    }

    std::vector<std::vector<std::size_t>> by_class(2);
    for (const auto& it : d.items) by_class[static_cast<std::size_t>(it.label)].push_back(it.id);
    if (by_class[0].size() < 3 || by_class[1].size() < 3) return std::nullopt;

    const std::vector<std::size_t> sizes{by_class[0].size(), by_class[1].size()};
    const auto n_val = holdout_sizes(sizes, 0.1);
    const auto n_test = holdout_sizes(sizes, 0.1);
    auto split_rng = substream(seed, {tag("split"), round});
    for (std::size_t c = 0; c < 2; ++c) {
        auto& ids = by_class[c];
        std::shuffle(ids.begin(), ids.end(), split_rng);
        for (std::size_t j = 0; j < ids.size(); ++j) {
            auto& it = d.items[ids[j]];
            if (j < n_val[c]) it.split = Split::val;
            else if (j < n_val[c] + n_test[c]) it.split = Split::test;
            else it.split = Split::train;
        }
    }
    if (!splits_ok(d)) return std::nullopt;

    for (auto& it : d.items) it.embedding = item_embedding(world, codebook, seed, it.draw, it.sequence);
    return d;
}

constexpr std::uint64_t kMaxRounds = 6;  // first draw plus 5 resamples

}  // namespace

LabeledDataset make_dataset(const WorldConfig& world, const Codebook& codebook, std::size_t n, Binarization mode,
                            std::uint64_t seed) {
    world.validate();
    if (n < 30) throw DataError("make_dataset: need n >= 30");
    for (std::uint64_t round = 0; round < kMaxRounds; ++round)
        if (auto d = attempt(world, codebook, n, mode, seed, round)) return std::move(*d);
    throw DataError("make_dataset: a class or split stayed empty after resampling; adjust the world or n");
}

nlohmann::json world_to_json(const WorldConfig& w) {
    nlohmann::json j;
    j["length"] = w.length;
    j["dim"] = w.dim;
    j["alphabet"] = w.alphabet;
    j["min_separation"] = w.min_separation;
    j["jitter_sigma"] = w.jitter_sigma;
    j["label_noise"] = w.label_noise;
    j["plant_probability"] = w.plant_probability;
    j["seed"] = w.seed;
    j["motif"] = nlohmann::json::array();
    for (const auto& m : w.motif)
        j["motif"].push_back({{"position", m.position}, {"residue", std::string(1, m.residue)}, {"weight", m.weight}});
    j["pairs"] = nlohmann::json::array();
    for (const auto& p : w.pairs)
        j["pairs"].push_back({{"pos_i", p.pos_i},
                              {"pos_j", p.pos_j},
                              {"residue_i", std::string(1, p.residue_i)},
                              {"residue_j", std::string(1, p.residue_j)},
                              {"bonus", p.bonus}});
    return j;
}

WorldConfig world_from_json(const nlohmann::json& j) {
    auto residue = [](const nlohmann::json& v) {
        const auto s = v.get<std::string>();
        if (s.size() != 1) throw DataError("world json: residue must be one letter");
        return s[0];
    };
    try {
        WorldConfig w;
        w.length = j.at("length").get<std::size_t>();
        w.dim = j.at("dim").get<Index>();
        w.alphabet = j.at("alphabet").get<Index>();
        w.min_separation = j.at("min_separation").get<double>();
        w.jitter_sigma = j.at("jitter_sigma").get<double>();
        w.label_noise = j.at("label_noise").get<double>();
        w.plant_probability = j.at("plant_probability").get<double>();
        w.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& m : j.at("motif"))
            w.motif.push_back({m.at("position").get<std::size_t>(), residue(m.at("residue")), m.at("weight").get<double>()});
        for (const auto& p : j.at("pairs"))
            w.pairs.push_back({p.at("pos_i").get<std::size_t>(), p.at("pos_j").get<std::size_t>(),
                               residue(p.at("residue_i")), residue(p.at("residue_j")), p.at("bonus").get<double>()});
        return w;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("world json: ") + e.what());
    }
}

void save_dataset(const LabeledDataset& d, const std::string& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json m;
    m["format"] = "mccop-dataset";
    m["version"] = 1;
    m["world"] = world_to_json(d.world);
    m["binarization"] = binarization_name(d.mode);
    m["seed"] = d.seed;
    m["generated"] = d.generated;
    m["threshold"] = d.threshold;
    m["low_cut"] = d.low_cut;
    m["high_cut"] = d.high_cut;
    m["items"] = d.items.size();
    for (auto s : {Split::train, Split::val, Split::test})
        m["splits"][split_name(s)] = {{"total", d.count(s)}, {"label0", d.count(s, 0)}, {"label1", d.count(s, 1)}};
    write_text(dir + "/manifest.json", m.dump(2) + "\n");

    std::string csv = "id,draw,sequence,raw_score,label,flipped,split\n";
    for (const auto& it : d.items)
        csv += std::to_string(it.id) + "," + std::to_string(it.draw) + "," + it.sequence.str() + "," +
               format_exact(it.raw_score) + "," + std::to_string(it.label) + "," + (it.label_flipped ? "1" : "0") +
               "," + split_name(it.split) + "\n";
    write_text(dir + "/records.csv", csv);
}

LabeledDataset load_dataset(const std::string& dir) {
    std::ifstream in(dir + "/manifest.json");
    if (!in) throw DataError("no dataset manifest in " + dir);
    nlohmann::json m;
    try {
        in >> m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad dataset manifest: ") + e.what());
    }
    LabeledDataset d;
    try {
        if (m.at("format") != "mccop-dataset" || m.at("version") != 1) throw DataError("unsupported dataset format");
        d.world = world_from_json(m.at("world"));
        d.mode = parse_binarization(m.at("binarization").get<std::string>());
        d.seed = m.at("seed").get<std::uint64_t>();
        d.generated = m.at("generated").get<std::size_t>();
        d.threshold = m.at("threshold").get<double>();
        d.low_cut = m.at("low_cut").get<double>();
        d.high_cut = m.at("high_cut").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad dataset manifest: ") + e.what());
    } catch (const ConfigError& e) {
        throw DataError(e.what());
    }
    d.world.validate();
    const auto codebook = world_codebook(d.world);

    const auto lines = read_lines(dir + "/records.csv");
    if (lines.empty() || lines[0] != "id,draw,sequence,raw_score,label,flipped,split")
        throw DataError("records.csv: unexpected header");
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const auto f = split_fields(lines[k]);
        if (f.size() != 7) throw DataError("records.csv: line " + std::to_string(k + 1) + " has wrong field count");
        DatasetItem it;
        it.id = static_cast<std::size_t>(parse_int(f[0]));
        it.draw = static_cast<std::size_t>(parse_int(f[1]));
        try {
            it.sequence = ResidueSequence(f[2]);
        } catch (const std::exception& e) {
            throw DataError("records.csv: " + std::string(e.what()));
        }
        if (it.sequence.size() != d.world.length) throw DataError("records.csv: sequence length mismatch");
        it.raw_score = parse_double(f[3]);
        it.label = static_cast<int>(parse_int(f[4]));
        if (it.label != 0 && it.label != 1) throw DataError("records.csv: label must be 0 or 1");
        it.label_flipped = f[5] == "1";
        it.split = parse_split(f[6]);
        if (it.id != d.items.size()) throw DataError("records.csv: ids must be consecutive from 0");
        it.embedding = item_embedding(d.world, codebook, d.seed, it.draw, it.sequence);
        d.items.push_back(std::move(it));
    }
    return d;
}

}  // namespace mccop
