#include "mccop/cli/config.hpp"

#include "mccop/textio.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace mccop {

namespace pt = boost::property_tree;

std::vector<std::string> parse_list(const std::string& s) {
    std::vector<std::string> out;
    for (auto& f : split_fields(s, ',')) {
        const auto b = f.find_first_not_of(" \t");
        const auto e = f.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(f.substr(b, e - b + 1));
    }
    return out;
}

void CampaignConfig::validate() const {
    world.validate();
    if (n < 30) throw ConfigError("data: n must be >= 30");
    smoothing.validate();
    train.validate();
    mccop.validate();
    projector.validate();
    gd.validate();
    hill_climb.validate();
    ga.validate();
    if (methods.empty()) throw ConfigError("campaign: need at least one method");
    for (const auto& m : methods)
        if (std::find(kMethods.begin(), kMethods.end(), m) == kMethods.end())
            throw ConfigError("campaign: unknown method '" + m + "'");
    if (seeds.empty()) throw ConfigError("campaign: need at least one seed");
    if (jobs < 1) throw ConfigError("campaign: jobs must be >= 1");
    if (ablation.k_values.empty()) throw ConfigError("ablation: need at least one k value");
    for (int k : ablation.k_values)
        if (k < 0) throw ConfigError("ablation: k values must be >= 1 or 'all'");
    if (!ablation.projection_on && !ablation.projection_off)
        throw ConfigError("ablation: enable at least one projection setting");
}

namespace {

double to_double(const std::string& key, const std::string& v) {
    try {
        return parse_double(v);
    } catch (const DataError&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
}

long long to_int(const std::string& key, const std::string& v) {
    try {
        return parse_int(v);
    } catch (const DataError&) {
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

std::string b2s(bool b) { return b ? "true" : "false"; }
std::string d2s(double x) { return format_exact(x); }

char one_residue(const std::string& key, const std::string& s) {
    if (s.size() != 1 || residue_index(s[0]) < 0) throw ConfigError(key + ": bad residue '" + s + "'");
    return s[0];
}

std::vector<MotifSite> parse_motif(const std::string& v) {
    std::vector<MotifSite> out;
    if (v == "none") return out;
    for (const auto& item : parse_list(v)) {
        const auto f = split_fields(item, ':');
        if (f.size() != 3) throw ConfigError("world.motif: entries are position:residue:weight");
        out.push_back({static_cast<std::size_t>(to_int("world.motif", f[0])), one_residue("world.motif", f[1]),
                       to_double("world.motif", f[2])});
    }
    return out;
}

std::string motif_str(const std::vector<MotifSite>& m) {
    std::vector<std::string> items;
    for (const auto& s : m) items.push_back(std::to_string(s.position) + ":" + s.residue + ":" + d2s(s.weight));
    return items.empty() ? std::string("none") : join(items, ",");
}

std::vector<EpistaticPair> parse_pairs(const std::string& v) {
    std::vector<EpistaticPair> out;
    if (v == "none") return out;
    for (const auto& item : parse_list(v)) {
        const auto f = split_fields(item, ':');
        if (f.size() != 5) throw ConfigError("world.pairs: entries are pos_i:pos_j:residue_i:residue_j:bonus");
        out.push_back({static_cast<std::size_t>(to_int("world.pairs", f[0])),
                       static_cast<std::size_t>(to_int("world.pairs", f[1])), one_residue("world.pairs", f[2]),
                       one_residue("world.pairs", f[3]), to_double("world.pairs", f[4])});
    }
    return out;
}

std::string pairs_str(const std::vector<EpistaticPair>& ps) {
    std::vector<std::string> items;
    for (const auto& p : ps)
        items.push_back(std::to_string(p.pos_i) + ":" + std::to_string(p.pos_j) + ":" + p.residue_i + ":" +
                        p.residue_j + ":" + d2s(p.bonus));
    return items.empty() ? std::string("none") : join(items, ",");
}

struct Schedule {
    int steps = 1000;
    double beta_min = 1e-4;
    double beta_max = 2e-2;
};

struct Field {
    std::string section;
    std::string key;
    std::function<void(const std::string&)> set;
    std::function<std::string()> get;
};

// One entry per configurable value; drives both parsing and printing.
std::vector<Field> fields(CampaignConfig& c, Schedule& sch) {
    std::vector<Field> f;
    auto num = [&](const char* sec, const char* key, double& ref) {
        const std::string name = std::string(sec) + "." + key;
        f.push_back({sec, key, [&ref, name](const std::string& v) { ref = to_double(name, v); },
                     [&ref] { return d2s(ref); }});
    };
    auto integer = [&](const char* sec, const char* key, auto& ref) {
        const std::string name = std::string(sec) + "." + key;
        f.push_back({sec, key,
                     [&ref, name](const std::string& v) {
                         const long long x = to_int(name, v);
                         if (x < 0 && std::is_unsigned_v<std::remove_reference_t<decltype(ref)>>)
                             throw ConfigError(name + ": must be >= 0");
                         ref = static_cast<std::remove_reference_t<decltype(ref)>>(x);
                     },
                     [&ref] { return std::to_string(ref); }});
    };
    auto flag = [&](const char* sec, const char* key, bool& ref) {
        const std::string name = std::string(sec) + "." + key;
        f.push_back({sec, key, [&ref, name](const std::string& v) { ref = to_bool(name, v); },
                     [&ref] { return b2s(ref); }});
    };

    auto& w = c.world;
    integer("world", "length", w.length);
    integer("world", "dim", w.dim);
    integer("world", "alphabet", w.alphabet);
    num("world", "min_separation", w.min_separation);
    num("world", "jitter_sigma", w.jitter_sigma);
    f.push_back({"world", "motif", [&w](const std::string& v) { w.motif = parse_motif(v); },
                 [&w] { return motif_str(w.motif); }});
    f.push_back({"world", "pairs", [&w](const std::string& v) { w.pairs = parse_pairs(v); },
                 [&w] { return pairs_str(w.pairs); }});
    num("world", "label_noise", w.label_noise);
    num("world", "plant_probability", w.plant_probability);
    integer("world", "seed", w.seed);

    integer("data", "n", c.n);
    f.push_back({"data", "binarization", [&c](const std::string& v) { c.binarization = parse_binarization(v); },
                 [&c] { return std::string(binarization_name(c.binarization)); }});
    integer("data", "seed", c.data_seed);

    auto& s = c.smoothing;
    flag("smoothing", "spectral_norm", s.spectral_norm);
    num("smoothing", "jacobian_lambda", s.jacobian_lambda);
    integer("smoothing", "jacobian_probes", s.jacobian_probes);
    num("smoothing", "fgsm_epsilon", s.fgsm_epsilon);
    flag("smoothing", "fgsm_augment", s.fgsm_augment);
    flag("smoothing", "softplus", s.softplus);

    auto& t = c.train;
    num("train", "learning_rate", t.learning_rate);
    num("train", "dropout", t.dropout);
    integer("train", "patience", t.patience);
    integer("train", "max_epochs", t.max_epochs);
    integer("train", "batch_size", t.batch_size);
    f.push_back({"train", "hidden",
                 [&t](const std::string& v) {
                     t.hidden.clear();
                     for (const auto& h : parse_list(v)) t.hidden.push_back(static_cast<Index>(to_int("train.hidden", h)));
                 },
                 [&t] {
                     std::vector<std::string> items;
                     for (auto h : t.hidden) items.push_back(std::to_string(h));
                     return join(items, ",");
                 }});
    num("train", "softplus_beta", t.softplus_beta);
    integer("train", "power_iters", t.power_iters);
    integer("train", "freeze_power_iters", t.freeze_power_iters);

    auto& m = c.mccop;
    integer("mccop", "k", m.k);
    num("mccop", "lambda_dist", m.lambda_dist);
    num("mccop", "margin", m.margin);
    num("mccop", "alpha", c.projector.alpha);
    integer("mccop", "t_diff", c.projector.t_diff);
    num("mccop", "eta", m.eta);
    integer("mccop", "t_max", m.t_max);
    num("mccop", "tau", m.tau);
    integer("mccop", "target", m.target);
    f.push_back({"mccop", "fixed_mask",
                 [&m](const std::string& v) {
                     if (v.empty() || v == "none") {
                         m.fixed_mask.reset();
                         return;
                     }
                     std::vector<bool> mask;
                     for (char ch : v) {
                         if (ch == '1') mask.push_back(true);
                         else if (ch == '0') mask.push_back(false);
                         else throw ConfigError("mccop.fixed_mask: use a 0/1 string, one digit per position");
                     }
                     m.fixed_mask = mask;
                 },
                 [&m] {
                     if (!m.fixed_mask) return std::string("none");
                     std::string s;
                     for (bool b : *m.fixed_mask) s += b ? '1' : '0';
                     return s;
                 }});

    integer("projector", "schedule_steps", sch.steps);
    num("projector", "beta_min", sch.beta_min);
    num("projector", "beta_max", sch.beta_max);
    num("projector", "prior_sigma", c.projector.prior_sigma);

    num("gd", "learning_rate", c.gd.learning_rate);
    integer("gd", "steps", c.gd.steps);
    num("gd", "tau", c.gd.tau);

    integer("hill_climb", "steps", c.hill_climb.steps);
    num("hill_climb", "tau", c.hill_climb.tau);

    auto& g = c.ga;
    integer("ga", "population", g.population);
    integer("ga", "generations", g.generations);
    num("ga", "crossover_rate", g.crossover_rate);
    num("ga", "edit_penalty", g.edit_penalty);
    num("ga", "tau", g.tau);
    num("ga", "elite_fraction", g.elite_fraction);
    integer("ga", "tournament", g.tournament);
    integer("ga", "min_mutations", g.min_mutations);
    integer("ga", "max_mutations", g.max_mutations);

    f.push_back({"campaign", "methods", [&c](const std::string& v) { c.methods = parse_list(v); },
                 [&c] { return join(c.methods, ","); }});
    f.push_back({"campaign", "seeds",
                 [&c](const std::string& v) {
                     c.seeds.clear();
                     for (const auto& s : parse_list(v)) {
                         const long long x = to_int("campaign.seeds", s);
                         if (x < 0) throw ConfigError("campaign.seeds: seeds must be >= 0");
                         c.seeds.push_back(static_cast<std::uint64_t>(x));
                     }
                 },
                 [&c] {
                     std::vector<std::string> items;
                     for (auto s : c.seeds) items.push_back(std::to_string(s));
                     return join(items, ",");
                 }});
    integer("campaign", "max_samples", c.max_samples);
    integer("campaign", "jobs", c.jobs);
    f.push_back({"campaign", "out", [&c](const std::string& v) { c.out = v; }, [&c] { return c.out; }});

    auto& a = c.ablation;
    f.push_back({"ablation", "k_values",
                 [&a](const std::string& v) {
                     a.k_values.clear();
                     for (const auto& s : parse_list(v))
                         a.k_values.push_back(s == "all" ? 0 : static_cast<int>(to_int("ablation.k_values", s)));
                 },
                 [&a] {
                     std::vector<std::string> items;
                     for (int k : a.k_values) items.push_back(k == 0 ? "all" : std::to_string(k));
                     return join(items, ",");
                 }});
    flag("ablation", "projection_on", a.projection_on);
    flag("ablation", "projection_off", a.projection_off);
    integer("ablation", "cell_budget", a.cell_budget);
    return f;
}

}  // namespace

CampaignConfig parse_config(const std::string& ini_text) {
    pt::ptree tree;
    try {
        std::istringstream in(ini_text);
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    CampaignConfig c;
    Schedule sch;
    auto table = fields(c, sch);
    std::set<std::string> seen;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ConfigError("config: key '" + section + "' outside any section");
        for (const auto& [key, value] : body) {
            auto it = std::find_if(table.begin(), table.end(),
                                   [&](const Field& f) { return f.section == section && f.key == key; });
            if (it == table.end()) throw ConfigError("config: unknown key [" + section + "] " + key);
            it->set(value.get_value<std::string>());
            seen.insert(section + "." + key);
        }
    }
    if (!seen.count("world.jitter_sigma")) c.world.jitter_sigma = c.world.min_separation / 10.0;
    if (!seen.count("projector.prior_sigma")) c.projector.prior_sigma = c.world.jitter_sigma;
    c.projector.schedule = NoiseSchedule::linear(sch.steps, sch.beta_min, sch.beta_max);
    c.validate();
    return c;
}

CampaignConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_ini(const CampaignConfig& cfg) {
    CampaignConfig c = cfg;
    Schedule sch{c.projector.schedule.steps, c.projector.schedule.beta[1],
                 c.projector.schedule.beta[static_cast<std::size_t>(c.projector.schedule.steps)]};
    std::ostringstream os;
    std::string section;
    for (const auto& f : fields(c, sch)) {
        if (f.section != section) {
            if (!section.empty()) os << '\n';
            section = f.section;
            os << '[' << section << "]\n";
        }
        os << f.key << " = " << f.get() << '\n';
    }
    return os.str();
}

}  // namespace mccop
