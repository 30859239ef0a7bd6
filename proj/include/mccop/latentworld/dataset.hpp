#pragma once

#include "mccop/latentworld/world.hpp"

#include <string>
#include <vector>

namespace mccop {

enum class Split { train, val, test };
enum class Binarization { otsu, tercile };

const char* split_name(Split s);
Split parse_split(const std::string& s);
const char* binarization_name(Binarization b);
Binarization parse_binarization(const std::string& s);

struct DatasetItem {
    std::size_t id = 0;          // position in the kept item list
    std::size_t draw = 0;        // index among generated sequences; keys the jitter substream
    ResidueSequence sequence;
    double raw_score = 0.0;
    int label = 0;
    bool label_flipped = false;  // label noise applied
    Split split = Split::train;
    Embedding embedding;
};

struct LabeledDataset {
    WorldConfig world;
    Binarization mode = Binarization::otsu;
    std::uint64_t seed = 0;
    std::size_t generated = 0;  // sequences drawn before binarization
    double threshold = 0.0;     // otsu: upper class is score >= threshold
    double low_cut = 0.0;       // tercile cuts
    double high_cut = 0.0;
    std::vector<DatasetItem> items;

    std::vector<const DatasetItem*> split(Split s) const;
    std::size_t count(Split s) const;
    std::size_t count(Split s, int label) const;
};

/// Draw `n` sequences, score, binarize, encode with per-item jitter
/// substreams and split 80/10/10 stratified by label. Fully determined by
/// (world, n, mode, seed). Resamples up to 5 times when a class or split
/// ends up empty, then throws DataError.
LabeledDataset make_dataset(const WorldConfig& world, const Codebook& codebook, std::size_t n, Binarization mode,
                            std::uint64_t seed);

/// Jittered embedding of a dataset item, regenerated from (seed, draw).
Embedding item_embedding(const WorldConfig& world, const Codebook& codebook, std::uint64_t seed, std::size_t draw,
                         const ResidueSequence& seq);

// Persistence: <dir>/manifest.json (world, seed, mode, cuts, split counts)
// and <dir>/records.csv (id,draw,sequence,raw_score,label,flipped,split).
// Embeddings are regenerated on load.
void save_dataset(const LabeledDataset& data, const std::string& dir);
LabeledDataset load_dataset(const std::string& dir);

}  // namespace mccop
