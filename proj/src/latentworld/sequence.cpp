#include "mccop/latentworld/sequence.hpp"

#include "mccop/types.hpp"

namespace mccop {

ResidueSequence::ResidueSequence(std::string residues) : residues_(std::move(residues)) {
    if (residues_.empty()) throw DataError("sequence: empty");
    for (char c : residues_)
        if (residue_index(c) < 0) throw DataError(std::string("sequence: invalid residue '") + c + "'");
}

ResidueSequence ResidueSequence::with(std::size_t i, char residue) const {
    ResidueSequence out = *this;
    if (i >= out.residues_.size()) throw DataError("sequence: position out of range");
    if (residue_index(residue) < 0) throw DataError(std::string("sequence: invalid residue '") + residue + "'");
    out.residues_[i] = residue;
    return out;
}

std::vector<std::size_t> differing_positions(const ResidueSequence& a, const ResidueSequence& b) {
    if (a.size() != b.size()) throw DataError("hamming: sequences differ in length");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) out.push_back(i);
    return out;
}

std::size_t hamming(const ResidueSequence& a, const ResidueSequence& b) { return differing_positions(a, b).size(); }

}  // namespace mccop
