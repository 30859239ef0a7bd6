#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mccop {

/// Standard 20-letter amino-acid alphabet, in the order used as codeword index.
inline constexpr std::string_view kAlphabet = "ACDEFGHIKLMNPQRSTVWY";

/// Index of `residue` in kAlphabet, or -1.
inline int residue_index(char residue) {
    const auto pos = kAlphabet.find(residue);
    return pos == std::string_view::npos ? -1 : static_cast<int>(pos);
}

/// Non-empty string over the 20-letter alphabet.
class ResidueSequence {
public:
    ResidueSequence() = default;
    explicit ResidueSequence(std::string residues);

    const std::string& str() const { return residues_; }
    std::size_t size() const { return residues_.size(); }
    char operator[](std::size_t i) const { return residues_[i]; }

    /// Copy with position i set to `residue`.
    ResidueSequence with(std::size_t i, char residue) const;

    friend bool operator==(const ResidueSequence&, const ResidueSequence&) = default;
    friend auto operator<=>(const ResidueSequence&, const ResidueSequence&) = default;

private:
    std::string residues_;
};

/// Number of differing positions. Throws DataError on a length mismatch.
std::size_t hamming(const ResidueSequence& a, const ResidueSequence& b);

/// Positions where a and b differ, ascending.
std::vector<std::size_t> differing_positions(const ResidueSequence& a, const ResidueSequence& b);

}  // namespace mccop
