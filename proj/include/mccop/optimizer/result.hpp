#pragma once

#include "mccop/latentworld/sequence.hpp"
#include "mccop/types.hpp"

#include <chrono>
#include <string>
#include <vector>

namespace mccop {

/// Wall-clock seconds per phase. For discrete baselines `reencode` covers
/// encoding a candidate plus scoring it.
struct PhaseTimes {
    double gradient = 0.0;
    double projection = 0.0;
    double reencode = 0.0;
    double other = 0.0;

    double total() const { return gradient + projection + reencode + other; }
};

/// Shared outcome of every counterfactual method.
struct CounterfactualResult {
    std::string method;
    Embedding final_embedding;  // empty for discrete methods
    ResidueSequence original;
    ResidueSequence decoded;
    bool success = false;      // confidence >= tau and decoded != original
    bool adversarial = false;  // confidence >= tau reached only with decoded == original
    int steps_used = 0;
    std::vector<double> confidence_trace;  // steps_used + 1 entries, entry 0 = start
    std::size_t edit_distance = 0;
    double final_confidence = 0.0;
    double duration_s = 0.0;
    PhaseTimes phases;
    std::vector<std::size_t> mutated_positions;
    std::vector<bool> mask_union;  // rows selected at any step (continuous methods)
    std::size_t leakage = 0;       // mutated positions outside mask_union
};

/// Accumulates wall time into one PhaseTimes slot per scope.
class PhaseTimer {
public:
    explicit PhaseTimer(double& slot) : slot_(slot), start_(std::chrono::steady_clock::now()) {}
    ~PhaseTimer() {
        slot_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
    PhaseTimer(const PhaseTimer&) = delete;
    PhaseTimer& operator=(const PhaseTimer&) = delete;

private:
    double& slot_;
    std::chrono::steady_clock::time_point start_;
};

/// Fills decoded-derived fields (edit distance, mutated positions, leakage).
void finalize_result(CounterfactualResult& r);

}  // namespace mccop
