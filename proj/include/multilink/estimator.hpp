#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "multilink/comparison.hpp"
#include "multilink/sampler.hpp"

namespace multilink {

// Decision code for a record set aside for manual review.
inline constexpr std::int32_t kAbstain = -1;

// Per-record additive losses: abstaining costs `abstain`; a correct record
// (its links agree with the truth against every non-abstained record) costs
// 0; otherwise one of: false non-match (unlinked but truly linked), false
// match type 1 (linked but truly singleton), false match type 2 (linked but
// missing at least one true link).  Truth-side events are always evaluated
// against non-abstained records only, which keeps the branches mutually
// exclusive.  abstain = +inf disables abstention (full estimate).
struct LossSpec {
    double fnm = 1.0;
    double fm1 = 1.0;
    double fm2 = 2.0;
    double abstain = std::numeric_limits<double>::infinity();

    bool partial() const { return std::isfinite(abstain); }
    void validate() const;
};

// Posterior co-clustering frequency for every candidate pair.
struct PairwiseProbs {
    std::vector<double> prob;  // aligned with ComparisonData pair order
};

PairwiseProbs pairwise_probs(const std::vector<std::vector<std::int32_t>>& samples,
                             const ComparisonData& data);

// Connected components of the graph keeping edges with prob strictly above
// delta; ids dense, numbered by smallest member.
std::vector<int> link_components(const ComparisonData& data,
                                 const PairwiseProbs& probs, double delta);

// Smallest threshold (among attained probability values, plus 0) whose
// components all have at most `max_component` records.  Always solvable: at
// the maximum probability the graph is empty.
double select_delta(const ComparisonData& data, const PairwiseProbs& probs,
                    int max_component);

// Loss of a decision vector against one true partition (labels; decisions
// use kAbstain for abstention).
double loss(const std::vector<std::int32_t>& truth,
            const std::vector<std::int32_t>& decisions, const LossSpec& spec);

// Posterior expected loss with probabilities replaced by sample frequencies.
double expected_loss(const std::vector<std::vector<std::int32_t>>& samples,
                     const std::vector<std::int32_t>& decisions,
                     const LossSpec& spec);

// Same, restricted to a record subset: only those records are charged and
// only they provide linkage context.
double expected_loss_on(const std::vector<std::vector<std::int32_t>>& samples,
                        std::span<const int> records,
                        const std::vector<std::int32_t>& decisions,
                        const LossSpec& spec);

struct BayesOptions {
    double fixed_delta = -1.0;        // < 0: pick automatically
    int max_component_full = 50;      // component cap for full estimates
    int max_component_partial = 12;   // component cap for partial estimates
    int exhaustive_abstain_limit = 12;  // greedy abstention above this size
};

struct LinkageEstimate {
    std::vector<std::int32_t> decision;  // canonical labels; kAbstain = review
    double delta = 0.0;
    double expected_loss_value = 0.0;
    std::vector<int> component_of;
    int num_components = 0;
};

// Approximate Bayes estimate: threshold the pairwise probabilities, split
// into components, and minimise the component-restricted expected loss over
// the stored samples' restrictions (earliest-iteration tie-break).  Partial
// estimates also search abstain subsets: exhaustively (subsets by increasing
// size, lexicographic within size, first minimiser wins) up to the size
// limit, greedily (abstain the costliest record while it improves) beyond.
LinkageEstimate bayes_estimate(const std::vector<std::vector<std::int32_t>>& samples,
                               const ComparisonData& data, const LossSpec& spec,
                               const BayesOptions& options = {});

// estimate artifact: CSV with one row per record (global index, file name,
// decision label or "ABSTAIN").
void write_estimate(const LinkageEstimate& est, const ComparisonData& data,
                    const std::string& path);
std::vector<std::int32_t> read_estimate(const std::string& path);

}  // namespace multilink
