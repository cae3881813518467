#pragma once

#include <cstdint>
#include <vector>

#include "multilink/comparison.hpp"
#include "multilink/partition.hpp"
#include "multilink/rng.hpp"

namespace multilink {

// Dirichlet hyperparameters for the level distributions, per field (shared
// across file pairs): mu for coreferent pairs (m), nu for non-coreferent (u).
struct LikelihoodHyper {
    std::vector<std::vector<double>> mu;  // [field][level]
    std::vector<std::vector<double>> nu;

    static LikelihoodHyper unit(const std::vector<int>& num_levels);
    void validate(const std::vector<int>& num_levels) const;
};

// Observed-level counts among coreferent candidate pairs, flattened with the
// same (file pair, field, level) offsets as ComparisonData.totals.  The
// non-coreferent counts are data.totals - a: pairs excluded by indexing are
// never coreferent, so they sit in the b term permanently.
struct CountSummaries {
    std::vector<std::int64_t> a;

    std::int64_t b(const ComparisonData& data, std::size_t flat) const {
        return data.totals[flat] - a[flat];
    }
};

CountSummaries count_summaries(const ComparisonData& data,
                               const MultifilePartition& part);

// Level log-probabilities, flattened like ComparisonData.totals.
struct LikelihoodParams {
    std::vector<double> log_m, log_u;
    std::vector<double> log_ratio;  // log_m - log_u, for the Gibbs inner loop
};

// Full-conditional draw: m ~ Dir(a + mu), u ~ Dir(b + nu) per (file pair,
// field).  With `single_model` the counts are pooled across file pairs and
// one draw per field is broadcast to every pair.
LikelihoodParams sample_params(const ComparisonData& data,
                               const CountSummaries& counts,
                               const LikelihoodHyper& hyper, bool single_model,
                               Rng& rng);

// log prod m^a u^b over all cells.
double log_likelihood(const ComparisonData& data, const CountSummaries& counts,
                      const LikelihoodParams& params);

// Sum over observed fields of log(m/u) at the pair's levels.
double pair_loglik_ratio(const ComparisonData& data,
                         const LikelihoodParams& params, int pair_idx);

// Parameters integrated out analytically:
// sum over cells of log B(a+mu) - log B(mu) + log B(b+nu) - log B(nu).
double integrated_log_marginal(const ComparisonData& data,
                               const CountSummaries& counts,
                               const LikelihoodHyper& hyper,
                               bool single_model = false);

}  // namespace multilink
