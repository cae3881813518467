#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "multilink/partition.hpp"
#include "multilink/rng.hpp"

namespace multilink {

// Prior on the number of clusters n, tabulated over {1..upper} (normalised).
// The Gibbs new-cluster branch uses the exact probability ratio, which is
// truncation-invariant away from the boundary and 0 at n = upper.
class ClusterCountPrior {
  public:
    static ClusterCountPrior uniform(int upper);
    // pmf(n) proportional to Gamma(n+a)/(n! Gamma(a)) (1-q)^a q^n on {1..upper}.
    static ClusterCountPrior negative_binomial(double a, double q, int upper);
    static ClusterCountPrior from_pmf(const std::vector<double>& pmf_from_1);

    int upper() const { return static_cast<int>(log_pmf_.size()); }
    double log_pmf(int n) const;
    // log P(n+1) - log P(n); -inf at the truncation boundary.
    double log_ratio_up(int n) const;
    int sample(Rng& rng) const;

  private:
    std::vector<double> log_pmf_;  // index n-1
    std::vector<double> cdf_;
    void normalise();
};

// Moment-matched negative-binomial parameters (a, q) giving
// E[n] = sd(n) = r/2 for r records; requires r > 2.
std::pair<double, double> negbin_params(int num_records);

// Within-file cluster-size prior p_k on {1..max_size}; duplicate-free files
// use the point mass at 1.
class SizePrior {
  public:
    static SizePrior point_mass_one();
    // pmf(d) proportional to lambda^d / d! on {1..max_size}.
    static SizePrior truncated_poisson(double lambda, int max_size);
    static SizePrior from_pmf(const std::vector<double>& pmf_from_1);

    int max_size() const { return static_cast<int>(log_pmf_.size()); }
    bool point_mass() const { return max_size() == 1; }
    double log_pmf(int d) const;
    int sample(Rng& rng) const;

  private:
    std::vector<double> log_pmf_;  // index d-1
    std::vector<double> cdf_;
    void normalise();
};

// Dirichlet concentration over the 2^K - 1 nonempty file patterns.
struct OverlapPrior {
    std::vector<double> alpha;  // size 1<<K; index 0 unused (0)
    double alpha0 = 0.0;        // sum over nonempty patterns

    static OverlapPrior with_constant(int num_files, double value);
    static OverlapPrior flat_cells(int num_files) { return with_constant(num_files, 1.0); }
    // 1/(2^K - 1) per cell: total concentration 1 regardless of K.
    static OverlapPrior sparse_cells(int num_files) {
        return with_constant(num_files, 1.0 / ((1 << num_files) - 1));
    }
    // flat for up to 3 files, sparse beyond.
    static OverlapPrior default_for(int num_files) {
        return num_files <= 3 ? flat_cells(num_files) : sparse_cells(num_files);
    }
    int num_files() const;
    void validate() const;
};

struct PriorConfig {
    int K = 0;
    ClusterCountPrior count = ClusterCountPrior::uniform(1);
    OverlapPrior overlap;
    std::vector<SizePrior> sizes;  // per file
    bool flat = false;  // uniform over the support instead of the structured law

    bool duplicates_allowed(int k) const { return !sizes[k].point_mass(); }
    void validate() const;
};

// Exact log density of the structured prior for a fully-assigned partition:
//   P(n) * [n! G(a0)/G(n+a0)] * prod_h G(n_h+a_h)/G(a_h)
//        * prod_k (1/r'_k!) prod_{c: c_k nonempty} |c_k|! p_k(|c_k|).
// Partitions outside the support give -inf; flat mode gives 0 on the support.
double log_prior_density(const MultifilePartition& part, const PriorConfig& cfg);

// log pmf of the overlap table given its total n (Dirichlet-multinomial).
double log_overlap_table_pmf(std::span<const std::int32_t> table,
                             const OverlapPrior& overlap);

// Number of K-partite matchings of clusters realising an overlap table:
// prod_k n_k! / prod_h n_h!.  Log form for density work, exact decimal string
// (big-integer) for the oracle tests.
double log_count_kpartite(std::span<const std::int32_t> table, int num_files);
std::string count_kpartite_exact(std::span<const std::int32_t> table, int num_files);

// One draw of the overlap table: q ~ Dirichlet(alpha), table ~ Mult(n, q).
std::vector<std::int32_t> sample_overlap_table(int n, const OverlapPrior& overlap,
                                               Rng& rng);

struct PriorDraw {
    MultifilePartition partition;
    std::vector<int> file_sizes;  // r'_k implied by the draw
};

// Generative sampler: n, overlap table, within-file cluster sizes, uniform
// within-file set partitions, then a uniform K-partite matching per cell
// (independent uniform permutations align the per-file cluster lists).
PriorDraw sample_prior(const PriorConfig& cfg, Rng& rng);

// Gibbs reassignment weights for `rec` given the partition with it removed:
// one weight per allowed target cluster plus the new-cluster branch.
// Forbidden targets (size bound, duplicate-free clash, count boundary) get
// -inf.  In flat mode every allowed target has equal weight.
struct AssignmentWeights {
    std::vector<double> cluster_logw;  // aligned with `targets`
    double new_logw = 0.0;
};
AssignmentWeights assignment_log_weights(const MultifilePartition& c_minus,
                                         int rec, std::span<const int> targets,
                                         const PriorConfig& cfg);

}  // namespace multilink
