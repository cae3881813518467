#pragma once

// Declarative run configuration: one JSON document describes a whole
// experiment (input files, comparators, candidate policy, prior, chain,
// loss, simulation scenario), and every subcommand consumes its slice.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "multilink/comparison.hpp"
#include "multilink/datastore.hpp"
#include "multilink/estimator.hpp"
#include "multilink/prior.hpp"
#include "multilink/sampler.hpp"
#include "multilink/simlab.hpp"

namespace multilink {

enum class CandidateMethod { all_pairs, block, indexing };

struct CandidateSettings {
    CandidateMethod method = CandidateMethod::all_pairs;
    std::vector<std::string> block_fields;                 // method = block
    std::vector<std::pair<std::string, int>> thresholds;   // method = indexing
};

struct PriorSettings {
    enum class Count { uniform, negative_binomial, pmf };
    enum class Alpha { preset, flat_cells, sparse_cells, explicit_values };

    Count count = Count::uniform;
    std::vector<double> count_pmf;     // count = pmf; values for n = 1,2,...
    std::optional<int> count_upper;    // default: the record count

    Alpha alpha = Alpha::preset;
    // explicit cells keyed by inclusion pattern, one 0/1 character per file
    // in input order ("110" = in the first two files).
    std::vector<std::pair<std::string, double>> alpha_cells;

    struct Size {
        enum class Kind { point, poisson, pmf };
        Kind kind = Kind::point;
        double mean = 1.0;  // poisson
        int max = 10;       // poisson truncation
        std::vector<double> pmf;
    };
    std::vector<Size> sizes;  // empty: derived from duplicate flags; one: broadcast

    bool flat = false;  // uniform prior over the support instead

    PriorConfig build(int num_files, int num_records,
                      const std::vector<bool>& duplicates_allowed) const;
};

struct LikelihoodSettings {
    bool single_model = false;
    double mu = 1.0;  // Dirichlet concentration, broadcast over levels
    double nu = 1.0;

    LikelihoodHyper build(const std::vector<int>& num_levels) const;
};

struct EstimateSettings {
    std::optional<double> delta;  // absent: smallest feasible attained value
    BayesOptions options;
};

struct SimulateSettings {
    OverlapScenario scenario;
    int entities = 100;
    int errors_per_record = 1;
    std::string tables_dir;  // empty: MULTILINK_DATA, then the built-in path
};

struct ReplicateSettings {
    int count = 20;
    int workers = 1;
    std::vector<int> error_levels;  // empty: the simulate setting only
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::string out = "out";

    std::vector<FileSpec> files;
    Schema schema;  // no fields: fall back to the simulation layout
    std::vector<std::pair<std::string, ComparatorSpec>> comparators;  // by name
    CandidateSettings candidates;
    PriorSettings prior;
    LikelihoodSettings likelihood;
    GibbsConfig gibbs;
    LossSpec loss;  // abstain defaults to infinity (full estimates)
    EstimateSettings estimate;
    std::optional<SimulateSettings> simulate;
    std::optional<ReplicateSettings> replicate;
    std::string truth_path;  // evaluate; empty: <out>/truth.csv

    static RunConfig load(const std::string& path);
    static RunConfig parse(const std::string& text, const std::string& origin);

    // Schema/file/comparator slices with the simulation-layout fallback
    // applied; throw ConfigError when a command lacks its inputs.
    Schema effective_schema() const;
    std::vector<FileSpec> effective_files() const;
    std::vector<ComparatorSpec> effective_comparators(const Schema& schema) const;
};

// Candidate policy applied to loaded records; `fold_excluded` out-param keeps
// indexing (folded) and blocking (dropped) semantics apart.
CandidateSet build_candidate_set(const FileCollection& fc, const Schema& schema,
                                 const std::vector<ComparatorSpec>& comparators,
                                 const CandidateSettings& settings,
                                 bool& fold_excluded);

}  // namespace multilink
