#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "multilink/likelihood.hpp"
#include "multilink/prior.hpp"

namespace multilink {

enum class InitStrategy { singletons, random_matching };
enum class SweepOrder { ascending, random_scan };

struct GibbsConfig {
    int iterations = 1000;
    int burn_in = 100;
    int thin = 1;
    std::uint64_t seed = 0;
    InitStrategy init = InitStrategy::singletons;
    SweepOrder sweep = SweepOrder::ascending;
    bool single_model = false;
    LikelihoodHyper hyper;       // empty -> unit hyperparameters
    int checkpoint_every = 100;  // full-recount consistency checks
    double prune_nats = 50.0;    // drop targets this far below the max weight

    void validate() const;
};

struct PosteriorSamples {
    int num_records = 0;
    int num_files = 0;
    int iterations = 0;
    int burn_in = 0;
    int thin = 1;
    std::uint64_t seed = 0;
    std::vector<std::vector<std::int32_t>> labels;  // stored canonical labels
    std::vector<std::int32_t> n_trace;              // cluster count, every iteration
    double wall_seconds = 0.0;

    int num_stored() const { return static_cast<int>(labels.size()); }
};

// One Gibbs chain over (partition, level parameters).  Each iteration draws
// the parameters from their full conditional once, then reassigns every
// record in sweep order among: a new cluster, or any cluster inside the
// record's candidate block.
class GibbsSampler {
  public:
    GibbsSampler(const ComparisonData& data, const PriorConfig& prior,
                 const GibbsConfig& cfg);

    void init();       // apply the configured initialisation strategy
    void iteration();  // one parameter draw + full sweep

    const MultifilePartition& partition() const { return part_; }
    const CountSummaries& counts() const { return counts_; }
    int iterations_done() const { return iter_; }

    // Recounts everything from scratch and throws logic_error on divergence.
    void verify_counts() const;

  private:
    const ComparisonData& data_;
    const PriorConfig& prior_;
    GibbsConfig cfg_;
    Rng rng_;
    MultifilePartition part_;
    CountSummaries counts_;
    LikelihoodParams params_;
    int iter_ = 0;

    std::vector<std::vector<int>> block_clusters_;
    std::vector<int> cluster_pos_;  // position of cid in its block list

    std::vector<double> scratch_lr_;
    std::vector<std::int32_t> scratch_pair_;
    std::vector<std::uint32_t> scratch_stamp_;
    std::uint32_t stamp_ = 0;
    std::vector<double> logw_;
    std::vector<int> order_;

    void attach_counts(int rec, int cid, int dir);
    void block_insert(int cid, int block);
    void block_erase(int cid, int block);
    void rebuild_block_lists();
    void step_record(int rec);
};

MultifilePartition init_singletons(const ComparisonData& data);
// Within each candidate block, zips an equal random number of records from
// every file present into full-overlap clusters; the rest stay singletons.
MultifilePartition init_random_matching(const ComparisonData& data, Rng& rng);

PosteriorSamples run_chain(const ComparisonData& data, const PriorConfig& prior,
                           const GibbsConfig& cfg);

// samples file: one iteration per line, r space-separated 1-based canonical
// labels; trace file: one cluster count per line.
void write_samples(const PosteriorSamples& samples, const std::string& path);
void write_trace(const PosteriorSamples& samples, const std::string& path);
std::vector<std::vector<std::int32_t>> read_samples(const std::string& path);

}  // namespace multilink
