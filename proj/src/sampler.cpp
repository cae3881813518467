#include "multilink/sampler.hpp"

#include <chrono>
#include <numeric>
#include <sstream>

#include "multilink/csv.hpp"
#include "multilink/log.hpp"
#include "multilink/util.hpp"

namespace multilink {

void GibbsConfig::validate() const {
    if (iterations < 1) throw ConfigError("gibbs: iterations must be >= 1");
    if (burn_in < 0 || burn_in >= iterations)
        throw ConfigError("gibbs: burn-in must be in [0, iterations)");
    if (thin < 1) throw ConfigError("gibbs: thinning must be >= 1");
    if (checkpoint_every < 1) throw ConfigError("gibbs: checkpoint interval must be >= 1");
    if (!(prune_nats > 0.0)) throw ConfigError("gibbs: prune window must be positive");
}

namespace {

void check_model_compat(const ComparisonData& data, const PriorConfig& prior) {
    prior.validate();
    if (prior.K != data.K)
        throw ConfigError("prior and comparison data disagree on the number of files");
    for (int k = 0; k < data.K; ++k)
        if (!data.dup_allowed[k] && prior.duplicates_allowed(k))
            throw ConfigError(
                "file '" + data.file_names[k] +
                "' has no within-file comparisons but the prior allows duplicates in it");
}

}  // namespace

MultifilePartition init_singletons(const ComparisonData& data) {
    return MultifilePartition::singletons(data.file_of, data.K);
}

MultifilePartition init_random_matching(const ComparisonData& data, Rng& rng) {
    const int r = static_cast<int>(data.file_of.size());
    std::vector<std::vector<std::vector<int>>> by_block_file(
        data.num_blocks, std::vector<std::vector<int>>(data.K));
    for (int i = 0; i < r; ++i)
        by_block_file[data.block_of[i]][data.file_of[i]].push_back(i);

    std::vector<int> labels(r, -1);
    int next = 0;
    for (int b = 0; b < data.num_blocks; ++b) {
        auto& files = by_block_file[b];
        std::vector<int> present;
        for (int k = 0; k < data.K; ++k)
            if (!files[k].empty()) present.push_back(k);
        std::size_t zip = 0;
        if (present.size() >= 2) {
            std::size_t m = files[present[0]].size();
            for (int k : present) {
                rng.shuffle(files[k]);
                m = std::min(m, files[k].size());
            }
            zip = rng.uniform_below(m + 1);
        }
        for (std::size_t t = 0; t < zip; ++t) {
            for (int k : present) labels[files[k][t]] = next;
            ++next;
        }
        for (int k : present)
            for (std::size_t t = zip; t < files[k].size(); ++t)
                labels[files[k][t]] = next++;
    }
    return MultifilePartition::from_labels(data.file_of, data.K, labels);
}

GibbsSampler::GibbsSampler(const ComparisonData& data, const PriorConfig& prior,
                           const GibbsConfig& cfg)
    : data_(data),
      prior_(prior),
      cfg_(cfg),
      rng_(cfg.seed),
      part_(data.file_of, data.K) {
    cfg_.validate();
    check_model_compat(data, prior);
    if (cfg_.hyper.mu.empty()) cfg_.hyper = LikelihoodHyper::unit(data.num_levels);
    cfg_.hyper.validate(data.num_levels);
    const int r = part_.num_records();
    scratch_lr_.assign(r, 0.0);
    scratch_pair_.assign(r, -1);
    scratch_stamp_.assign(r, 0);
    order_.resize(r);
    std::iota(order_.begin(), order_.end(), 0);
}

void GibbsSampler::rebuild_block_lists() {
    block_clusters_.assign(data_.num_blocks, {});
    cluster_pos_.assign(part_.num_records() + 1, -1);
    for (int cid : part_.active_cluster_ids()) {
        const int b = data_.block_of[part_.cluster(cid).members.front()];
        block_insert(cid, b);
    }
}

void GibbsSampler::block_insert(int cid, int block) {
    if (cid >= static_cast<int>(cluster_pos_.size())) cluster_pos_.resize(cid + 1, -1);
    cluster_pos_[cid] = static_cast<int>(block_clusters_[block].size());
    block_clusters_[block].push_back(cid);
}

void GibbsSampler::block_erase(int cid, int block) {
    auto& list = block_clusters_[block];
    const int pos = cluster_pos_[cid];
    list[pos] = list.back();
    cluster_pos_[list[pos]] = pos;
    list.pop_back();
    cluster_pos_[cid] = -1;
}

void GibbsSampler::init() {
    part_ = (cfg_.init == InitStrategy::singletons)
                ? init_singletons(data_)
                : init_random_matching(data_, rng_);
    // Every cluster must live inside one candidate block.
    for (int cid : part_.active_cluster_ids()) {
        const auto& members = part_.cluster(cid).members;
        for (int rec : members)
            if (data_.block_of[rec] != data_.block_of[members.front()])
                throw std::logic_error("initial cluster crosses candidate blocks");
    }
    counts_ = count_summaries(data_, part_);
    rebuild_block_lists();
    iter_ = 0;
}

void GibbsSampler::attach_counts(int rec, int cid, int dir) {
    for (int other : part_.cluster(cid).members) {
        if (other == rec) continue;
        if (scratch_stamp_[other] != stamp_)
            throw std::logic_error("cluster member is not a candidate of the record");
        const int p = scratch_pair_[other];
        const std::uint8_t* lv = data_.pair_levels(p);
        const std::int64_t* off =
            &data_.cell_offset[std::size_t(data_.pair_fp[p]) * data_.F];
        for (int f = 0; f < data_.F; ++f)
            if (lv[f] != kLevelUnobserved) counts_.a[off[f] + lv[f]] += dir;
    }
}

void GibbsSampler::step_record(int rec) {
    ++stamp_;
    for (std::int32_t t = data_.adj_offset[rec]; t < data_.adj_offset[rec + 1]; ++t) {
        const int other = data_.adj_other[t];
        scratch_lr_[other] = pair_loglik_ratio(data_, params_, data_.adj_pair[t]);
        scratch_pair_[other] = data_.adj_pair[t];
        scratch_stamp_[other] = stamp_;
    }

    const int block = data_.block_of[rec];
    const int old_cid = part_.cluster_of(rec);
    attach_counts(rec, old_cid, -1);
    part_.remove_record(rec);
    if (!part_.cluster(old_cid).active()) block_erase(old_cid, block);

    const auto& targets = block_clusters_[block];
    AssignmentWeights w = assignment_log_weights(part_, rec, targets, prior_);
    logw_.assign(targets.size() + 1, kNegInf);
    logw_[0] = w.new_logw;
    for (std::size_t t = 0; t < targets.size(); ++t) {
        if (w.cluster_logw[t] == kNegInf) continue;
        double lr = 0.0;
        for (int other : part_.cluster(targets[t]).members) {
            if (scratch_stamp_[other] != stamp_)
                throw std::logic_error("candidate cluster outside record's block");
            lr += scratch_lr_[other];
        }
        logw_[t + 1] = w.cluster_logw[t] + lr;
    }

    const std::size_t pick = rng_.categorical_log(logw_, cfg_.prune_nats);
    if (pick == 0) {
        const int cid = part_.add_record(rec, MultifilePartition::kNewCluster);
        block_insert(cid, block);
    } else {
        const int cid = targets[pick - 1];
        part_.add_record(rec, cid);
        attach_counts(rec, cid, +1);
    }
}

void GibbsSampler::iteration() {
    params_ = sample_params(data_, counts_, cfg_.hyper, cfg_.single_model, rng_);
    if (cfg_.sweep == SweepOrder::random_scan) rng_.shuffle(order_);
    for (int rec : order_) step_record(rec);
    ++iter_;
    if (iter_ % cfg_.checkpoint_every == 0) verify_counts();
}

void GibbsSampler::verify_counts() const {
    part_.check_consistency();
    CountSummaries fresh = count_summaries(data_, part_);
    if (fresh.a != counts_.a)
        throw std::logic_error("incremental comparison counts diverged from recount");
}

PosteriorSamples run_chain(const ComparisonData& data, const PriorConfig& prior,
                           const GibbsConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    GibbsSampler sampler(data, prior, cfg);
    sampler.init();

    PosteriorSamples out;
    out.num_records = static_cast<int>(data.file_of.size());
    out.num_files = data.K;
    out.iterations = cfg.iterations;
    out.burn_in = cfg.burn_in;
    out.thin = cfg.thin;
    out.seed = cfg.seed;
    out.n_trace.reserve(cfg.iterations);

    for (int t = 1; t <= cfg.iterations; ++t) {
        sampler.iteration();
        out.n_trace.push_back(sampler.partition().num_clusters());
        if (t > cfg.burn_in && (t - cfg.burn_in - 1) % cfg.thin == 0)
            out.labels.push_back(sampler.partition().canonical_labels());
    }
    out.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    mlog::info("chain finished: " + std::to_string(cfg.iterations) + " iterations, " +
               std::to_string(out.num_stored()) + " stored samples, " +
               std::to_string(out.wall_seconds) + "s");
    return out;
}

void write_samples(const PosteriorSamples& samples, const std::string& path) {
    std::string out;
    for (const auto& row : samples.labels) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ' ';
            out += std::to_string(row[i] + 1);
        }
        out += '\n';
    }
    write_text_file(path, out);
}

void write_trace(const PosteriorSamples& samples, const std::string& path) {
    std::string out;
    for (auto n : samples.n_trace) {
        out += std::to_string(n);
        out += '\n';
    }
    write_text_file(path, out);
}

std::vector<std::vector<std::int32_t>> read_samples(const std::string& path) {
    std::vector<std::vector<std::int32_t>> rows;
    std::istringstream in(read_text_file(path));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<std::int32_t> row;
        long v;
        while (ls >> v) row.push_back(static_cast<std::int32_t>(v - 1));
        if (!rows.empty() && rows.front().size() != row.size())
            throw DataError(path + ": ragged samples file");
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace multilink
