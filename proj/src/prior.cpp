#include "multilink/prior.hpp"

#include <algorithm>
#include <cmath>

#include <boost/multiprecision/cpp_int.hpp>

#include "multilink/util.hpp"

namespace multilink {

// ----------------------------------------------------- ClusterCountPrior ---

void ClusterCountPrior::normalise() {
    double lz = log_sum_exp(log_pmf_);
    if (lz == kNegInf) throw ConfigError("cluster-count prior has no mass");
    cdf_.clear();
    double acc = 0.0;
    for (double& lp : log_pmf_) {
        lp -= lz;
        acc += std::exp(lp);
        cdf_.push_back(acc);
    }
    cdf_.back() = 1.0;
}

ClusterCountPrior ClusterCountPrior::uniform(int upper) {
    if (upper < 1) throw ConfigError("cluster-count upper bound must be >= 1");
    ClusterCountPrior p;
    p.log_pmf_.assign(upper, 0.0);
    p.normalise();
    return p;
}

ClusterCountPrior ClusterCountPrior::negative_binomial(double a, double q,
                                                       int upper) {
    if (!(a > 0.0) || !(q > 0.0 && q < 1.0))
        throw ConfigError("negative-binomial needs a > 0, 0 < q < 1");
    if (upper < 1) throw ConfigError("cluster-count upper bound must be >= 1");
    ClusterCountPrior p;
    p.log_pmf_.resize(upper);
    for (int n = 1; n <= upper; ++n)
        p.log_pmf_[n - 1] = std::lgamma(n + a) - log_factorial(n) - std::lgamma(a) +
                            a * std::log1p(-q) + n * std::log(q);
    p.normalise();
    return p;
}

ClusterCountPrior ClusterCountPrior::from_pmf(const std::vector<double>& pmf) {
    if (pmf.empty()) throw ConfigError("cluster-count pmf is empty");
    ClusterCountPrior p;
    p.log_pmf_.resize(pmf.size());
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        if (pmf[i] < 0.0) throw ConfigError("cluster-count pmf has negative mass");
        p.log_pmf_[i] = pmf[i] > 0.0 ? std::log(pmf[i]) : kNegInf;
    }
    p.normalise();
    return p;
}

double ClusterCountPrior::log_pmf(int n) const {
    if (n < 1 || n > upper()) return kNegInf;
    return log_pmf_[n - 1];
}

double ClusterCountPrior::log_ratio_up(int n) const {
    if (n < 0) throw std::invalid_argument("log_ratio_up: negative n");
    if (n == 0) return log_pmf(1) == kNegInf ? kNegInf : 0.0;  // see below
    if (n >= upper()) return kNegInf;
    if (log_pmf_[n - 1] == kNegInf) return kNegInf;
    return log_pmf_[n] - log_pmf_[n - 1];
}

int ClusterCountPrior::sample(Rng& rng) const {
    double u = rng.uniform01();
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    return static_cast<int>(it - cdf_.begin()) + 1;
}

std::pair<double, double> negbin_params(int num_records) {
    if (num_records <= 2)
        throw ConfigError("moment-matched negative binomial needs more than 2 records");
    double r = num_records;
    return {r / (r - 2.0), 1.0 - 2.0 / r};
}

// --------------------------------------------------------------- SizePrior -

void SizePrior::normalise() {
    double lz = log_sum_exp(log_pmf_);
    if (lz == kNegInf) throw ConfigError("cluster-size prior has no mass");
    cdf_.clear();
    double acc = 0.0;
    for (double& lp : log_pmf_) {
        lp -= lz;
        acc += std::exp(lp);
        cdf_.push_back(acc);
    }
    cdf_.back() = 1.0;
}

SizePrior SizePrior::point_mass_one() {
    SizePrior p;
    p.log_pmf_ = {0.0};
    p.cdf_ = {1.0};
    return p;
}

SizePrior SizePrior::truncated_poisson(double lambda, int max_size) {
    if (!(lambda > 0.0)) throw ConfigError("size-prior mean must be positive");
    if (max_size < 1) throw ConfigError("size-prior max size must be >= 1");
    SizePrior p;
    p.log_pmf_.resize(max_size);
    for (int d = 1; d <= max_size; ++d)
        p.log_pmf_[d - 1] = d * std::log(lambda) - log_factorial(d);
    p.normalise();
    return p;
}

SizePrior SizePrior::from_pmf(const std::vector<double>& pmf) {
    if (pmf.empty()) throw ConfigError("cluster-size pmf is empty");
    SizePrior p;
    p.log_pmf_.resize(pmf.size());
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        if (pmf[i] < 0.0) throw ConfigError("cluster-size pmf has negative mass");
        p.log_pmf_[i] = pmf[i] > 0.0 ? std::log(pmf[i]) : kNegInf;
    }
    p.normalise();
    return p;
}

double SizePrior::log_pmf(int d) const {
    if (d < 1 || d > max_size()) return kNegInf;
    return log_pmf_[d - 1];
}

int SizePrior::sample(Rng& rng) const {
    double u = rng.uniform01();
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    return static_cast<int>(it - cdf_.begin()) + 1;
}

// ------------------------------------------------------------ OverlapPrior -

OverlapPrior OverlapPrior::with_constant(int num_files, double value) {
    if (num_files < 1 || num_files > 16)
        throw ConfigError("number of files must be in 1..16");
    if (!(value > 0.0)) throw ConfigError("overlap concentration must be positive");
    OverlapPrior o;
    o.alpha.assign(std::size_t(1) << num_files, value);
    o.alpha[0] = 0.0;
    o.alpha0 = value * ((std::size_t(1) << num_files) - 1);
    return o;
}

int OverlapPrior::num_files() const {
    int K = 0;
    while ((std::size_t(1) << K) < alpha.size()) ++K;
    return K;
}

void OverlapPrior::validate() const {
    if (alpha.size() < 2 || (alpha.size() & (alpha.size() - 1)) != 0)
        throw ConfigError("overlap concentration table must have 2^K entries");
    double sum = 0.0;
    for (std::size_t h = 1; h < alpha.size(); ++h) {
        if (!(alpha[h] > 0.0))
            throw ConfigError("overlap concentrations must be positive");
        sum += alpha[h];
    }
    if (std::abs(sum - alpha0) > 1e-9 * std::max(1.0, std::abs(sum)))
        throw ConfigError("overlap concentration total out of sync");
}

void PriorConfig::validate() const {
    if (K < 1 || K > 16) throw ConfigError("number of files must be in 1..16");
    if (static_cast<int>(sizes.size()) != K)
        throw ConfigError("need one cluster-size prior per file");
    if (static_cast<int>(overlap.alpha.size()) != (1 << K))
        throw ConfigError("overlap concentration table must have 2^K entries");
    overlap.validate();
}

// ----------------------------------------------------------------- density -

namespace {

bool in_support(const MultifilePartition& part, const PriorConfig& cfg) {
    for (int cid : part.active_cluster_ids()) {
        const Cluster& c = part.cluster(cid);
        for (int k = 0; k < cfg.K; ++k)
            if (c.per_file[k] > cfg.sizes[k].max_size()) return false;
    }
    return true;
}

}  // namespace

double log_prior_density(const MultifilePartition& part, const PriorConfig& cfg) {
    cfg.validate();
    if (part.num_files() != cfg.K)
        throw std::invalid_argument("prior/partition file count mismatch");
    if (part.num_assigned() != part.num_records())
        throw std::invalid_argument("log_prior_density: unassigned records");
    if (cfg.flat) return in_support(part, cfg) ? 0.0 : kNegInf;

    const int n = part.num_clusters();
    double lp = cfg.count.log_pmf(n);
    if (lp == kNegInf) return kNegInf;

    lp += log_factorial(n) + std::lgamma(cfg.overlap.alpha0) -
          std::lgamma(n + cfg.overlap.alpha0);
    const auto& table = part.overlap_table();
    for (std::size_t h = 1; h < table.size(); ++h)
        if (table[h] > 0)
            lp += std::lgamma(table[h] + cfg.overlap.alpha[h]) -
                  std::lgamma(cfg.overlap.alpha[h]);

    std::vector<int> records_per_file(cfg.K, 0);
    for (int i = 0; i < part.num_records(); ++i) ++records_per_file[part.file_of(i)];
    for (int k = 0; k < cfg.K; ++k) lp -= log_factorial(records_per_file[k]);

    for (int cid : part.active_cluster_ids()) {
        const Cluster& c = part.cluster(cid);
        for (int k = 0; k < cfg.K; ++k) {
            int d = c.per_file[k];
            if (d == 0) continue;
            double lpk = cfg.sizes[k].log_pmf(d);
            if (lpk == kNegInf) return kNegInf;
            lp += log_factorial(d) + lpk;
        }
    }
    return lp;
}

double log_overlap_table_pmf(std::span<const std::int32_t> table,
                             const OverlapPrior& overlap) {
    int n = 0;
    for (std::size_t h = 1; h < table.size(); ++h) n += table[h];
    double lp = log_factorial(n) + std::lgamma(overlap.alpha0) -
                std::lgamma(n + overlap.alpha0);
    for (std::size_t h = 1; h < table.size(); ++h)
        lp += std::lgamma(table[h] + overlap.alpha[h]) -
              std::lgamma(overlap.alpha[h]) - log_factorial(table[h]);
    return lp;
}

// -------------------------------------------------------- matching counts --

namespace {

std::vector<long long> per_file_counts(std::span<const std::int32_t> table,
                                       int num_files) {
    if (table.size() != std::size_t(1) << num_files)
        throw std::invalid_argument("overlap table must have 2^K entries");
    std::vector<long long> nk(num_files, 0);
    for (std::size_t h = 1; h < table.size(); ++h) {
        if (table[h] < 0) throw std::invalid_argument("negative overlap count");
        for (int k = 0; k < num_files; ++k)
            if (h & (std::size_t(1) << k)) nk[k] += table[h];
    }
    return nk;
}

}  // namespace

double log_count_kpartite(std::span<const std::int32_t> table, int num_files) {
    auto nk = per_file_counts(table, num_files);
    double lc = 0.0;
    for (long long v : nk) lc += log_factorial(static_cast<double>(v));
    for (std::size_t h = 1; h < table.size(); ++h)
        lc -= log_factorial(table[h]);
    return lc;
}

std::string count_kpartite_exact(std::span<const std::int32_t> table,
                                 int num_files) {
    using boost::multiprecision::cpp_int;
    auto factorial = [](long long v) {
        cpp_int f = 1;
        for (long long i = 2; i <= v; ++i) f *= i;
        return f;
    };
    cpp_int num = 1, den = 1;
    for (long long v : per_file_counts(table, num_files)) num *= factorial(v);
    for (std::size_t h = 1; h < table.size(); ++h) den *= factorial(table[h]);
    cpp_int count = num / den;  // exact: the ratio is a multinomial product
    return count.str();
}

// ------------------------------------------------------------ prior draws --

std::vector<std::int32_t> sample_overlap_table(int n, const OverlapPrior& overlap,
                                               Rng& rng) {
    const std::size_t cells = overlap.alpha.size();
    std::vector<double> alpha_pos(overlap.alpha.begin() + 1, overlap.alpha.end());
    std::vector<double> q = rng.dirichlet(alpha_pos);
    std::vector<std::int32_t> table(cells, 0);
    for (int t = 0; t < n; ++t)
        ++table[rng.categorical(q) + 1];
    return table;
}

PriorDraw sample_prior(const PriorConfig& cfg, Rng& rng) {
    cfg.validate();
    const int K = cfg.K;
    const int n = cfg.count.sample(rng);
    std::vector<std::int32_t> table = sample_overlap_table(n, cfg.overlap, rng);

    // Within-file cluster sizes, in the order the clusters will be dealt out.
    std::vector<long long> nk = per_file_counts(table, K);
    std::vector<std::vector<int>> sizes(K);
    std::vector<int> file_sizes(K, 0);
    for (int k = 0; k < K; ++k) {
        sizes[k].resize(nk[k]);
        for (auto& d : sizes[k]) {
            d = cfg.sizes[k].sample(rng);
            file_sizes[k] += d;
        }
    }

    // Uniform within-file partitions with those sizes: shuffle records, cut.
    std::vector<int> file_of;
    std::vector<int> offset(K + 1, 0);
    for (int k = 0; k < K; ++k) {
        file_of.insert(file_of.end(), file_sizes[k], k);
        offset[k + 1] = offset[k] + file_sizes[k];
    }
    // within_clusters[k][c] = record ids of file k's cluster c
    std::vector<std::vector<std::vector<int>>> within(K);
    for (int k = 0; k < K; ++k) {
        std::vector<int> recs(file_sizes[k]);
        std::iota(recs.begin(), recs.end(), offset[k]);
        rng.shuffle(recs);
        std::size_t at = 0;
        for (int d : sizes[k]) {
            within[k].emplace_back(recs.begin() + at, recs.begin() + at + d);
            at += d;
        }
        rng.shuffle(within[k]);  // uniform deal of clusters to cells
    }

    // Deal each file's clusters to its cells (patterns ascending), then align
    // within a cell by fresh uniform permutations (first file keeps order).
    std::vector<int> labels(file_of.size(), -1);
    int next_label = 0;
    std::vector<std::size_t> cursor(K, 0);
    for (std::size_t h = 1; h < table.size(); ++h) {
        const int cell_n = table[h];
        if (cell_n == 0) continue;
        std::vector<int> cell_labels(cell_n);
        for (int t = 0; t < cell_n; ++t) cell_labels[t] = next_label++;
        bool first_file = true;
        for (int k = 0; k < K; ++k) {
            if (!(h & (std::size_t(1) << k))) continue;
            std::vector<int> order(cell_n);
            std::iota(order.begin(), order.end(), 0);
            if (!first_file) rng.shuffle(order);
            first_file = false;
            for (int t = 0; t < cell_n; ++t) {
                const auto& members = within[k][cursor[k] + order[t]];
                for (int rec : members) labels[rec] = cell_labels[t];
            }
            cursor[k] += cell_n;
        }
    }

    PriorDraw draw{MultifilePartition::from_labels(file_of, K, labels),
                   std::move(file_sizes)};
    return draw;
}

// ------------------------------------------------------ assignment weights -

AssignmentWeights assignment_log_weights(const MultifilePartition& c_minus,
                                         int rec, std::span<const int> targets,
                                         const PriorConfig& cfg) {
    const int k = c_minus.file_of(rec);
    const FilePattern kbit = MultifilePartition::bit(k);
    AssignmentWeights w;
    w.cluster_logw.resize(targets.size());

    if (cfg.flat) {
        w.new_logw = 0.0;
        for (std::size_t t = 0; t < targets.size(); ++t) {
            const Cluster& c = c_minus.cluster(targets[t]);
            w.cluster_logw[t] =
                (c.per_file[k] + 1 <= cfg.sizes[k].max_size()) ? 0.0 : kNegInf;
        }
        return w;
    }

    const int n = c_minus.num_clusters();
    const double log_p1 = cfg.sizes[k].log_pmf(1);

    // New singleton cluster:
    //   [P(n+1)/P(n)] (n+1) (n_{1k} + a_{1k}) / (n + a0) p_k(1)
    w.new_logw = cfg.count.log_ratio_up(n);
    if (w.new_logw != kNegInf)
        w.new_logw += std::log(n + 1.0) +
                      std::log(c_minus.overlap_count(kbit) + cfg.overlap.alpha[kbit]) -
                      std::log(n + cfg.overlap.alpha0) + log_p1;

    for (std::size_t t = 0; t < targets.size(); ++t) {
        const Cluster& c = c_minus.cluster(targets[t]);
        const int dk = c.per_file[k];
        double lw;
        if (dk == 0) {
            // Joins a cluster with no file-k record: the cluster moves from
            // cell h to cell h|k.
            const FilePattern h = c.pattern;
            const FilePattern h2 = h | kbit;
            lw = std::log(c_minus.overlap_count(h2) + cfg.overlap.alpha[h2]) -
                 std::log(c_minus.overlap_count(h) + cfg.overlap.alpha[h] - 1.0) +
                 log_p1;
        } else {
            // Grows the cluster's file-k part: (|c_k|+1) p_k(|c_k|+1)/p_k(|c_k|).
            double lp_up = cfg.sizes[k].log_pmf(dk + 1);
            lw = (lp_up == kNegInf)
                     ? kNegInf
                     : std::log(dk + 1.0) + lp_up - cfg.sizes[k].log_pmf(dk);
        }
        w.cluster_logw[t] = lw;
    }
    return w;
}

}  // namespace multilink
