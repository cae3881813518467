#include "multilink/likelihood.hpp"

#include <cmath>

#include "multilink/util.hpp"

namespace multilink {

LikelihoodHyper LikelihoodHyper::unit(const std::vector<int>& num_levels) {
    LikelihoodHyper h;
    for (int L : num_levels) {
        h.mu.emplace_back(L, 1.0);
        h.nu.emplace_back(L, 1.0);
    }
    return h;
}

void LikelihoodHyper::validate(const std::vector<int>& num_levels) const {
    if (mu.size() != num_levels.size() || nu.size() != num_levels.size())
        throw ConfigError("likelihood hyperparameters must cover every field");
    for (std::size_t f = 0; f < num_levels.size(); ++f) {
        if (static_cast<int>(mu[f].size()) != num_levels[f] ||
            static_cast<int>(nu[f].size()) != num_levels[f])
            throw ConfigError("likelihood hyperparameters must cover every level");
        for (double v : mu[f])
            if (!(v > 0.0)) throw ConfigError("mu hyperparameters must be positive");
        for (double v : nu[f])
            if (!(v > 0.0)) throw ConfigError("nu hyperparameters must be positive");
    }
}

CountSummaries count_summaries(const ComparisonData& data,
                               const MultifilePartition& part) {
    CountSummaries cs;
    cs.a.assign(data.totals.size(), 0);
    for (int p = 0; p < data.num_pairs(); ++p) {
        if (part.cluster_of(data.pair_a[p]) != part.cluster_of(data.pair_b[p]))
            continue;
        const std::uint8_t* lv = data.pair_levels(p);
        const std::int64_t* off = &data.cell_offset[std::size_t(data.pair_fp[p]) * data.F];
        for (int f = 0; f < data.F; ++f)
            if (lv[f] != kLevelUnobserved) ++cs.a[off[f] + lv[f]];
    }
    return cs;
}

namespace {

std::vector<double> log_dirichlet_draw(Rng& rng, const std::vector<double>& alpha) {
    std::vector<double> x = rng.dirichlet(alpha);
    for (double& v : x)
        v = std::log(std::max(v, std::numeric_limits<double>::min()));
    return x;
}

}  // namespace

LikelihoodParams sample_params(const ComparisonData& data,
                               const CountSummaries& counts,
                               const LikelihoodHyper& hyper, bool single_model,
                               Rng& rng) {
    hyper.validate(data.num_levels);
    const int num_fp = static_cast<int>(data.file_pairs.size());
    LikelihoodParams params;
    params.log_m.assign(data.totals.size(), 0.0);
    params.log_u.assign(data.totals.size(), 0.0);
    params.log_ratio.assign(data.totals.size(), 0.0);

    auto emit = [&](int fp, int f, const std::vector<double>& lm,
                    const std::vector<double>& lu) {
        const std::int64_t off = data.cell_offset[std::size_t(fp) * data.F + f];
        for (int l = 0; l < data.num_levels[f]; ++l) {
            params.log_m[off + l] = lm[l];
            params.log_u[off + l] = lu[l];
            params.log_ratio[off + l] = lm[l] - lu[l];
        }
    };

    if (single_model) {
        for (int f = 0; f < data.F; ++f) {
            const int L = data.num_levels[f];
            std::vector<double> am(hyper.mu[f]), au(hyper.nu[f]);
            for (int fp = 0; fp < num_fp; ++fp) {
                const std::int64_t off = data.cell_offset[std::size_t(fp) * data.F + f];
                for (int l = 0; l < L; ++l) {
                    am[l] += counts.a[off + l];
                    au[l] += counts.b(data, off + l);
                }
            }
            auto lm = log_dirichlet_draw(rng, am);
            auto lu = log_dirichlet_draw(rng, au);
            for (int fp = 0; fp < num_fp; ++fp) emit(fp, f, lm, lu);
        }
        return params;
    }

    for (int fp = 0; fp < num_fp; ++fp)
        for (int f = 0; f < data.F; ++f) {
            const int L = data.num_levels[f];
            const std::int64_t off = data.cell_offset[std::size_t(fp) * data.F + f];
            std::vector<double> am(hyper.mu[f]), au(hyper.nu[f]);
            for (int l = 0; l < L; ++l) {
                am[l] += counts.a[off + l];
                au[l] += counts.b(data, off + l);
            }
            emit(fp, f, log_dirichlet_draw(rng, am), log_dirichlet_draw(rng, au));
        }
    return params;
}

double log_likelihood(const ComparisonData& data, const CountSummaries& counts,
                      const LikelihoodParams& params) {
    double ll = 0.0;
    for (std::size_t c = 0; c < data.totals.size(); ++c) {
        if (counts.a[c] > 0) ll += counts.a[c] * params.log_m[c];
        const std::int64_t b = counts.b(data, c);
        if (b > 0) ll += b * params.log_u[c];
    }
    return ll;
}

double pair_loglik_ratio(const ComparisonData& data,
                         const LikelihoodParams& params, int pair_idx) {
    const std::uint8_t* lv = data.pair_levels(pair_idx);
    const std::int64_t* off =
        &data.cell_offset[std::size_t(data.pair_fp[pair_idx]) * data.F];
    double lr = 0.0;
    for (int f = 0; f < data.F; ++f)
        if (lv[f] != kLevelUnobserved) lr += params.log_ratio[off[f] + lv[f]];
    return lr;
}

namespace {

double log_beta_fn(const std::vector<double>& x) {
    double s = 0.0, lb = 0.0;
    for (double v : x) {
        lb += std::lgamma(v);
        s += v;
    }
    return lb - std::lgamma(s);
}

}  // namespace

double integrated_log_marginal(const ComparisonData& data,
                               const CountSummaries& counts,
                               const LikelihoodHyper& hyper, bool single_model) {
    hyper.validate(data.num_levels);
    const int num_fp = static_cast<int>(data.file_pairs.size());
    double lm = 0.0;
    if (single_model) {
        for (int f = 0; f < data.F; ++f) {
            std::vector<double> am(hyper.mu[f]), au(hyper.nu[f]);
            for (int fp = 0; fp < num_fp; ++fp) {
                const std::int64_t off = data.cell_offset[std::size_t(fp) * data.F + f];
                for (int l = 0; l < data.num_levels[f]; ++l) {
                    am[l] += counts.a[off + l];
                    au[l] += counts.b(data, off + l);
                }
            }
            lm += log_beta_fn(am) - log_beta_fn(hyper.mu[f]);
            lm += log_beta_fn(au) - log_beta_fn(hyper.nu[f]);
        }
        return lm;
    }
    for (int fp = 0; fp < num_fp; ++fp)
        for (int f = 0; f < data.F; ++f) {
            const std::int64_t off = data.cell_offset[std::size_t(fp) * data.F + f];
            std::vector<double> am(hyper.mu[f]), au(hyper.nu[f]);
            for (int l = 0; l < data.num_levels[f]; ++l) {
                am[l] += counts.a[off + l];
                au[l] += counts.b(data, off + l);
            }
            lm += log_beta_fn(am) - log_beta_fn(hyper.mu[f]);
            lm += log_beta_fn(au) - log_beta_fn(hyper.nu[f]);
        }
    return lm;
}

}  // namespace multilink
