#include "multilink/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "multilink/csv.hpp"
#include "multilink/union_find.hpp"
#include "multilink/util.hpp"

namespace multilink {

void LossSpec::validate() const {
    if (!(fnm > 0.0) || !(fm1 > 0.0) || !(fm2 > 0.0))
        throw ConfigError("matching losses must be positive");
    if (!(abstain > 0.0)) throw ConfigError("abstain loss must be positive");
}

PairwiseProbs pairwise_probs(const std::vector<std::vector<std::int32_t>>& samples,
                             const ComparisonData& data) {
    if (samples.empty()) throw ConfigError("no posterior samples to summarise");
    const int r = static_cast<int>(data.file_of.size());
    std::vector<std::int64_t> count(data.num_pairs(), 0);
    std::vector<std::vector<int>> clusters;
    for (const auto& labels : samples) {
        if (static_cast<int>(labels.size()) != r)
            throw DataError("sample label vector does not match the record count");
        clusters.assign(r, {});
        for (int i = 0; i < r; ++i) {
            if (labels[i] < 0 || labels[i] >= r)
                throw DataError("sample labels out of range");
            clusters[labels[i]].push_back(i);
        }
        for (const auto& members : clusters) {
            for (std::size_t x = 0; x + 1 < members.size(); ++x)
                for (std::size_t y = x + 1; y < members.size(); ++y) {
                    int p = data.pair_index(members[x], members[y]);
                    if (p >= 0) ++count[p];
                }
        }
    }
    PairwiseProbs probs;
    probs.prob.resize(count.size());
    for (std::size_t p = 0; p < count.size(); ++p)
        probs.prob[p] = static_cast<double>(count[p]) / samples.size();
    return probs;
}

std::vector<int> link_components(const ComparisonData& data,
                                 const PairwiseProbs& probs, double delta) {
    const int r = static_cast<int>(data.file_of.size());
    UnionFind uf(r);
    for (int p = 0; p < data.num_pairs(); ++p)
        if (probs.prob[p] > delta) uf.unite(data.pair_a[p], data.pair_b[p]);
    return uf.components();
}

namespace {

int largest_component(const std::vector<int>& comp) {
    std::vector<int> size;
    for (int c : comp) {
        if (c >= static_cast<int>(size.size())) size.resize(c + 1, 0);
        ++size[c];
    }
    int best = 0;
    for (int s : size) best = std::max(best, s);
    return best;
}

}  // namespace

double select_delta(const ComparisonData& data, const PairwiseProbs& probs,
                    int max_component) {
    if (max_component < 1) throw ConfigError("component size bound must be >= 1");
    std::vector<double> values{0.0};
    for (double p : probs.prob)
        if (p > 0.0) values.push_back(p);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    // Feasibility is monotone in delta; find the smallest attained value that
    // satisfies the bound.
    int lo = 0, hi = static_cast<int>(values.size()) - 1;
    if (largest_component(link_components(data, probs, values[lo])) <= max_component)
        return values[lo];
    while (lo + 1 < hi) {
        int mid = (lo + hi) / 2;
        if (largest_component(link_components(data, probs, values[mid])) <= max_component)
            hi = mid;
        else
            lo = mid;
    }
    return values[hi];
}

// ------------------------------------------------------------------ loss ---

namespace {

// Branch bookkeeping for one decision vector over a record subset.  Positions
// refer to the subset; truth labels are supplied per evaluation.
class LossEvaluator {
  public:
    // `decisions` parallel to `records`; est-cluster lists cover non-abstained
    // positions only.
    LossEvaluator(std::span<const std::int32_t> decisions, const LossSpec& spec)
        : spec_(spec), v_(static_cast<int>(decisions.size())) {
        std::map<std::int32_t, int> ids;
        est_cluster_of_.assign(v_, -1);
        for (int p = 0; p < v_; ++p) {
            if (decisions[p] == kAbstain) {
                ++abstained_;
                continue;
            }
            auto [it, fresh] = ids.emplace(decisions[p], static_cast<int>(clusters_.size()));
            if (fresh) clusters_.emplace_back();
            est_cluster_of_[p] = it->second;
            clusters_[it->second].push_back(p);
        }
        cnt_.assign(v_, 0);
        c2_.assign(v_, 0);
    }

    int abstained() const { return abstained_; }
    double abstain_charge() const {
        return abstained_ == 0 ? 0.0 : abstained_ * spec_.abstain;
    }

    // Sum of FNM/FM1/FM2 losses against one truth labelling (canonical labels
    // < v over subset positions).  per_record, when given, receives each
    // non-abstained position's contribution added in.
    double truth_branches(std::span<const std::int32_t> zt,
                          std::vector<double>* per_record = nullptr) {
        for (int p = 0; p < v_; ++p)
            if (est_cluster_of_[p] >= 0) ++cnt_[zt[p]];
        double total = 0.0;
        auto charge = [&](int p, double x) {
            total += x;
            if (per_record) (*per_record)[p] += x;
        };
        for (const auto& members : clusters_) {
            if (members.size() == 1) {
                const int p = members.front();
                if (cnt_[zt[p]] > 1) charge(p, spec_.fnm);
                continue;
            }
            for (int p : members) ++c2_[zt[p]];
            for (int p : members) {
                if (cnt_[zt[p]] == 1)
                    charge(p, spec_.fm1);
                else if (cnt_[zt[p]] > c2_[zt[p]])
                    charge(p, spec_.fm2);
            }
            for (int p : members) c2_[zt[p]] = 0;
        }
        for (int p = 0; p < v_; ++p)
            if (est_cluster_of_[p] >= 0) cnt_[zt[p]] = 0;
        return total;
    }

  private:
    const LossSpec& spec_;
    int v_;
    int abstained_ = 0;
    std::vector<int> est_cluster_of_;
    std::vector<std::vector<int>> clusters_;
    std::vector<int> cnt_, c2_;
};

// Truth labels restricted to a subset, relabelled canonically within it.
std::vector<std::int32_t> restrict_labels(const std::vector<std::int32_t>& full,
                                          std::span<const int> records) {
    std::vector<std::int32_t> out(records.size());
    std::map<std::int32_t, std::int32_t> remap;
    for (std::size_t p = 0; p < records.size(); ++p) {
        auto [it, fresh] =
            remap.emplace(full[records[p]], static_cast<std::int32_t>(remap.size()));
        (void)fresh;
        out[p] = it->second;
    }
    return out;
}

}  // namespace

double loss(const std::vector<std::int32_t>& truth,
            const std::vector<std::int32_t>& decisions, const LossSpec& spec) {
    spec.validate();
    if (truth.size() != decisions.size())
        throw std::invalid_argument("loss: truth/decision size mismatch");
    std::vector<int> records(truth.size());
    std::iota(records.begin(), records.end(), 0);
    LossEvaluator ev(decisions, spec);
    auto zt = restrict_labels(truth, records);
    return ev.abstain_charge() + ev.truth_branches(zt);
}

double expected_loss_on(const std::vector<std::vector<std::int32_t>>& samples,
                        std::span<const int> records,
                        const std::vector<std::int32_t>& decisions,
                        const LossSpec& spec) {
    spec.validate();
    if (samples.empty()) throw ConfigError("no posterior samples to evaluate");
    std::vector<std::int32_t> sub(records.size());
    for (std::size_t p = 0; p < records.size(); ++p) sub[p] = decisions[records[p]];
    LossEvaluator ev(sub, spec);
    double total = 0.0;
    for (const auto& labels : samples)
        total += ev.truth_branches(restrict_labels(labels, records));
    return ev.abstain_charge() + total / samples.size();
}

double expected_loss(const std::vector<std::vector<std::int32_t>>& samples,
                     const std::vector<std::int32_t>& decisions,
                     const LossSpec& spec) {
    std::vector<int> records(decisions.size());
    std::iota(records.begin(), records.end(), 0);
    return expected_loss_on(samples, records, decisions, spec);
}

// -------------------------------------------------------- Bayes estimate ---

namespace {

// Candidate search state for one component.
struct ComponentSearch {
    std::vector<int> members;                         // record ids, ascending
    std::vector<std::vector<std::int32_t>> truths;    // distinct restrictions
    std::vector<double> weights;                      // multiplicities / T
    std::vector<std::vector<std::int32_t>> candidates;  // = truths, search order

    double evaluate(const std::vector<std::int32_t>& dz, const LossSpec& spec,
                    std::vector<double>* per_record = nullptr) const {
        LossEvaluator ev(dz, spec);
        double total = 0.0;
        for (std::size_t s = 0; s < truths.size(); ++s) {
            if (per_record) {
                std::vector<double> pr(dz.size(), 0.0);
                total += weights[s] * ev.truth_branches(truths[s], &pr);
                for (std::size_t p = 0; p < dz.size(); ++p)
                    (*per_record)[p] += weights[s] * pr[p];
            } else {
                total += weights[s] * ev.truth_branches(truths[s]);
            }
        }
        return ev.abstain_charge() + total;
    }
};

// Enumerates subsets of {0..v-1} by increasing size, lexicographically within
// a size; returns false when exhausted.
class SubsetWalker {
  public:
    explicit SubsetWalker(int v) : v_(v) {}
    bool next(std::vector<int>& subset) {
        if (!started_) {
            started_ = true;
            subset.clear();
            return true;  // empty subset first
        }
        if (!subset.empty() && advance(subset)) return true;
        ++size_;
        if (size_ > v_) return false;
        subset.resize(size_);
        std::iota(subset.begin(), subset.end(), 0);
        return true;
    }

  private:
    bool advance(std::vector<int>& c) {
        const int s = static_cast<int>(c.size());
        for (int i = s - 1; i >= 0; --i) {
            if (c[i] < v_ - (s - i)) {
                ++c[i];
                for (int j = i + 1; j < s; ++j) c[j] = c[j - 1] + 1;
                return true;
            }
        }
        return false;
    }
    int v_;
    int size_ = 0;
    bool started_ = false;
};

std::vector<std::int32_t> apply_abstain(const std::vector<std::int32_t>& dz,
                                        const std::vector<int>& subset) {
    std::vector<std::int32_t> out = dz;
    for (int p : subset) out[p] = kAbstain;
    return out;
}

std::vector<std::int32_t> search_component(const ComponentSearch& cs,
                                           const LossSpec& spec,
                                           const BayesOptions& opt) {
    const int v = static_cast<int>(cs.members.size());
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::int32_t> best_dz;

    if (!spec.partial()) {
        for (const auto& cand : cs.candidates) {
            double e = cs.evaluate(cand, spec);
            if (e < best) {
                best = e;
                best_dz = cand;
            }
        }
        return best_dz;
    }

    if (v <= opt.exhaustive_abstain_limit) {
        SubsetWalker walker(v);
        std::vector<int> subset;
        while (walker.next(subset)) {
            for (const auto& cand : cs.candidates) {
                double e = cs.evaluate(apply_abstain(cand, subset), spec);
                if (e < best) {
                    best = e;
                    best_dz = apply_abstain(cand, subset);
                }
            }
        }
        return best_dz;
    }

    // Greedy: best restriction first, then abstain the costliest record while
    // that strictly lowers the expected loss.
    for (const auto& cand : cs.candidates) {
        double e = cs.evaluate(cand, spec);
        if (e < best) {
            best = e;
            best_dz = cand;
        }
    }
    for (;;) {
        std::vector<double> contrib(v, 0.0);
        cs.evaluate(best_dz, spec, &contrib);
        std::vector<int> order;
        for (int p = 0; p < v; ++p)
            if (best_dz[p] != kAbstain) order.push_back(p);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return contrib[a] > contrib[b]; });
        bool improved = false;
        for (int p : order) {
            std::vector<std::int32_t> trial = best_dz;
            trial[p] = kAbstain;
            double e = cs.evaluate(trial, spec);
            if (e < best) {
                best = e;
                best_dz = std::move(trial);
                improved = true;
                break;
            }
        }
        if (!improved) break;
    }
    return best_dz;
}

}  // namespace

LinkageEstimate bayes_estimate(const std::vector<std::vector<std::int32_t>>& samples,
                               const ComparisonData& data, const LossSpec& spec,
                               const BayesOptions& opt) {
    spec.validate();
    if (samples.empty()) throw ConfigError("no posterior samples to estimate from");
    const int r = static_cast<int>(data.file_of.size());

    PairwiseProbs probs = pairwise_probs(samples, data);
    LinkageEstimate est;
    est.delta = opt.fixed_delta >= 0.0
                    ? opt.fixed_delta
                    : select_delta(data, probs,
                                   spec.partial() ? opt.max_component_partial
                                                  : opt.max_component_full);
    est.component_of = link_components(data, probs, est.delta);
    est.num_components =
        est.component_of.empty()
            ? 0
            : *std::max_element(est.component_of.begin(), est.component_of.end()) + 1;

    std::vector<std::vector<int>> comp_members(est.num_components);
    for (int i = 0; i < r; ++i) comp_members[est.component_of[i]].push_back(i);

    est.decision.assign(r, kAbstain);
    std::int32_t next_label = 0;
    for (const auto& members : comp_members) {
        ComponentSearch cs;
        cs.members = members;
        std::map<std::vector<std::int32_t>, std::size_t> seen;
        for (const auto& labels : samples) {
            auto zt = restrict_labels(labels, members);
            auto [it, fresh] = seen.emplace(zt, cs.truths.size());
            if (fresh) {
                cs.truths.push_back(std::move(zt));
                cs.weights.push_back(0.0);
            }
            cs.weights[it->second] += 1.0 / samples.size();
        }
        cs.candidates = cs.truths;  // first-appearance order = earliest iteration
        auto dz = search_component(cs, spec, opt);
        for (std::size_t p = 0; p < members.size(); ++p)
            est.decision[members[p]] =
                dz[p] == kAbstain ? kAbstain : next_label + dz[p];
        next_label += static_cast<std::int32_t>(members.size());
    }

    // canonical labels: number surviving clusters by first appearance
    std::map<std::int32_t, std::int32_t> remap;
    for (auto& d : est.decision) {
        if (d == kAbstain) continue;
        auto [it, fresh] = remap.emplace(d, static_cast<std::int32_t>(remap.size()));
        (void)fresh;
        d = it->second;
    }
    est.expected_loss_value = expected_loss(samples, est.decision, spec);
    return est;
}

// ------------------------------------------------------------- artifacts ---

void write_estimate(const LinkageEstimate& est, const ComparisonData& data,
                    const std::string& path) {
    std::string out = "global_index,file,decision\n";
    for (std::size_t i = 0; i < est.decision.size(); ++i) {
        out += std::to_string(i + 1);
        out += ',';
        out += csv_escape(data.file_names[data.file_of[i]]);
        out += ',';
        out += est.decision[i] == kAbstain ? "ABSTAIN"
                                           : std::to_string(est.decision[i] + 1);
        out += '\n';
    }
    write_text_file(path, out);
}

std::vector<std::int32_t> read_estimate(const std::string& path) {
    auto rows = read_csv(path);
    if (rows.empty() || rows.front().size() != 3)
        throw DataError(path + ": not an estimate file");
    std::vector<std::int32_t> decisions(rows.size() - 1, kAbstain);
    for (std::size_t x = 1; x < rows.size(); ++x) {
        std::size_t i = std::stoul(rows[x][0]);
        if (i < 1 || i > decisions.size())
            throw DataError(path + ": record index out of range");
        if (rows[x][2] != "ABSTAIN")
            decisions[i - 1] = std::stoi(rows[x][2]) - 1;
    }
    return decisions;
}

}  // namespace multilink
