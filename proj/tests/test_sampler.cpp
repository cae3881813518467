#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "multilink/comparison.hpp"
#include "multilink/csv.hpp"
#include "multilink/datastore.hpp"
#include "multilink/sampler.hpp"
#include "test_helpers.hpp"

using namespace multilink;

namespace {

Schema xy_schema() {
    Schema s;
    s.fields = {{"left", FieldKind::categorical},
                {"right", FieldKind::categorical}};
    return s;
}

std::vector<ComparatorSpec> xy_comparators() {
    return {ComparatorSpec{0, ComparatorKind::binary, {}},
            ComparatorSpec{1, ComparatorKind::binary, {}}};
}

// 2 + 2 duplicate-free records with mixed agreement so the posterior over
// the 7 matchings is non-degenerate.
ComparisonData matching_data() {
    Schema s = xy_schema();
    FileCollection fc;
    fc.schema = s;
    fc.files.push_back(make_table(s, "A", false, {{"x", "p"}, {"y", "q"}}));
    fc.files.push_back(make_table(s, "B", false, {{"x", "q"}, {"y", "p"}}));
    fc.rebuild_index();
    return build_comparisons(fc, xy_comparators(), all_pairs_candidate(4));
}

PriorConfig matching_prior() {
    PriorConfig cfg;
    cfg.K = 2;
    cfg.count = ClusterCountPrior::uniform(4);
    cfg.overlap = OverlapPrior::flat_cells(2);
    cfg.sizes = {SizePrior::point_mass_one(), SizePrior::point_mass_one()};
    return cfg;
}

PartitionConstraints support_constraints(const PriorConfig& cfg) {
    PartitionConstraints pc;
    pc.dup_allowed.resize(cfg.K);
    pc.max_size_per_file.resize(cfg.K);
    for (int k = 0; k < cfg.K; ++k) {
        pc.dup_allowed[k] = cfg.sizes[k].point_mass() ? 0 : 1;
        pc.max_size_per_file[k] = cfg.sizes[k].max_size();
    }
    return pc;
}

// Exact posterior over partitions: prior density x integrated marginal.
std::map<std::vector<std::int32_t>, double> exact_posterior(
    const ComparisonData& data, const PriorConfig& prior) {
    auto hyper = LikelihoodHyper::unit(data.num_levels);
    std::map<std::vector<std::int32_t>, double> logp;
    enumerate_partitions(data.file_of, data.K, support_constraints(prior),
                         [&](const MultifilePartition& part) {
                             double lp = log_prior_density(part, prior);
                             if (lp == kNegInf) return;
                             lp += integrated_log_marginal(
                                 data, count_summaries(data, part), hyper);
                             logp[part.canonical_labels()] = lp;
                         });
    std::vector<double> terms;
    for (auto& [lab, lp] : logp) terms.push_back(lp);
    double z = log_sum_exp(terms);
    for (auto& [lab, lp] : logp) lp = std::exp(lp - z);
    return logp;
}

// Total-variation distance between the chain's visit frequencies and the
// exactly enumerated posterior.
double chain_tv(const ComparisonData& data, const PriorConfig& prior,
                GibbsConfig cfg) {
    auto exact = exact_posterior(data, prior);
    PosteriorSamples samples = run_chain(data, prior, cfg);
    std::map<std::vector<std::int32_t>, double> freq;
    for (const auto& lab : samples.labels)
        freq[lab] += 1.0 / samples.num_stored();
    for (const auto& [lab, p] : freq)
        REQUIRE(exact.count(lab) == 1);  // never leaves the support
    double tv = 0.0;
    for (const auto& [lab, p] : exact) {
        auto it = freq.find(lab);
        tv += std::abs(p - (it == freq.end() ? 0.0 : it->second));
    }
    return tv / 2.0;
}

}  // namespace

TEST_CASE("gibbs configuration validation") {
    GibbsConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    GibbsConfig bad = cfg;
    bad.iterations = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.burn_in = cfg.iterations;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.burn_in = -1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.thin = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.checkpoint_every = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.prune_nats = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("initialisation strategies produce valid starting states") {
    ComparisonData data = matching_data();
    auto part = init_singletons(data);
    CHECK(part.num_clusters() == 4);

    // Random matching: never two records of one duplicate-free file in a
    // cluster, never across candidate blocks.
    Schema s = xy_schema();
    FileCollection fc;
    fc.schema = s;
    fc.files.push_back(make_table(
        s, "A", false, {{"x", "p"}, {"y", "q"}, {"x", "r"}, {"z", "s"}}));
    fc.files.push_back(make_table(s, "B", false,
                                  {{"x", "p"}, {"y", "t"}, {"x", "q"}}));
    fc.rebuild_index();
    ComparisonData blocked = build_comparisons(
        fc, xy_comparators(), block_by_fields(fc, {0}), false);

    Rng rng(333);
    for (int t = 0; t < 60; ++t) {
        auto init = init_random_matching(blocked, rng);
        for (int cid : init.active_cluster_ids()) {
            const Cluster& c = init.cluster(cid);
            for (int k = 0; k < 2; ++k) CHECK(c.per_file[k] <= 1);
            for (int rec : c.members)
                CHECK(blocked.block_of[rec] ==
                      blocked.block_of[c.members.front()]);
        }
        CHECK(init.num_assigned() == 7);
    }
}

TEST_CASE("sampler rejects a prior that contradicts the comparison data") {
    ComparisonData data = matching_data();  // no within-file pairs
    PriorConfig prior = matching_prior();
    prior.sizes[0] = SizePrior::truncated_poisson(1.0, 3);
    GibbsConfig cfg;
    CHECK_THROWS_AS(GibbsSampler(data, prior, cfg), ConfigError);
}

TEST_CASE("chain visit frequencies match the exact posterior (matching)") {
    ComparisonData data = matching_data();
    PriorConfig prior = matching_prior();
    GibbsConfig cfg;
    cfg.iterations = 121000;
    cfg.burn_in = 1000;
    cfg.seed = 71;
    cfg.checkpoint_every = 1000;
    CHECK(chain_tv(data, prior, cfg) < 0.05);

    // Random-scan sweeps with random-matching initialisation target the
    // same law.
    GibbsConfig cfg2 = cfg;
    cfg2.seed = 72;
    cfg2.init = InitStrategy::random_matching;
    cfg2.sweep = SweepOrder::random_scan;
    CHECK(chain_tv(data, prior, cfg2) < 0.05);

    // Pooling level parameters across file pairs changes nothing here
    // (only one file pair exists).
    GibbsConfig cfg3 = cfg;
    cfg3.seed = 73;
    cfg3.single_model = true;
    CHECK(chain_tv(data, prior, cfg3) < 0.05);
}

TEST_CASE("chain visit frequencies match the exact posterior (duplicates)") {
    Schema s;
    s.fields = {{"tag", FieldKind::categorical}};
    FileCollection fc;
    fc.schema = s;
    fc.files.push_back(make_table(s, "C", true, {{"x"}, {"x"}, {"y"}}));
    fc.rebuild_index();
    ComparisonData data =
        build_comparisons(fc, {ComparatorSpec{0, ComparatorKind::binary, {}}},
                          all_pairs_candidate(3));
    PriorConfig prior;
    prior.K = 1;
    prior.count = ClusterCountPrior::uniform(3);
    prior.overlap = OverlapPrior::flat_cells(1);
    prior.sizes = {SizePrior::truncated_poisson(1.0, 3)};

    GibbsConfig cfg;
    cfg.iterations = 121000;
    cfg.burn_in = 1000;
    cfg.seed = 74;
    cfg.checkpoint_every = 1000;
    CHECK(chain_tv(data, prior, cfg) < 0.05);
}

TEST_CASE("incremental state survives per-iteration recount checks") {
    // Three files (one duplicate-allowing), missing values, two candidate
    // blocks; every iteration cross-checks the incremental counts and the
    // partition summaries against from-scratch recomputation.
    Schema s = xy_schema();
    FileCollection fc;
    fc.schema = s;
    fc.files.push_back(make_table(
        s, "A", false, {{"x", "p"}, {"y", ""}, {"x", "q"}, {"w", "p"}}));
    fc.files.push_back(
        make_table(s, "B", false, {{"x", "p"}, {"y", "q"}, {"", "r"}}));
    fc.files.push_back(make_table(s, "C", true,
                                  {{"x", "p"}, {"x", "p"}, {"y", "q"}}));
    fc.rebuild_index();
    ComparisonData data = build_comparisons(
        fc, xy_comparators(), block_by_fields(fc, {0}), true);
    REQUIRE(data.num_blocks >= 3);

    PriorConfig prior;
    prior.K = 3;
    auto [a, q] = negbin_params(10);
    prior.count = ClusterCountPrior::negative_binomial(a, q, 10);
    prior.overlap = OverlapPrior::flat_cells(3);
    prior.sizes = {SizePrior::point_mass_one(), SizePrior::point_mass_one(),
                   SizePrior::truncated_poisson(0.8, 3)};

    GibbsConfig cfg;
    cfg.iterations = 400;
    cfg.burn_in = 0;
    cfg.seed = 99;
    cfg.checkpoint_every = 1;  // recount after every iteration
    cfg.init = InitStrategy::random_matching;
    cfg.sweep = SweepOrder::random_scan;

    PosteriorSamples out = run_chain(data, prior, cfg);
    CHECK(out.num_stored() == 400);
    CHECK(out.n_trace.size() == 400);
    // Samples respect candidate blocks and the duplicate-free rule.
    for (const auto& lab : out.labels) {
        std::map<int, std::vector<int>> clusters;
        for (int i = 0; i < 10; ++i) clusters[lab[i]].push_back(i);
        for (auto& [id, members] : clusters) {
            std::map<int, int> per_file;
            for (int rec : members) {
                CHECK(data.block_of[rec] == data.block_of[members.front()]);
                ++per_file[data.file_of[rec]];
            }
            CHECK(per_file[0] <= 1);
            CHECK(per_file[1] <= 1);
            CHECK(per_file[2] <= 3);
        }
    }
}

TEST_CASE("chains are reproducible from the seed") {
    ComparisonData data = matching_data();
    PriorConfig prior = matching_prior();
    GibbsConfig cfg;
    cfg.iterations = 60;
    cfg.burn_in = 10;
    cfg.seed = 1234;

    PosteriorSamples s1 = run_chain(data, prior, cfg);
    PosteriorSamples s2 = run_chain(data, prior, cfg);
    CHECK(s1.labels == s2.labels);
    CHECK(s1.n_trace == s2.n_trace);

    cfg.seed = 1235;
    PosteriorSamples s3 = run_chain(data, prior, cfg);
    CHECK(s1.n_trace != s3.n_trace);
}

TEST_CASE("sample bookkeeping: burn-in, thinning, storage") {
    ComparisonData data = matching_data();
    PriorConfig prior = matching_prior();
    GibbsConfig cfg;
    cfg.iterations = 10;
    cfg.burn_in = 4;
    cfg.thin = 2;
    cfg.seed = 7;
    PosteriorSamples out = run_chain(data, prior, cfg);
    CHECK(out.n_trace.size() == 10);
    CHECK(out.num_stored() == 3);  // iterations 5, 7, 9
    CHECK(out.num_records == 4);
    CHECK(out.iterations == 10);
    CHECK(out.burn_in == 4);
    CHECK(out.thin == 2);
}

TEST_CASE("samples and trace files round-trip") {
    testutil::ScratchDir tmp("samples");
    ComparisonData data = matching_data();
    PriorConfig prior = matching_prior();
    GibbsConfig cfg;
    cfg.iterations = 25;
    cfg.burn_in = 5;
    cfg.seed = 42;
    PosteriorSamples out = run_chain(data, prior, cfg);

    write_samples(out, tmp.file("samples.txt"));
    auto back = read_samples(tmp.file("samples.txt"));
    CHECK(back == out.labels);

    write_trace(out, tmp.file("trace.txt"));
    auto lines = read_text_file(tmp.file("trace.txt"));
    CHECK(std::count(lines.begin(), lines.end(), '\n') == 25);

    write_text_file(tmp.file("ragged.txt"), "1 2 3\n1 2\n");
    CHECK_THROWS_AS((void)read_samples(tmp.file("ragged.txt")), DataError);
}
