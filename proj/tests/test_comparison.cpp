#include <doctest.h>

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "multilink/comparison.hpp"
#include "multilink/csv.hpp"
#include "multilink/datastore.hpp"
#include "multilink/rng.hpp"
#include "test_helpers.hpp"

using namespace multilink;

namespace {

// Oracle: plain recursive definition of edit distance with memoisation,
// structurally unlike the iterative two-row implementation under test.
std::size_t lev_oracle_rec(const std::string& a, const std::string& b,
                           std::size_t i, std::size_t j,
                           std::map<std::pair<std::size_t, std::size_t>,
                                    std::size_t>& memo) {
    if (i == 0) return j;
    if (j == 0) return i;
    auto key = std::make_pair(i, j);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    std::size_t best = lev_oracle_rec(a, b, i - 1, j, memo) + 1;
    best = std::min(best, lev_oracle_rec(a, b, i, j - 1, memo) + 1);
    best = std::min(best, lev_oracle_rec(a, b, i - 1, j - 1, memo) +
                              (a[i - 1] == b[j - 1] ? 0 : 1));
    memo[key] = best;
    return best;
}

std::size_t lev_oracle(const std::string& a, const std::string& b) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
    return lev_oracle_rec(a, b, a.size(), b.size(), memo);
}

Schema abc_schema() {
    Schema s;
    s.fields = {{"name", FieldKind::string_field},
                {"city", FieldKind::categorical},
                {"age", FieldKind::integer}};
    return s;
}

std::vector<ComparatorSpec> abc_comparators() {
    return {default_string_comparator(0),
            ComparatorSpec{1, ComparatorKind::binary, {}},
            ComparatorSpec{2, ComparatorKind::absolute_difference, {0.0, 2.0}}};
}

// Three files: A and B duplicate-free with 2 records each, C duplicate-
// allowing with 3.  Mix of agreement levels and missing cells.
FileCollection abc_collection() {
    Schema s = abc_schema();
    FileCollection fc;
    fc.schema = s;
    fc.files.push_back(make_table(s, "A", false,
                                  {{"smith", "oslo", "30"},
                                   {"jones", "rome", "NA"}}));
    fc.files.push_back(make_table(s, "B", false,
                                  {{"smyth", "oslo", "31"},
                                   {"brown", "", "44"}}));
    fc.files.push_back(make_table(s, "C", true,
                                  {{"smith", "oslo", "30"},
                                   {"jonse", "rome", "58"},
                                   {"", "kiev", "30"}}));
    fc.rebuild_index();
    return fc;
}

// Oracle: the pair universe enumerated directly from first principles.
std::vector<std::pair<int, int>> universe_oracle(const FileCollection& fc) {
    std::vector<std::pair<int, int>> out;
    int r = fc.num_records();
    for (int i = 0; i < r; ++i)
        for (int j = i + 1; j < r; ++j) {
            if (fc.file_of(i) == fc.file_of(j) &&
                !fc.files[fc.file_of(i)].duplicates_allowed)
                continue;
            out.emplace_back(i, j);
        }
    return out;
}

int level_oracle(const FileCollection& fc, const ComparatorSpec& spec, int i,
                 int j) {
    if (!fc.observed(i, spec.field) || !fc.observed(j, spec.field))
        return kLevelUnobserved;
    return discretize(field_dissimilarity(fc, spec, i, j), spec);
}

}  // namespace

TEST_CASE("levenshtein matches the recursive oracle") {
    CHECK(lev_oracle("kitten", "sitting") == 3);  // sanity-check the oracle
    CHECK(levenshtein("kitten", "sitting") == 3);
    CHECK(levenshtein("", "") == 0);
    CHECK(levenshtein("abc", "") == 3);
    CHECK(levenshtein("", "abcd") == 4);
    CHECK(levenshtein("flaw", "lawn") == 2);
    CHECK(levenshtein("abc", "abc") == 0);

    Rng rng(41);
    const std::string letters = "abcde";
    for (int t = 0; t < 300; ++t) {
        std::string a, b;
        for (std::size_t i = rng.uniform_below(9); i > 0; --i)
            a += letters[rng.uniform_below(letters.size())];
        for (std::size_t i = rng.uniform_below(9); i > 0; --i)
            b += letters[rng.uniform_below(letters.size())];
        CHECK(levenshtein(a, b) == lev_oracle(a, b));
    }
}

TEST_CASE("normalized edit dissimilarity divides by the longer string") {
    CHECK(normalized_edit_dissimilarity("kitten", "sitting") ==
          doctest::Approx(3.0 / 7.0));
    CHECK(normalized_edit_dissimilarity("", "") == 0.0);
    CHECK(normalized_edit_dissimilarity("a", "") == 1.0);
    CHECK(normalized_edit_dissimilarity("ab", "ab") == 0.0);
    CHECK(normalized_edit_dissimilarity("ab", "ba") == 1.0);
}

TEST_CASE("discretize maps half-open level intervals and flags bad input") {
    ComparatorSpec s = default_string_comparator(0);  // cuts 0, .25, .5
    CHECK(s.num_levels() == 4);
    CHECK(discretize(0.0, s) == 0);
    CHECK(discretize(0.1, s) == 1);
    CHECK(discretize(0.25, s) == 1);   // closed on the right
    CHECK(discretize(0.2501, s) == 2);
    CHECK(discretize(3.0 / 7.0, s) == 2);
    CHECK(discretize(0.5, s) == 2);
    CHECK(discretize(0.51, s) == 3);
    CHECK(discretize(1.0, s) == 3);
    CHECK_THROWS_AS((void)discretize(-0.01, s), DataError);
    CHECK_THROWS_AS((void)discretize(1.01, s), DataError);

    ComparatorSpec b{1, ComparatorKind::binary, {}};
    CHECK(b.num_levels() == 2);
    CHECK(discretize(0.0, b) == 0);
    CHECK(discretize(1.0, b) == 1);
    CHECK_THROWS_AS((void)discretize(0.5, b), DataError);

    ComparatorSpec d{2, ComparatorKind::absolute_difference, {0.0, 2.0}};
    CHECK(d.num_levels() == 3);
    CHECK(discretize(0.0, d) == 0);
    CHECK(discretize(2.0, d) == 1);
    CHECK(discretize(50.0, d) == 2);  // open above: no upper range error
}

TEST_CASE("comparator validation rejects ill-formed specs") {
    Schema s = abc_schema();
    CHECK_NOTHROW(default_string_comparator(0).validate(s));
    ComparatorSpec bad1{1, ComparatorKind::binary, {0.5}};
    CHECK_THROWS_AS(bad1.validate(s), ConfigError);
    ComparatorSpec bad2{0, ComparatorKind::absolute_difference, {1.0}};
    CHECK_THROWS_AS(bad2.validate(s), ConfigError);  // not an integer field
    ComparatorSpec bad3{0, ComparatorKind::normalized_edit, {0.5, 0.25}};
    CHECK_THROWS_AS(bad3.validate(s), ConfigError);  // not increasing
    ComparatorSpec bad4{0, ComparatorKind::normalized_edit, {0.0, 1.5}};
    CHECK_THROWS_AS(bad4.validate(s), ConfigError);  // outside [0,1]
    ComparatorSpec bad5{7, ComparatorKind::binary, {}};
    CHECK_THROWS_AS(bad5.validate(s), ConfigError);  // no such field
    ComparatorSpec bad6{0, ComparatorKind::normalized_edit, {}};
    CHECK_THROWS_AS(bad6.validate(s), ConfigError);  // needs breakpoints
}

TEST_CASE("field_dissimilarity covers all three comparator kinds") {
    FileCollection fc = abc_collection();
    auto specs = abc_comparators();
    // records: 0,1 in A; 2,3 in B; 4,5,6 in C
    CHECK(field_dissimilarity(fc, specs[0], 0, 2) ==
          doctest::Approx(1.0 / 5.0));  // smith vs smyth
    CHECK(field_dissimilarity(fc, specs[0], 0, 4) == 0.0);
    CHECK(field_dissimilarity(fc, specs[1], 0, 2) == 0.0);  // oslo = oslo
    CHECK(field_dissimilarity(fc, specs[1], 0, 1) == 1.0);
    CHECK(field_dissimilarity(fc, specs[2], 0, 2) == 1.0);  // |30-31|
    CHECK(field_dissimilarity(fc, specs[2], 3, 5) == 14.0);
}

TEST_CASE("all-pairs candidate set is a single block") {
    CandidateSet cs = all_pairs_candidate(5);
    CHECK(cs.num_blocks == 1);
    CHECK(cs.block_of == std::vector<int>(5, 0));
    CHECK(all_pairs_candidate(0).num_blocks == 0);
}

TEST_CASE("block_by_fields groups exact matches, missing isolates") {
    FileCollection fc = abc_collection();
    CandidateSet cs = block_by_fields(fc, {1});  // block on city
    // cities: oslo rome | oslo (missing) | oslo rome kiev
    CHECK(cs.block_of[0] == cs.block_of[2]);
    CHECK(cs.block_of[0] == cs.block_of[4]);
    CHECK(cs.block_of[1] == cs.block_of[5]);
    CHECK(cs.block_of[0] != cs.block_of[1]);
    // record 3 has city missing: singleton, in no one else's block
    for (int i = 0; i < 7; ++i)
        if (i != 3) CHECK(cs.block_of[3] != cs.block_of[i]);
    CHECK(cs.num_blocks == 4);  // oslo, rome, kiev, missing-singleton

    // Blocking on two fields requires agreement on both.
    CandidateSet cs2 = block_by_fields(fc, {0, 1});
    CHECK(cs2.block_of[0] == cs2.block_of[4]);  // smith/oslo twice
    CHECK(cs2.block_of[0] != cs2.block_of[2]);  // smyth differs
}

TEST_CASE("index_by_disjunction drops confirmed disagreements only") {
    FileCollection fc = abc_collection();
    auto specs = abc_comparators();
    // Drop pairs whose name disagrees beyond level 1.
    auto kept = index_by_disjunction(fc, specs, {{0, 1}});
    auto uni = universe_oracle(fc);
    std::map<std::pair<int, int>, bool> kept_map;
    for (auto& pr : kept) kept_map[pr] = true;
    for (auto& [i, j] : uni) {
        int lvl = level_oracle(fc, specs[0], i, j);
        bool expect_kept = (lvl == kLevelUnobserved) || lvl <= 1;
        CHECK(kept_map.count({i, j}) == (expect_kept ? 1u : 0u));
    }
    // Pairs involving record 6 (name missing) are never dropped by name.
    CHECK(kept_map.count({0, 6}) == 1);

    // Two thresholds: dropping when name OR city disagrees.
    auto kept2 =
        index_by_disjunction(fc, specs, {{0, 1}, {1, 0}});
    for (auto& [i, j] : kept2) {
        int ln = level_oracle(fc, specs[0], i, j);
        int lc = level_oracle(fc, specs[1], i, j);
        CHECK((ln == kLevelUnobserved || ln <= 1));
        CHECK((lc == kLevelUnobserved || lc == 0));
    }

    CHECK_THROWS_AS(index_by_disjunction(fc, specs, {{9, 0}}), ConfigError);
}

TEST_CASE("transitive_closure equals a boolean matrix-closure oracle") {
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        int r = 20;
        std::vector<std::pair<int, int>> pairs;
        int npairs = int(rng.uniform_below(25));
        for (int t = 0; t < npairs; ++t) {
            int i = int(rng.uniform_below(r)), j = int(rng.uniform_below(r));
            if (i != j) pairs.emplace_back(i, j);
        }
        // Oracle: Warshall closure over the symmetric reachability matrix.
        std::vector<std::vector<bool>> reach(r, std::vector<bool>(r, false));
        for (int i = 0; i < r; ++i) reach[i][i] = true;
        for (auto& [i, j] : pairs) reach[i][j] = reach[j][i] = true;
        for (int k = 0; k < r; ++k)
            for (int i = 0; i < r; ++i)
                if (reach[i][k])
                    for (int j = 0; j < r; ++j)
                        if (reach[k][j]) reach[i][j] = true;

        CandidateSet cs = transitive_closure(r, pairs);
        REQUIRE(int(cs.block_of.size()) == r);
        int maxb = -1;
        for (int i = 0; i < r; ++i) {
            for (int j = 0; j < r; ++j)
                CHECK((cs.block_of[i] == cs.block_of[j]) == bool(reach[i][j]));
            maxb = std::max(maxb, cs.block_of[i]);
        }
        CHECK(cs.num_blocks == maxb + 1);
    }
}

TEST_CASE("build_comparisons reproduces a first-principles oracle") {
    FileCollection fc = abc_collection();
    auto specs = abc_comparators();
    auto uni = universe_oracle(fc);
    CHECK(uni.size() == 19);  // 2*2 + 2*3 + 2*3 + C(3,2)

    // Candidate blocks that exclude some universe pairs: block on city.
    CandidateSet cs = block_by_fields(fc, {1});

    for (bool fold : {true, false}) {
        CAPTURE(fold);
        ComparisonData d = build_comparisons(fc, specs, cs, fold);
        CHECK(d.K == 3);
        CHECK(d.F == 3);
        CHECK(d.num_levels == std::vector<int>{4, 2, 3});
        CHECK(d.file_sizes == std::vector<int>{2, 2, 3});
        CHECK(d.dup_allowed == std::vector<std::uint8_t>{0, 0, 1});
        CHECK(d.universe_pairs == uni.size());
        CHECK(d.fold_excluded == fold);

        // Expected candidate pairs: same block, in the universe.
        std::vector<std::pair<int, int>> expect_pairs;
        for (auto& [i, j] : uni)
            if (cs.block_of[i] == cs.block_of[j]) expect_pairs.emplace_back(i, j);
        REQUIRE(d.num_pairs() == int(expect_pairs.size()));
        CHECK(d.modeled_pairs == (fold ? uni.size() : expect_pairs.size()));

        // Per-pair levels match the oracle; stored with a < b.
        std::map<std::pair<int, int>, int> where;
        for (int p = 0; p < d.num_pairs(); ++p) {
            CHECK(d.pair_a[p] < d.pair_b[p]);
            where[{d.pair_a[p], d.pair_b[p]}] = p;
        }
        for (auto& [i, j] : expect_pairs) {
            REQUIRE(where.count({i, j}) == 1);
            int p = where[{i, j}];
            for (int f = 0; f < 3; ++f)
                CHECK(int(d.pair_levels(p)[f]) == level_oracle(fc, specs[f], i, j));
            // File-pair tag matches the records' files.
            const FilePair& filepair = d.file_pairs[d.pair_fp[p]];
            int k1 = std::min(fc.file_of(i), fc.file_of(j));
            int k2 = std::max(fc.file_of(i), fc.file_of(j));
            CHECK(filepair.k1 == k1);
            CHECK(filepair.k2 == k2);
            CHECK(d.fp_index(k2, k1) == d.pair_fp[p]);  // symmetric lookup
        }

        // pair_index answers membership for every universe pair.
        for (auto& [i, j] : uni) {
            int p = d.pair_index(i, j);
            int q = d.pair_index(j, i);
            CHECK(p == q);
            if (cs.block_of[i] == cs.block_of[j]) {
                REQUIRE(p >= 0);
                CHECK(d.pair_a[p] == i);
                CHECK(d.pair_b[p] == j);
            } else {
                CHECK(p == -1);
            }
        }
        CHECK(d.pair_index(0, 1) == -1);  // within dup-free file: not in universe

        // Level totals: oracle accumulates modeled pairs only.
        std::map<std::tuple<int, int, int>, long long> want;  // (fp,f,level)
        for (auto& [i, j] : uni) {
            if (!fold && cs.block_of[i] != cs.block_of[j]) continue;
            int fp = d.fp_index(fc.file_of(i), fc.file_of(j));
            REQUIRE(fp >= 0);
            for (int f = 0; f < 3; ++f) {
                int lvl = level_oracle(fc, specs[f], i, j);
                if (lvl != kLevelUnobserved) ++want[{fp, f, lvl}];
            }
        }
        for (int fp = 0; fp < int(d.file_pairs.size()); ++fp)
            for (int f = 0; f < 3; ++f)
                for (int lvl = 0; lvl < d.num_levels[f]; ++lvl) {
                    long long expect = 0;
                    auto it = want.find({fp, f, lvl});
                    if (it != want.end()) expect = it->second;
                    CHECK(d.cell(fp, f, lvl) == expect);
                }

        // CSR adjacency is consistent with the pair list.
        for (int i = 0; i < fc.num_records(); ++i) {
            std::vector<int> nbrs;
            for (auto& [a, b] : expect_pairs) {
                if (a == i) nbrs.push_back(b);
                if (b == i) nbrs.push_back(a);
            }
            std::sort(nbrs.begin(), nbrs.end());
            std::vector<int> got;
            for (std::int32_t t = d.adj_offset[i]; t < d.adj_offset[i + 1]; ++t) {
                got.push_back(d.adj_other[t]);
                int p = d.adj_pair[t];
                CHECK((d.pair_a[p] == i || d.pair_b[p] == i));
            }
            CHECK(got == nbrs);
        }
    }
}

TEST_CASE("within-file pairs exist only for duplicate-allowing files") {
    FileCollection fc = abc_collection();
    auto specs = abc_comparators();
    ComparisonData d =
        build_comparisons(fc, specs, all_pairs_candidate(fc.num_records()));
    CHECK(d.num_pairs() == 19);
    int within = 0;
    for (int p = 0; p < d.num_pairs(); ++p) {
        const FilePair& filepair = d.file_pairs[d.pair_fp[p]];
        if (filepair.k1 == filepair.k2) {
            ++within;
            CHECK(filepair.k1 == 2);  // only file C allows duplicates
        }
    }
    CHECK(within == 3);
    CHECK(d.fp_index(0, 0) == -1);  // dup-free: no within-file model
    CHECK(d.fp_index(2, 2) >= 0);
}

TEST_CASE("comparison artifacts round-trip through CSV + JSON") {
    testutil::ScratchDir tmp("cmp");
    FileCollection fc = abc_collection();
    auto specs = abc_comparators();
    CandidateSet cs = block_by_fields(fc, {1});
    ComparisonData d = build_comparisons(fc, specs, cs, true);
    d.field_names = {"name", "city", "age"};
    d.file_names = {"A", "B", "C"};
    d.source_hash = 0xdeadbeefull;

    write_comparisons(d, tmp.file("rows.csv"), tmp.file("meta.json"));
    ComparisonData e = read_comparisons(tmp.file("rows.csv"), tmp.file("meta.json"));

    CHECK(e.K == d.K);
    CHECK(e.F == d.F);
    CHECK(e.num_levels == d.num_levels);
    CHECK(e.field_names == d.field_names);
    CHECK(e.file_sizes == d.file_sizes);
    CHECK(e.file_names == d.file_names);
    CHECK(e.dup_allowed == d.dup_allowed);
    CHECK(e.file_of == d.file_of);
    CHECK(e.block_of == d.block_of);
    CHECK(e.num_blocks == d.num_blocks);
    CHECK(e.pair_a == d.pair_a);
    CHECK(e.pair_b == d.pair_b);
    CHECK(e.pair_fp == d.pair_fp);
    CHECK(e.levels == d.levels);
    CHECK(e.adj_offset == d.adj_offset);
    CHECK(e.adj_other == d.adj_other);
    CHECK(e.adj_pair == d.adj_pair);
    CHECK(e.cell_offset == d.cell_offset);
    CHECK(e.totals == d.totals);
    CHECK(e.universe_pairs == d.universe_pairs);
    CHECK(e.modeled_pairs == d.modeled_pairs);
    CHECK(e.fold_excluded == d.fold_excluded);
    CHECK(e.source_hash == d.source_hash);
}
