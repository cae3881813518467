#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "multilink/datastore.hpp"

namespace multilink {

inline constexpr std::uint8_t kLevelUnobserved = 255;

enum class ComparatorKind {
    normalized_edit,      // Levenshtein distance / max length, in [0,1]
    binary,               // agree (level 0) / disagree (level 1)
    absolute_difference,  // |x - y| on integer fields, in [0,inf)
};

// Discretises one field's similarity into ordered disagreement levels.
// `breakpoints` are strictly increasing cut values defining half-open
// intervals: level 0 is [range_min, b0]; level l>0 is (b_{l-1}, b_l]; the last
// level is open above.  Binary comparators take no breakpoints.
struct ComparatorSpec {
    int field = 0;
    ComparatorKind kind = ComparatorKind::binary;
    std::vector<double> breakpoints;

    int num_levels() const {
        return kind == ComparatorKind::binary
                   ? 2
                   : static_cast<int>(breakpoints.size()) + 1;
    }
    void validate(const Schema& schema) const;
};

// Default string cuts: exact agreement, then thirds of the normalised
// edit-distance range (0, .25], (.25, .5], (.5, 1].
ComparatorSpec default_string_comparator(int field);

std::size_t levenshtein(const std::string& a, const std::string& b);
// Levenshtein distance divided by the longer length; two empty strings agree
// exactly (0).
double normalized_edit_dissimilarity(const std::string& a, const std::string& b);

// Raw dissimilarity for one record pair on one field (pre: both observed).
double field_dissimilarity(const FileCollection& fc, const ComparatorSpec& spec,
                           int rec_a, int rec_b);

// Maps a dissimilarity to its level.  Values outside the declared range
// raise DataError.
int discretize(double value, const ComparatorSpec& spec);

// ------------------------------------------------------------ candidates ---

// Transitive restriction of the pair universe: records grouped into blocks;
// only within-block pairs may be linked.
struct CandidateSet {
    std::vector<int> block_of;  // size r
    int num_blocks = 0;
};

CandidateSet all_pairs_candidate(int num_records);

// Exact agreement on every listed field; a missing value counts as
// disagreement, so records with a missing blocking field become singleton
// blocks.  Output is transitive by construction.
CandidateSet block_by_fields(const FileCollection& fc,
                             const std::vector<int>& fields);

struct FieldThreshold {
    int field = 0;
    int max_level = 0;  // pair dropped when observed level exceeds this
};

// Indexing: a pair is declared non-coreferent (dropped) when it disagrees
// beyond the threshold on ANY listed field; pairs with the field missing on
// either side are never dropped by that field.  Output need not be transitive.
std::vector<std::pair<int, int>> index_by_disjunction(
    const FileCollection& fc, const std::vector<ComparatorSpec>& specs,
    const std::vector<FieldThreshold>& thresholds);

// Union-find closure of a kept-pair list into blocks (smallest superset of
// the pairs that is transitive).
CandidateSet transitive_closure(int num_records,
                                const std::vector<std::pair<int, int>>& pairs);

// ------------------------------------------------------- comparison data ---

struct FilePair {
    int k1 = 0, k2 = 0;  // k1 <= k2; k1 == k2 only for duplicate-allowing files
};

// Pre-computed discretised comparison vectors.  Candidate (within-block)
// pairs are stored individually with CSR adjacency; pairs excluded by
// indexing can be folded into the per-level totals so they still weigh in as
// non-coreferent evidence, or dropped entirely (blocking semantics).
struct ComparisonData {
    int K = 0, F = 0;
    std::vector<int> num_levels;               // per field
    std::vector<std::string> field_names;
    std::vector<int> file_sizes;               // per file
    std::vector<std::string> file_names;
    std::vector<std::uint8_t> dup_allowed;     // per file
    std::vector<int> file_of;                  // per record
    std::vector<int> block_of;                 // per record
    int num_blocks = 0;

    std::vector<FilePair> file_pairs;
    std::vector<int> fp_of;                    // K*K lookup, -1 when not modeled

    std::vector<std::int32_t> pair_a, pair_b;  // candidate pairs, a < b
    std::vector<std::int32_t> pair_fp;
    std::vector<std::uint8_t> levels;          // num_pairs * F

    std::vector<std::int32_t> adj_offset;      // r+1
    std::vector<std::int32_t> adj_other;
    std::vector<std::int32_t> adj_pair;

    std::vector<std::int64_t> cell_offset;     // (fp*F+f) -> base into totals
    std::vector<std::int64_t> totals;          // observed level counts, all modeled pairs

    std::uint64_t universe_pairs = 0;          // |P|
    std::uint64_t modeled_pairs = 0;           // candidates + folded excluded
    bool fold_excluded = true;
    std::uint64_t source_hash = 0;             // provenance of the input files

    int num_pairs() const { return static_cast<int>(pair_a.size()); }
    int fp_index(int k1, int k2) const {
        return fp_of[(k1 <= k2 ? k1 : k2) * K + (k1 <= k2 ? k2 : k1)];
    }
    const std::uint8_t* pair_levels(int p) const { return &levels[std::size_t(p) * F]; }
    std::int64_t cell(int fp, int f, int level) const {
        return totals[cell_offset[std::size_t(fp) * F + f] + level];
    }
    // Candidate pair index for (i, j), or -1.
    int pair_index(int i, int j) const;
};

// Computes comparison vectors over the pair universe.  `fold_excluded`
// selects what happens to out-of-block pairs: true compares them once and
// accumulates them into `totals` (indexing), false skips them entirely
// (blocking).  Within-file pairs exist only for duplicate-allowing files.
ComparisonData build_comparisons(const FileCollection& fc,
                                 const std::vector<ComparatorSpec>& specs,
                                 const CandidateSet& candidates,
                                 bool fold_excluded = true);

// Artifact: `rows_path` holds one CSV row per candidate pair
// (global i, global j, one level column per field, -1 = unobserved, indices
// 1-based); `meta_path` holds the structural header (files, fields, blocks,
// level totals over all modeled pairs, provenance hashes) as JSON.
void write_comparisons(const ComparisonData& data, const std::string& rows_path,
                       const std::string& meta_path);
ComparisonData read_comparisons(const std::string& rows_path,
                                const std::string& meta_path);

}  // namespace multilink
