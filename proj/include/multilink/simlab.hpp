#pragma once

// Synthetic-data laboratory: draws ground-truth populations spread over three
// files under configurable overlap/duplication scenarios, corrupts fields
// with realistic error processes, and scores linkage estimates against the
// generating truth.

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "multilink/comparison.hpp"
#include "multilink/datastore.hpp"
#include "multilink/rng.hpp"

namespace multilink {

inline constexpr int kSimFiles = 3;

// Probability of each non-empty file-inclusion bit pattern (bit k set = the
// entity appears in file k), plus the within-file duplication model.
struct OverlapScenario {
    std::string name;
    std::array<double, 8> pattern_prob{};  // index = bit pattern; [0] must be 0
    bool duplicates = false;               // files may hold several copies
    double size_mean = 0.1;     // truncated-Poisson mean for per-file copies
    int max_copies = 5;         // copies drawn from {1..max_copies}

    void validate() const;
};

// Presets: "high", "medium", "low", "no-three-file" (duplicate-free overlap
// settings) and "duplicates" (very low overlap, within-file copies drawn from
// a truncated Poisson, mean 0.1 unless overridden).
OverlapScenario scenario_preset(const std::string& name);
std::vector<std::string> scenario_names();

// ------------------------------------------------------------ generation ---

// Bundled lookup tables driving record synthesis and distortion.
struct LookupTables {
    std::vector<std::string> given_female, given_male, family, occupations;
    std::vector<std::string> age_bands;
    // postal prefix -> phone prefix (area dependency between the two fields)
    std::vector<std::pair<std::string, std::string>> regions;
    std::vector<std::pair<std::string, std::string>> ocr;  // pattern -> replacement
    std::unordered_map<char, std::string> keyboard;        // key -> adjacent keys
    std::vector<std::pair<std::string, std::string>> misspellings;

    static LookupTables load(const std::string& dir);
};

// Table directory resolution: explicit setting, then the MULTILINK_DATA
// environment variable, then the location baked in at build time.
std::string default_tables_dir();

// Seven-field record layout: sex, given name, family name, age band,
// occupation, postal code, phone number.
Schema sim_schema();

// Comparators for that layout: normalised edit distance with cuts
// {0, .25, .5} on the name/postal/phone fields, binary elsewhere.
std::vector<ComparatorSpec> sim_comparators();

struct SimTruth {
    FileCollection files;              // clean records
    std::vector<std::int32_t> labels;  // global record index -> entity
    int num_entities = 0;              // entities with at least one record
};

// Draws `num_entities` entities: an inclusion pattern each, per-file copy
// counts per the duplication model, and one clean base record replicated to
// all copies.
SimTruth generate_truth(const OverlapScenario& scenario, int num_entities,
                        const LookupTables& tables, Rng& rng);

// ------------------------------------------------------------ distortion ---

// Applies exactly `errors_per_record` field errors to every record: target
// fields are drawn uniformly without replacement (starting a fresh round when
// all fields were hit once), a field takes at most two errors, and the error
// kind is uniform among the field's eligible kinds (names: edit/OCR/keyboard/
// misspelling; age, sex, occupation: missing; postal, phone: missing/edit/
// OCR/keyboard).  Kinds that cannot apply to the current value fall back to a
// plain edit.
FileCollection distort(const FileCollection& clean, const LookupTables& tables,
                       int errors_per_record, Rng& rng);

// ------------------------------------------------------------- scoring ---

// Pairwise quality of a linkage decision vector against the generating truth.
// Pair tallies run over non-abstained records only; precision and recall are
// NaN ("NA") when their denominators are empty.  Entity-count accuracy treats
// every abstained record as its own entity.
struct Metrics {
    double precision = 0.0;
    double recall = 0.0;
    double abstention = 0.0;
    int n_true = 0;
    int n_est = 0;

    double n_bias() const { return n_est - n_true; }
};

Metrics score_estimate(const std::vector<std::int32_t>& truth,
                       const std::vector<std::int32_t>& decisions);

// Truth-label artifact: CSV with global_index, file, entity columns.
void write_truth_labels(const SimTruth& truth, const std::string& path);
std::vector<std::int32_t> read_truth_labels(const std::string& path);

}  // namespace multilink
