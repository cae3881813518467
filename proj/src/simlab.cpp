#include "multilink/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

#include "multilink/csv.hpp"
#include "multilink/estimator.hpp"
#include "multilink/prior.hpp"
#include "multilink/util.hpp"

#ifndef MULTILINK_DATA_DIR
#define MULTILINK_DATA_DIR "data"
#endif

namespace multilink {

void OverlapScenario::validate() const {
    if (pattern_prob[0] != 0.0)
        throw ConfigError("scenario: the empty inclusion pattern must have probability 0");
    double total = 0.0;
    for (double p : pattern_prob) {
        if (!(p >= 0.0)) throw ConfigError("scenario: negative pattern probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw ConfigError("scenario: pattern probabilities must sum to 1");
    if (duplicates) {
        if (!(size_mean > 0.0)) throw ConfigError("scenario: size mean must be positive");
        if (max_copies < 1) throw ConfigError("scenario: max copies must be >= 1");
    }
}

OverlapScenario scenario_preset(const std::string& name) {
    OverlapScenario sc;
    sc.name = name;
    auto fill = [&](double single, double pair, double triple) {
        sc.pattern_prob = {0.0, single, single, pair, single, pair, pair, triple};
    };
    if (name == "high") {
        fill(0.4 / 3, 0.15, 0.15);
    } else if (name == "medium") {
        fill(0.7 / 3, 0.05, 0.15);
    } else if (name == "low") {
        fill(0.8 / 3, 0.05 / 3, 0.15);
    } else if (name == "no-three-file") {
        fill(0.55 / 3, 0.15, 0.0);
    } else if (name == "duplicates") {
        fill(0.3, 0.025, 0.025);
        sc.duplicates = true;
        sc.size_mean = 0.1;
        sc.max_copies = 5;
    } else {
        throw ConfigError("unknown scenario preset: " + name);
    }
    sc.validate();
    return sc;
}

std::vector<std::string> scenario_names() {
    return {"high", "medium", "low", "no-three-file", "duplicates"};
}

// ------------------------------------------------------------ generation ---

std::string default_tables_dir() {
    if (const char* env = std::getenv("MULTILINK_DATA"); env && *env) return env;
    return MULTILINK_DATA_DIR;
}

namespace {

std::vector<std::string> read_lines(const std::string& path) {
    std::vector<std::string> lines;
    std::string cur;
    for (char ch : read_text_file(path)) {
        if (ch == '\n') {
            if (!cur.empty()) lines.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    if (lines.empty()) throw DataError(path + ": empty lookup table");
    return lines;
}

std::vector<std::vector<std::string>> read_table(const std::string& path,
                                                 std::size_t columns) {
    auto rows = read_csv(path);
    if (rows.size() < 2) throw DataError(path + ": empty lookup table");
    rows.erase(rows.begin());  // header
    for (const auto& row : rows)
        if (row.size() != columns)
            throw DataError(path + ": expected " + std::to_string(columns) +
                            " columns");
    return rows;
}

}  // namespace

LookupTables LookupTables::load(const std::string& dir) {
    LookupTables t;
    for (const auto& row : read_table(dir + "/given-names.csv", 2)) {
        if (row[0] == "f")
            t.given_female.push_back(row[1]);
        else if (row[0] == "m")
            t.given_male.push_back(row[1]);
        else
            throw DataError(dir + "/given-names.csv: sex column must be f or m");
    }
    if (t.given_female.empty() || t.given_male.empty())
        throw DataError(dir + "/given-names.csv: need names for both sexes");
    t.family = read_lines(dir + "/family-names.txt");
    t.occupations = read_lines(dir + "/occupations.txt");
    t.age_bands = read_lines(dir + "/age-bands.txt");
    for (const auto& row : read_table(dir + "/regions.csv", 2))
        t.regions.emplace_back(row[0], row[1]);
    for (const auto& row : read_table(dir + "/ocr-confusions.csv", 2)) {
        if (row[0].empty()) throw DataError(dir + ": empty confusion pattern");
        t.ocr.emplace_back(row[0], row[1]);
    }
    for (const auto& row : read_table(dir + "/keyboard-adjacency.csv", 2)) {
        if (row[0].size() != 1 || row[1].empty())
            throw DataError(dir + "/keyboard-adjacency.csv: bad row");
        t.keyboard[row[0][0]] = row[1];
    }
    for (const auto& row : read_table(dir + "/misspellings.csv", 2))
        t.misspellings.emplace_back(row[0], row[1]);
    return t;
}

Schema sim_schema() {
    Schema schema;
    schema.fields = {{"sex", FieldKind::categorical},
                     {"given_name", FieldKind::string_field},
                     {"family_name", FieldKind::string_field},
                     {"age_band", FieldKind::categorical},
                     {"occupation", FieldKind::categorical},
                     {"postal_code", FieldKind::string_field},
                     {"phone", FieldKind::string_field}};
    return schema;
}

std::vector<ComparatorSpec> sim_comparators() {
    std::vector<ComparatorSpec> specs(7);
    specs[0] = {0, ComparatorKind::binary, {}};
    specs[1] = default_string_comparator(1);
    specs[2] = default_string_comparator(2);
    specs[3] = {3, ComparatorKind::binary, {}};
    specs[4] = {4, ComparatorKind::binary, {}};
    specs[5] = default_string_comparator(5);
    specs[6] = default_string_comparator(6);
    return specs;
}

namespace {

const std::string& pick(const std::vector<std::string>& v, Rng& rng) {
    return v[rng.uniform_below(v.size())];
}

std::string digits(int count, Rng& rng) {
    std::string s;
    for (int i = 0; i < count; ++i)
        s += static_cast<char>('0' + rng.uniform_below(10));
    return s;
}

}  // namespace

SimTruth generate_truth(const OverlapScenario& scenario, int num_entities,
                        const LookupTables& tables, Rng& rng) {
    scenario.validate();
    if (num_entities < 1) throw ConfigError("need at least one entity");
    const Schema schema = sim_schema();
    SizePrior copies = scenario.duplicates
                           ? SizePrior::truncated_poisson(scenario.size_mean,
                                                          scenario.max_copies)
                           : SizePrior::point_mass_one();

    std::array<std::vector<std::vector<std::string>>, kSimFiles> rows;
    std::array<std::vector<std::int32_t>, kSimFiles> labels;
    std::span<const double> probs(scenario.pattern_prob.data() + 1, 7);
    for (int e = 0; e < num_entities; ++e) {
        const int pattern = static_cast<int>(rng.categorical(probs)) + 1;
        std::vector<std::string> base(7);
        const bool female = rng.uniform_below(2) == 0;
        base[0] = female ? "f" : "m";
        base[1] = pick(female ? tables.given_female : tables.given_male, rng);
        base[2] = pick(tables.family, rng);
        base[3] = pick(tables.age_bands, rng);
        base[4] = pick(tables.occupations, rng);
        const auto& region = tables.regions[rng.uniform_below(tables.regions.size())];
        base[5] = region.first + digits(3, rng);
        base[6] = region.second + digits(7, rng);
        for (int k = 0; k < kSimFiles; ++k) {
            if (!(pattern >> k & 1)) continue;
            const int count = copies.sample(rng);
            for (int c = 0; c < count; ++c) {
                rows[k].push_back(base);
                labels[k].push_back(e);
            }
        }
    }

    SimTruth truth;
    truth.files.schema = schema;
    const std::array<std::string, kSimFiles> names = {"file1", "file2", "file3"};
    for (int k = 0; k < kSimFiles; ++k) {
        truth.files.files.push_back(
            make_table(schema, names[k], scenario.duplicates, rows[k]));
        truth.labels.insert(truth.labels.end(), labels[k].begin(), labels[k].end());
    }
    truth.files.rebuild_index();
    truth.num_entities = num_entities;
    return truth;
}

// ------------------------------------------------------------ distortion ---

namespace {

enum class ErrorKind { missing, edit, ocr, keyboard, misspelling };

const std::vector<ErrorKind>& eligible_kinds(int field) {
    static const std::vector<ErrorKind> name_kinds = {
        ErrorKind::edit, ErrorKind::ocr, ErrorKind::keyboard,
        ErrorKind::misspelling};
    static const std::vector<ErrorKind> missing_only = {ErrorKind::missing};
    static const std::vector<ErrorKind> number_kinds = {
        ErrorKind::missing, ErrorKind::edit, ErrorKind::ocr,
        ErrorKind::keyboard};
    switch (field) {
        case 1:
        case 2:
            return name_kinds;
        case 5:
        case 6:
            return number_kinds;
        default:
            return missing_only;  // sex, age band, occupation
    }
}

const std::string& alphabet_for(int field) {
    static const std::string letters = "abcdefghijklmnopqrstuvwxyz";
    static const std::string numerals = "0123456789";
    return (field == 5 || field == 6) ? numerals : letters;
}

void apply_edit(std::string& value, const std::string& alphabet, Rng& rng) {
    int op = static_cast<int>(rng.uniform_below(3));
    if (op == 1 && value.size() <= 1) op = 2;  // keep values non-empty
    if (op == 2 && value.empty()) op = 0;
    if (op == 0) {  // insert
        std::size_t pos = rng.uniform_below(value.size() + 1);
        value.insert(value.begin() + pos,
                     alphabet[rng.uniform_below(alphabet.size())]);
    } else if (op == 1) {  // delete
        value.erase(value.begin() + rng.uniform_below(value.size()));
    } else {  // substitute, never with the same character
        std::size_t pos = rng.uniform_below(value.size());
        char ch = alphabet[rng.uniform_below(alphabet.size())];
        if (ch == value[pos]) {
            std::size_t at = alphabet.find(ch);
            ch = alphabet[(at + 1) % alphabet.size()];
        }
        value[pos] = ch;
    }
}

bool apply_ocr(std::string& value, const LookupTables& tables, Rng& rng) {
    std::vector<std::size_t> applicable;
    for (std::size_t i = 0; i < tables.ocr.size(); ++i)
        if (value.find(tables.ocr[i].first) != std::string::npos)
            applicable.push_back(i);
    if (applicable.empty()) return false;
    const auto& [pat, rep] =
        tables.ocr[applicable[rng.uniform_below(applicable.size())]];
    std::vector<std::size_t> at;
    for (std::size_t pos = value.find(pat); pos != std::string::npos;
         pos = value.find(pat, pos + 1))
        at.push_back(pos);
    value.replace(at[rng.uniform_below(at.size())], pat.size(), rep);
    return true;
}

bool apply_keyboard(std::string& value, const LookupTables& tables, Rng& rng) {
    std::vector<std::size_t> positions;
    for (std::size_t i = 0; i < value.size(); ++i)
        if (tables.keyboard.count(value[i])) positions.push_back(i);
    if (positions.empty()) return false;
    std::size_t pos = positions[rng.uniform_below(positions.size())];
    const std::string& near = tables.keyboard.at(value[pos]);
    value[pos] = near[rng.uniform_below(near.size())];
    return true;
}

bool apply_misspelling(std::string& value, const LookupTables& tables, Rng& rng) {
    std::vector<std::string> variants;
    for (const auto& [word, variant] : tables.misspellings) {
        if (value == word) variants.push_back(variant);
        if (value == variant) variants.push_back(word);
    }
    if (variants.empty()) return false;
    value = variants[rng.uniform_below(variants.size())];
    return true;
}

}  // namespace

FileCollection distort(const FileCollection& clean, const LookupTables& tables,
                       int errors_per_record, Rng& rng) {
    if (errors_per_record < 0) throw ConfigError("errors per record must be >= 0");
    if (clean.schema.num_fields() != 7)
        throw ConfigError("the distorter expects the seven-field layout");
    FileCollection out = clean;
    const int F = 7;
    for (auto& table : out.files) {
        for (int i = 0; i < table.num_records; ++i) {
            std::array<int, 7> hits{};
            int remaining = errors_per_record;
            while (remaining > 0) {
                std::vector<int> round;
                for (int f = 0; f < F; ++f)
                    if (hits[f] < 2 && table.present[f][i]) round.push_back(f);
                if (round.empty()) break;  // every field capped or missing
                rng.shuffle(round);
                for (int f : round) {
                    if (remaining == 0) break;
                    if (!table.present[f][i]) continue;  // went missing this round
                    std::string value = table.columns[f][i];
                    const auto& kinds = eligible_kinds(f);
                    ErrorKind kind = kinds[rng.uniform_below(kinds.size())];
                    bool applied = true;
                    switch (kind) {
                        case ErrorKind::missing:
                            table.columns[f][i].clear();
                            table.present[f][i] = 0;
                            break;
                        case ErrorKind::ocr:
                            applied = apply_ocr(value, tables, rng);
                            break;
                        case ErrorKind::keyboard:
                            applied = apply_keyboard(value, tables, rng);
                            break;
                        case ErrorKind::misspelling:
                            applied = apply_misspelling(value, tables, rng);
                            break;
                        case ErrorKind::edit:
                            break;
                    }
                    if (kind != ErrorKind::missing) {
                        if (kind == ErrorKind::edit || !applied)
                            apply_edit(value, alphabet_for(f), rng);
                        table.columns[f][i] = value;
                    }
                    ++hits[f];
                    --remaining;
                }
            }
        }
    }
    return out;
}

// --------------------------------------------------------------- scoring ---

Metrics score_estimate(const std::vector<std::int32_t>& truth,
                       const std::vector<std::int32_t>& decisions) {
    if (truth.size() != decisions.size())
        throw std::invalid_argument("score: truth/decision size mismatch");
    const std::size_t r = truth.size();
    if (r == 0) throw std::invalid_argument("score: no records");

    std::map<std::int32_t, long long> tcnt, ecnt, all_tcnt;
    std::map<std::pair<std::int32_t, std::int32_t>, long long> both;
    long long abstained = 0;
    for (std::size_t i = 0; i < r; ++i) {
        ++all_tcnt[truth[i]];
        if (decisions[i] == kAbstain) {
            ++abstained;
            continue;
        }
        ++tcnt[truth[i]];
        ++ecnt[decisions[i]];
        ++both[{truth[i], decisions[i]}];
    }
    auto pairs2 = [](long long c) { return c * (c - 1) / 2; };
    long long true_pairs = 0, est_pairs = 0, tm = 0;
    for (const auto& [z, c] : tcnt) true_pairs += pairs2(c);
    for (const auto& [z, c] : ecnt) est_pairs += pairs2(c);
    for (const auto& [zz, c] : both) tm += pairs2(c);
    const long long fm = est_pairs - tm, fnm = true_pairs - tm;

    Metrics m;
    const double na = std::numeric_limits<double>::quiet_NaN();
    m.precision = tm + fm > 0 ? static_cast<double>(tm) / (tm + fm) : na;
    m.recall = tm + fnm > 0 ? static_cast<double>(tm) / (tm + fnm) : na;
    m.abstention = static_cast<double>(abstained) / r;
    m.n_true = static_cast<int>(all_tcnt.size());
    m.n_est = static_cast<int>(ecnt.size() + abstained);
    return m;
}

void write_truth_labels(const SimTruth& truth, const std::string& path) {
    std::string out = "global_index,file,entity\n";
    for (std::size_t i = 0; i < truth.labels.size(); ++i) {
        out += std::to_string(i + 1);
        out += ',';
        out += csv_escape(truth.files.files[truth.files.file_of(static_cast<int>(i))].name);
        out += ',';
        out += std::to_string(truth.labels[i] + 1);
        out += '\n';
    }
    write_text_file(path, out);
}

std::vector<std::int32_t> read_truth_labels(const std::string& path) {
    auto rows = read_csv(path);
    if (rows.empty() || rows.front().size() != 3)
        throw DataError(path + ": not a truth-label file");
    std::vector<std::int32_t> labels(rows.size() - 1);
    for (std::size_t x = 1; x < rows.size(); ++x) {
        std::size_t i = std::stoul(rows[x][0]);
        if (i < 1 || i > labels.size())
            throw DataError(path + ": record index out of range");
        labels[i - 1] = std::stoi(rows[x][2]) - 1;
    }
    return labels;
}

}  // namespace multilink
