#include "multilink/comparison.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <json.hpp>

#include "multilink/csv.hpp"
#include "multilink/union_find.hpp"

namespace multilink {

using nlohmann::json;

void ComparatorSpec::validate(const Schema& schema) const {
    if (field < 0 || field >= schema.num_fields())
        throw ConfigError("comparator field index out of range");
    const FieldDef& fd = schema.fields[field];
    if (kind == ComparatorKind::absolute_difference &&
        fd.kind != FieldKind::integer)
        throw ConfigError("absolute-difference comparator requires an integer field ('" +
                          fd.name + "')");
    if (kind == ComparatorKind::binary) {
        if (!breakpoints.empty())
            throw ConfigError("binary comparator takes no breakpoints ('" +
                              fd.name + "')");
        return;
    }
    if (breakpoints.empty())
        throw ConfigError("comparator for '" + fd.name + "' needs breakpoints");
    for (std::size_t i = 1; i < breakpoints.size(); ++i)
        if (!(breakpoints[i - 1] < breakpoints[i]))
            throw ConfigError("breakpoints for '" + fd.name +
                              "' must be strictly increasing");
    if (kind == ComparatorKind::normalized_edit) {
        if (breakpoints.front() < 0.0 || breakpoints.back() > 1.0)
            throw ConfigError("string breakpoints for '" + fd.name +
                              "' must lie in [0,1]");
    } else if (breakpoints.front() < 0.0) {
        throw ConfigError("difference breakpoints for '" + fd.name +
                          "' must be nonnegative");
    }
}

ComparatorSpec default_string_comparator(int field) {
    return ComparatorSpec{field, ComparatorKind::normalized_edit, {0.0, 0.25, 0.5}};
}

std::size_t levenshtein(const std::string& a, const std::string& b) {
    const std::size_t n = a.size(), m = b.size();
    if (n == 0) return m;
    if (m == 0) return n;
    std::vector<std::size_t> prev(m + 1), cur(m + 1);
    std::iota(prev.begin(), prev.end(), std::size_t{0});
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

double normalized_edit_dissimilarity(const std::string& a, const std::string& b) {
    std::size_t longest = std::max(a.size(), b.size());
    if (longest == 0) return 0.0;
    return static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

double field_dissimilarity(const FileCollection& fc, const ComparatorSpec& spec,
                           int rec_a, int rec_b) {
    switch (spec.kind) {
        case ComparatorKind::normalized_edit:
            return normalized_edit_dissimilarity(fc.cell(rec_a, spec.field),
                                                 fc.cell(rec_b, spec.field));
        case ComparatorKind::binary:
            return fc.cell(rec_a, spec.field) == fc.cell(rec_b, spec.field) ? 0.0
                                                                            : 1.0;
        case ComparatorKind::absolute_difference:
            return std::abs(static_cast<double>(fc.int_cell(rec_a, spec.field) -
                                                fc.int_cell(rec_b, spec.field)));
    }
    throw std::logic_error("unreachable comparator kind");
}

int discretize(double value, const ComparatorSpec& spec) {
    if (spec.kind == ComparatorKind::binary) {
        if (value != 0.0 && value != 1.0)
            throw DataError("binary comparison value must be 0 or 1");
        return static_cast<int>(value);
    }
    if (value < 0.0)
        throw DataError("comparison value below declared range");
    if (spec.kind == ComparatorKind::normalized_edit && value > 1.0)
        throw DataError("normalized edit dissimilarity above 1");
    const auto& bp = spec.breakpoints;
    for (std::size_t l = 0; l < bp.size(); ++l)
        if (value <= bp[l]) return static_cast<int>(l);
    return static_cast<int>(bp.size());
}

// ------------------------------------------------------------ candidates ---

CandidateSet all_pairs_candidate(int num_records) {
    CandidateSet cs;
    cs.block_of.assign(num_records, 0);
    cs.num_blocks = num_records > 0 ? 1 : 0;
    return cs;
}

CandidateSet block_by_fields(const FileCollection& fc,
                             const std::vector<int>& fields) {
    const int r = fc.num_records();
    CandidateSet cs;
    cs.block_of.assign(r, -1);
    std::map<std::vector<std::string>, int> seen;
    int next = 0;
    for (int i = 0; i < r; ++i) {
        bool missing = false;
        std::vector<std::string> key;
        key.reserve(fields.size());
        for (int f : fields) {
            if (!fc.observed(i, f)) {
                missing = true;
                break;
            }
            key.push_back(fc.cell(i, f));
        }
        if (missing) {
            cs.block_of[i] = next++;  // unmatchable: singleton block
            continue;
        }
        auto [it, inserted] = seen.emplace(std::move(key), next);
        if (inserted) ++next;
        cs.block_of[i] = it->second;
    }
    cs.num_blocks = next;
    return cs;
}

namespace {

// Iterates the pair universe P: cross-file pairs for every file pair, plus
// within-file pairs of duplicate-allowing files.
template <typename Fn>
void for_each_universe_pair(const FileCollection& fc, Fn&& fn) {
    const int K = fc.num_files();
    for (int k1 = 0; k1 < K; ++k1) {
        for (int k2 = k1; k2 < K; ++k2) {
            if (k1 == k2 && !fc.files[k1].duplicates_allowed) continue;
            const int a0 = fc.file_offset[k1], a1 = fc.file_offset[k1 + 1];
            const int b1 = fc.file_offset[k2 + 1];
            for (int i = a0; i < a1; ++i) {
                int j0 = (k1 == k2) ? i + 1 : fc.file_offset[k2];
                for (int j = j0; j < b1; ++j) fn(k1, k2, i, j);
            }
        }
    }
}

// CSR adjacency over candidate pairs, neighbours sorted ascending.
void build_adjacency(ComparisonData& d, int r) {
    const int np = d.num_pairs();
    d.adj_offset.assign(r + 1, 0);
    for (int p = 0; p < np; ++p) {
        ++d.adj_offset[d.pair_a[p] + 1];
        ++d.adj_offset[d.pair_b[p] + 1];
    }
    for (int i = 0; i < r; ++i) d.adj_offset[i + 1] += d.adj_offset[i];
    d.adj_other.assign(std::size_t(2) * np, 0);
    d.adj_pair.assign(std::size_t(2) * np, 0);
    std::vector<std::int32_t> cursor(d.adj_offset.begin(), d.adj_offset.end() - 1);
    for (int p = 0; p < np; ++p) {
        int a = d.pair_a[p], b = d.pair_b[p];
        d.adj_other[cursor[a]] = b;
        d.adj_pair[cursor[a]++] = p;
        d.adj_other[cursor[b]] = a;
        d.adj_pair[cursor[b]++] = p;
    }
    for (int i = 0; i < r; ++i) {
        std::vector<std::pair<std::int32_t, std::int32_t>> slice;
        for (std::int32_t t = d.adj_offset[i]; t < d.adj_offset[i + 1]; ++t)
            slice.emplace_back(d.adj_other[t], d.adj_pair[t]);
        std::sort(slice.begin(), slice.end());
        for (std::int32_t t = d.adj_offset[i]; t < d.adj_offset[i + 1]; ++t) {
            d.adj_other[t] = slice[t - d.adj_offset[i]].first;
            d.adj_pair[t] = slice[t - d.adj_offset[i]].second;
        }
    }
}

}  // namespace

std::vector<std::pair<int, int>> index_by_disjunction(
    const FileCollection& fc, const std::vector<ComparatorSpec>& specs,
    const std::vector<FieldThreshold>& thresholds) {
    for (const auto& th : thresholds) {
        bool found = false;
        for (const auto& spec : specs) found = found || spec.field == th.field;
        if (!found)
            throw ConfigError("indexing threshold refers to a field without a comparator");
    }
    std::vector<std::pair<int, int>> kept;
    for_each_universe_pair(fc, [&](int, int, int i, int j) {
        for (const auto& th : thresholds) {
            for (const auto& spec : specs) {
                if (spec.field != th.field) continue;
                if (!fc.observed(i, spec.field) || !fc.observed(j, spec.field))
                    continue;  // cannot confirm disagreement
                int level = discretize(field_dissimilarity(fc, spec, i, j), spec);
                if (level > th.max_level) return;  // dropped
            }
        }
        kept.emplace_back(i, j);
    });
    return kept;
}

CandidateSet transitive_closure(int num_records,
                                const std::vector<std::pair<int, int>>& pairs) {
    UnionFind uf(num_records);
    for (const auto& [i, j] : pairs) uf.unite(i, j);
    CandidateSet cs;
    cs.block_of = uf.components();
    cs.num_blocks = cs.block_of.empty()
                        ? 0
                        : *std::max_element(cs.block_of.begin(), cs.block_of.end()) + 1;
    return cs;
}

// ------------------------------------------------------- comparison data ---

int ComparisonData::pair_index(int i, int j) const {
    if (i > j) std::swap(i, j);
    const std::int32_t* lo = adj_other.data() + adj_offset[i];
    const std::int32_t* hi = adj_other.data() + adj_offset[i + 1];
    const std::int32_t* it = std::lower_bound(lo, hi, j);
    if (it == hi || *it != j) return -1;
    return adj_pair[it - adj_other.data()];
}

ComparisonData build_comparisons(const FileCollection& fc,
                                 const std::vector<ComparatorSpec>& specs,
                                 const CandidateSet& candidates,
                                 bool fold_excluded) {
    const int K = fc.num_files();
    const int F = static_cast<int>(specs.size());
    const int r = fc.num_records();
    if (static_cast<int>(candidates.block_of.size()) != r)
        throw ConfigError("candidate set does not cover every record");
    for (const auto& spec : specs) spec.validate(fc.schema);

    ComparisonData d;
    d.K = K;
    d.F = F;
    d.fold_excluded = fold_excluded;
    d.block_of = candidates.block_of;
    d.num_blocks = candidates.num_blocks;
    d.file_of = fc.file_of_rec;
    for (int f = 0; f < F; ++f) {
        d.num_levels.push_back(specs[f].num_levels());
        d.field_names.push_back(fc.schema.fields[specs[f].field].name);
    }
    for (const auto& t : fc.files) {
        d.file_sizes.push_back(t.num_records);
        d.file_names.push_back(t.name);
        d.dup_allowed.push_back(t.duplicates_allowed ? 1 : 0);
    }

    d.fp_of.assign(K * K, -1);
    for (int k1 = 0; k1 < K; ++k1)
        for (int k2 = k1; k2 < K; ++k2) {
            if (k1 == k2 && !fc.files[k1].duplicates_allowed) continue;
            d.fp_of[k1 * K + k2] = static_cast<int>(d.file_pairs.size());
            d.file_pairs.push_back({k1, k2});
        }

    const int num_fp = static_cast<int>(d.file_pairs.size());
    d.cell_offset.assign(std::size_t(num_fp) * F, 0);
    std::int64_t base = 0;
    for (int fp = 0; fp < num_fp; ++fp)
        for (int f = 0; f < F; ++f) {
            d.cell_offset[std::size_t(fp) * F + f] = base;
            base += d.num_levels[f];
        }
    d.totals.assign(base, 0);

    std::vector<std::uint8_t> row(F);
    for_each_universe_pair(fc, [&](int k1, int k2, int i, int j) {
        ++d.universe_pairs;
        bool candidate = d.block_of[i] == d.block_of[j];
        if (!candidate && !fold_excluded) return;
        ++d.modeled_pairs;
        const int fp = d.fp_of[k1 * K + k2];
        for (int f = 0; f < F; ++f) {
            const int fld = specs[f].field;
            if (!fc.observed(i, fld) || !fc.observed(j, fld)) {
                row[f] = kLevelUnobserved;
                continue;
            }
            int level = discretize(field_dissimilarity(fc, specs[f], i, j), specs[f]);
            row[f] = static_cast<std::uint8_t>(level);
            ++d.totals[d.cell_offset[std::size_t(fp) * F + f] + level];
        }
        if (candidate) {
            d.pair_a.push_back(i);
            d.pair_b.push_back(j);
            d.pair_fp.push_back(fp);
            d.levels.insert(d.levels.end(), row.begin(), row.end());
        }
    });

    build_adjacency(d, r);
    return d;
}

// ------------------------------------------------------------- artifacts ---

void write_comparisons(const ComparisonData& d, const std::string& rows_path,
                       const std::string& meta_path) {
    std::string out;
    out += "i,j";
    for (const auto& name : d.field_names) out += "," + csv_escape(name);
    out += '\n';
    for (int p = 0; p < d.num_pairs(); ++p) {
        out += std::to_string(d.pair_a[p] + 1);
        out += ',';
        out += std::to_string(d.pair_b[p] + 1);
        const std::uint8_t* lv = d.pair_levels(p);
        for (int f = 0; f < d.F; ++f) {
            out += ',';
            out += (lv[f] == kLevelUnobserved) ? "-1" : std::to_string(int(lv[f]));
        }
        out += '\n';
    }
    write_text_file(rows_path, out);

    json meta;
    meta["format"] = "multilink-comparisons";
    meta["version"] = 1;
    meta["num_files"] = d.K;
    meta["num_fields"] = d.F;
    meta["file_names"] = d.file_names;
    meta["file_sizes"] = d.file_sizes;
    meta["duplicates_allowed"] = std::vector<int>(d.dup_allowed.begin(), d.dup_allowed.end());
    meta["field_names"] = d.field_names;
    meta["num_levels"] = d.num_levels;
    meta["block_of"] = d.block_of;
    meta["num_blocks"] = d.num_blocks;
    meta["universe_pairs"] = d.universe_pairs;
    meta["modeled_pairs"] = d.modeled_pairs;
    meta["fold_excluded"] = d.fold_excluded;
    meta["totals"] = d.totals;
    meta["source_hash"] = d.source_hash;
    meta["rows_hash"] = fnv1a64(out);
    write_text_file(meta_path, meta.dump(2) + "\n");
}

ComparisonData read_comparisons(const std::string& rows_path,
                                const std::string& meta_path) {
    json meta = json::parse(read_text_file(meta_path));
    if (meta.value("format", "") != "multilink-comparisons")
        throw DataError(meta_path + ": not a comparison artifact");
    ComparisonData d;
    d.K = meta.at("num_files").get<int>();
    d.F = meta.at("num_fields").get<int>();
    d.file_names = meta.at("file_names").get<std::vector<std::string>>();
    d.file_sizes = meta.at("file_sizes").get<std::vector<int>>();
    for (int v : meta.at("duplicates_allowed").get<std::vector<int>>())
        d.dup_allowed.push_back(static_cast<std::uint8_t>(v));
    d.field_names = meta.at("field_names").get<std::vector<std::string>>();
    d.num_levels = meta.at("num_levels").get<std::vector<int>>();
    d.block_of = meta.at("block_of").get<std::vector<int>>();
    d.num_blocks = meta.at("num_blocks").get<int>();
    d.universe_pairs = meta.at("universe_pairs").get<std::uint64_t>();
    d.modeled_pairs = meta.at("modeled_pairs").get<std::uint64_t>();
    d.fold_excluded = meta.at("fold_excluded").get<bool>();
    d.totals = meta.at("totals").get<std::vector<std::int64_t>>();
    d.source_hash = meta.at("source_hash").get<std::uint64_t>();

    const int r = std::accumulate(d.file_sizes.begin(), d.file_sizes.end(), 0);
    d.file_of.reserve(r);
    std::vector<int> offset{0};
    for (int k = 0; k < d.K; ++k) {
        d.file_of.insert(d.file_of.end(), d.file_sizes[k], k);
        offset.push_back(offset.back() + d.file_sizes[k]);
    }
    if (static_cast<int>(d.block_of.size()) != r)
        throw DataError(meta_path + ": block table does not match file sizes");

    d.fp_of.assign(d.K * d.K, -1);
    for (int k1 = 0; k1 < d.K; ++k1)
        for (int k2 = k1; k2 < d.K; ++k2) {
            if (k1 == k2 && !d.dup_allowed[k1]) continue;
            d.fp_of[k1 * d.K + k2] = static_cast<int>(d.file_pairs.size());
            d.file_pairs.push_back({k1, k2});
        }
    const int num_fp = static_cast<int>(d.file_pairs.size());
    d.cell_offset.assign(std::size_t(num_fp) * d.F, 0);
    std::int64_t base = 0;
    for (int fp = 0; fp < num_fp; ++fp)
        for (int f = 0; f < d.F; ++f) {
            d.cell_offset[std::size_t(fp) * d.F + f] = base;
            base += d.num_levels[f];
        }
    if (static_cast<std::int64_t>(d.totals.size()) != base)
        throw DataError(meta_path + ": totals tensor has the wrong size");

    auto rows = read_csv(rows_path);
    if (rows.empty() || rows.front().size() != std::size_t(2 + d.F))
        throw DataError(rows_path + ": malformed comparison rows");
    for (std::size_t rix = 1; rix < rows.size(); ++rix) {
        const auto& row = rows[rix];
        if (row.size() != std::size_t(2 + d.F))
            throw DataError(rows_path + ": row " + std::to_string(rix + 1) +
                            " has the wrong arity");
        int i = std::stoi(row[0]) - 1;
        int j = std::stoi(row[1]) - 1;
        if (i < 0 || j < 0 || i >= r || j >= r || i >= j)
            throw DataError(rows_path + ": bad pair indices at row " +
                            std::to_string(rix + 1));
        int fp = d.fp_of[d.file_of[i] * d.K + d.file_of[j]];
        if (fp < 0)
            throw DataError(rows_path + ": pair not in the modeled universe at row " +
                            std::to_string(rix + 1));
        d.pair_a.push_back(i);
        d.pair_b.push_back(j);
        d.pair_fp.push_back(fp);
        for (int f = 0; f < d.F; ++f) {
            int lv = std::stoi(row[2 + f]);
            if (lv < -1 || lv >= d.num_levels[f])
                throw DataError(rows_path + ": level out of range at row " +
                                std::to_string(rix + 1));
            d.levels.push_back(lv < 0 ? kLevelUnobserved
                                      : static_cast<std::uint8_t>(lv));
        }
    }

    build_adjacency(d, r);
    return d;
}

}  // namespace multilink
