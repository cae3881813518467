#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "multilink/util.hpp"

namespace multilink {

enum class FieldKind { string_field, categorical, integer };

struct FieldDef {
    std::string name;
    FieldKind kind = FieldKind::string_field;
};

// Record layout shared by all files.  A cell is missing when it equals one of
// the sentinels ("" or "NA" by default).
struct Schema {
    std::vector<FieldDef> fields;
    std::vector<std::string> missing_sentinels = {"", "NA"};

    int num_fields() const { return static_cast<int>(fields.size()); }
    bool is_missing(const std::string& cell) const {
        for (const auto& s : missing_sentinels)
            if (cell == s) return true;
        return false;
    }
    int field_index(const std::string& name) const;
};

struct FileSpec {
    std::string path;
    std::string name;
    bool duplicates_allowed = false;  // duplicate-free unless stated
};

// One file's records in columnar form.
struct FileTable {
    std::string name;
    bool duplicates_allowed = false;
    int num_records = 0;
    // columns[f][i]: raw cell; present[f][i]: cell observed;
    // int_values[f][i]: parsed value for integer fields (0 when absent).
    std::vector<std::vector<std::string>> columns;
    std::vector<std::vector<std::uint8_t>> present;
    std::vector<std::vector<long long>> int_values;
};

// All files, concatenated record index space 0..r-1 (reported 1..r in
// artifacts).  Record i belongs to file_of(i); files keep their input order.
struct FileCollection {
    Schema schema;
    std::vector<FileTable> files;
    std::vector<int> file_offset;   // size K+1; file k covers [off[k], off[k+1])
    std::vector<int> file_of_rec;   // size r

    int num_files() const { return static_cast<int>(files.size()); }
    int num_records() const { return file_offset.empty() ? 0 : file_offset.back(); }
    int file_of(int rec) const { return file_of_rec[rec]; }
    int local_index(int rec) const { return rec - file_offset[file_of_rec[rec]]; }

    bool observed(int rec, int f) const {
        return files[file_of_rec[rec]].present[f][local_index(rec)] != 0;
    }
    const std::string& cell(int rec, int f) const {
        return files[file_of_rec[rec]].columns[f][local_index(rec)];
    }
    long long int_cell(int rec, int f) const {
        return files[file_of_rec[rec]].int_values[f][local_index(rec)];
    }

    void rebuild_index();  // recompute offsets / file_of_rec from files
};

// Reads each CSV (header row must equal the schema field names, in order),
// validates cell types, and assigns consecutive global indices.
FileCollection load_files(const std::vector<FileSpec>& specs, const Schema& schema);

// Builds a FileTable from in-memory rows (no header row); used by the
// simulation lab and tests.
FileTable make_table(const Schema& schema, const std::string& name,
                     bool duplicates_allowed,
                     const std::vector<std::vector<std::string>>& rows,
                     const std::string& origin = "<memory>");

void write_file_csv(const FileCollection& fc, int k, const std::string& path);

}  // namespace multilink
