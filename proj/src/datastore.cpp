#include "multilink/datastore.hpp"

#include <charconv>

#include "multilink/csv.hpp"

namespace multilink {

int Schema::field_index(const std::string& name) const {
    for (std::size_t f = 0; f < fields.size(); ++f)
        if (fields[f].name == name) return static_cast<int>(f);
    throw ConfigError("unknown field: " + name);
}

void FileCollection::rebuild_index() {
    file_offset.assign(1, 0);
    file_of_rec.clear();
    for (std::size_t k = 0; k < files.size(); ++k) {
        file_offset.push_back(file_offset.back() + files[k].num_records);
        file_of_rec.insert(file_of_rec.end(), files[k].num_records,
                           static_cast<int>(k));
    }
}

FileTable make_table(const Schema& schema, const std::string& name,
                     bool duplicates_allowed,
                     const std::vector<std::vector<std::string>>& rows,
                     const std::string& origin) {
    const int F = schema.num_fields();
    FileTable t;
    t.name = name;
    t.duplicates_allowed = duplicates_allowed;
    t.num_records = static_cast<int>(rows.size());
    t.columns.assign(F, {});
    t.present.assign(F, {});
    t.int_values.assign(F, {});
    for (int f = 0; f < F; ++f) {
        t.columns[f].reserve(rows.size());
        t.present[f].reserve(rows.size());
        t.int_values[f].reserve(rows.size());
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (static_cast<int>(row.size()) != F)
            throw DataError(origin + ": row " + std::to_string(i + 1) + " has " +
                            std::to_string(row.size()) + " cells, expected " +
                            std::to_string(F));
        for (int f = 0; f < F; ++f) {
            const std::string& cell = row[f];
            bool missing = schema.is_missing(cell);
            long long value = 0;
            if (!missing && schema.fields[f].kind == FieldKind::integer) {
                const char* b = cell.data();
                const char* e = b + cell.size();
                auto res = std::from_chars(b, e, value);
                if (res.ec != std::errc() || res.ptr != e)
                    throw DataError(origin + ": row " + std::to_string(i + 1) +
                                    ", column '" + schema.fields[f].name +
                                    "': not an integer: '" + cell + "'");
            }
            t.columns[f].push_back(cell);
            t.present[f].push_back(missing ? 0 : 1);
            t.int_values[f].push_back(value);
        }
    }
    return t;
}

FileCollection load_files(const std::vector<FileSpec>& specs, const Schema& schema) {
    if (specs.empty()) throw ConfigError("no input files given");
    FileCollection fc;
    fc.schema = schema;
    for (const auto& spec : specs) {
        auto rows = read_csv(spec.path);
        if (rows.empty()) throw DataError(spec.path + ": empty file");
        const auto& header = rows.front();
        if (static_cast<int>(header.size()) != schema.num_fields())
            throw DataError(spec.path + ": header has " +
                            std::to_string(header.size()) + " columns, expected " +
                            std::to_string(schema.num_fields()));
        for (int f = 0; f < schema.num_fields(); ++f)
            if (header[f] != schema.fields[f].name)
                throw DataError(spec.path + ": header column " +
                                std::to_string(f + 1) + " is '" + header[f] +
                                "', expected '" + schema.fields[f].name + "'");
        rows.erase(rows.begin());
        fc.files.push_back(
            make_table(schema, spec.name.empty() ? spec.path : spec.name,
                       spec.duplicates_allowed, rows, spec.path));
    }
    fc.rebuild_index();
    return fc;
}

void write_file_csv(const FileCollection& fc, int k, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header;
    for (const auto& fd : fc.schema.fields) header.push_back(fd.name);
    rows.push_back(header);
    const FileTable& t = fc.files[k];
    for (int i = 0; i < t.num_records; ++i) {
        std::vector<std::string> row;
        for (int f = 0; f < fc.schema.num_fields(); ++f)
            row.push_back(t.columns[f][i]);
        rows.push_back(row);
    }
    write_csv(path, rows);
}

}  // namespace multilink
