#include <doctest.h>

#include <string>
#include <vector>

#include "multilink/csv.hpp"
#include "multilink/datastore.hpp"
#include "test_helpers.hpp"

using namespace multilink;

namespace {

Schema three_field_schema() {
    Schema s;
    s.fields = {{"name", FieldKind::string_field},
                {"city", FieldKind::categorical},
                {"age", FieldKind::integer}};
    return s;
}

}  // namespace

TEST_CASE("schema resolves field names and missing sentinels") {
    Schema s = three_field_schema();
    CHECK(s.num_fields() == 3);
    CHECK(s.field_index("age") == 2);
    CHECK_THROWS_AS((void)s.field_index("zip"), ConfigError);
    CHECK(s.is_missing(""));
    CHECK(s.is_missing("NA"));
    CHECK_FALSE(s.is_missing("na"));
    s.missing_sentinels = {"?"};
    CHECK(s.is_missing("?"));
    CHECK_FALSE(s.is_missing(""));
}

TEST_CASE("load_files validates headers, types and assigns global indices") {
    testutil::ScratchDir tmp("load");
    Schema s = three_field_schema();
    write_csv(tmp.file("a.csv"), {{"name", "city", "age"},
                                  {"ann", "oslo", "31"},
                                  {"bo", "", "NA"}});
    write_csv(tmp.file("b.csv"),
              {{"name", "city", "age"}, {"cy", "rome", "55"}});

    FileCollection fc = load_files({{tmp.file("a.csv"), "A", false},
                                    {tmp.file("b.csv"), "B", true}},
                                   s);
    CHECK(fc.num_files() == 2);
    CHECK(fc.num_records() == 3);
    CHECK(fc.file_offset == std::vector<int>{0, 2, 3});
    CHECK(fc.file_of(0) == 0);
    CHECK(fc.file_of(2) == 1);
    CHECK(fc.local_index(2) == 0);
    CHECK(fc.files[0].name == "A");
    CHECK_FALSE(fc.files[0].duplicates_allowed);
    CHECK(fc.files[1].duplicates_allowed);

    CHECK(fc.cell(0, 0) == "ann");
    CHECK(fc.observed(0, 2));
    CHECK(fc.int_cell(0, 2) == 31);
    CHECK_FALSE(fc.observed(1, 1));  // empty sentinel
    CHECK_FALSE(fc.observed(1, 2));  // NA sentinel
    CHECK(fc.cell(2, 1) == "rome");

    // Wrong header order is a data error.
    write_csv(tmp.file("bad1.csv"),
              {{"city", "name", "age"}, {"x", "y", "1"}});
    CHECK_THROWS_AS(load_files({{tmp.file("bad1.csv"), "C", false}}, s),
                    DataError);
    // Non-integer content in an integer field is a data error.
    write_csv(tmp.file("bad2.csv"),
              {{"name", "city", "age"}, {"x", "y", "old"}});
    CHECK_THROWS_AS(load_files({{tmp.file("bad2.csv"), "C", false}}, s),
                    DataError);
    // Ragged rows are a data error.
    write_csv(tmp.file("bad3.csv"), {{"name", "city", "age"}, {"x", "y"}});
    CHECK_THROWS_AS(load_files({{tmp.file("bad3.csv"), "C", false}}, s),
                    DataError);
}

TEST_CASE("make_table + rebuild_index mirror load_files") {
    Schema s = three_field_schema();
    FileCollection fc;
    fc.schema = s;
    fc.files.push_back(make_table(s, "A", false,
                                  {{"ann", "oslo", "31"}, {"bo", "", "NA"}}));
    fc.files.push_back(make_table(s, "B", true, {{"cy", "rome", "55"}}));
    fc.rebuild_index();

    CHECK(fc.num_records() == 3);
    CHECK(fc.int_cell(2, 2) == 55);
    CHECK_FALSE(fc.observed(1, 2));
    CHECK(fc.file_of_rec == std::vector<int>{0, 0, 1});

    CHECK_THROWS_AS(make_table(s, "A", false, {{"x", "y"}}), DataError);
    CHECK_THROWS_AS(make_table(s, "A", false, {{"x", "y", "notnum"}}),
                    DataError);
}

TEST_CASE("write_file_csv inverts load_files") {
    testutil::ScratchDir tmp("roundtrip");
    Schema s = three_field_schema();
    std::vector<std::vector<std::string>> rows = {{"name", "city", "age"},
                                                  {"a,b", "x\"y", "7"},
                                                  {"", "NA", ""}};
    write_csv(tmp.file("in.csv"), rows);
    FileCollection fc = load_files({{tmp.file("in.csv"), "A", false}}, s);
    write_file_csv(fc, 0, tmp.file("out.csv"));
    CHECK(read_csv(tmp.file("out.csv")) == rows);
}
