#include <doctest.h>

#include "acc/dataset.hpp"
#include "acc/error.hpp"
#include "test_support.hpp"

namespace {

acc::DatasetRecord record(acc::AgentType type, std::size_t tokens, std::string id = "r") {
    acc::DatasetRecord r;
    r.example_id = std::move(id);
    r.agent_type = type;
    r.question = "q";
    r.context = "[Doc A] a";
    r.rationale = "because";
    r.answer = "a";
    r.token_count = tokens;
    r.seed = 7;
    r.provenance = {r.example_id, {"A"}, {}, {1}};
    return r;
}

} // namespace

TEST_CASE("record serialization round-trips with a fixed field order") {
    auto r = record(acc::AgentType::SQL, 12, "ex-1");
    auto line = acc::serialize_record(r);
    CHECK(line.starts_with(R"({"example_id":"ex-1","agent_type":"SQL","question":"q","context":)"));
    CHECK(acc::parse_record(line) == r);
    CHECK_THROWS_AS(acc::parse_record("{}"), acc::Error);
}

TEST_CASE("records require a rationale") {
    acc::CompiledExample ex;
    ex.example_id = "e";
    CHECK_THROWS_AS(acc::DatasetRecord::from_example(ex), acc::Error);
    ex.rationale = "r";
    CHECK(acc::DatasetRecord::from_example(ex).rationale == "r");
}

TEST_CASE("histogram conserves counts and closes the final bin") {
    using T = acc::AgentType;
    std::vector<acc::DatasetRecord> rs{record(T::Search, 0), record(T::Search, 10), record(T::SWE, 5),
                                       record(T::SQL, 100), record(T::SQL, 99)};
    auto h = acc::length_histogram(rs, 10);
    REQUIRE(h.n_bins() == 10);
    CHECK(h.bin_edges.front() == 0.0);
    CHECK(h.bin_edges.back() == 100.0);
    std::size_t total = 0;
    for (auto c : h.total) total += c;
    CHECK(total == rs.size());
    CHECK(h.total[0] == 2);
    CHECK(h.total[1] == 1);
    CHECK(h.total[9] == 2);
    CHECK(h.counts.at(T::SQL)[9] == 2);

    auto same = acc::length_histogram({record(T::SWE, 42), record(T::SWE, 42)}, 4);
    CHECK(same.total[0] == 2);
    CHECK_THROWS_AS(acc::length_histogram(std::vector<acc::DatasetRecord>{}, 4), acc::Error);
    CHECK_THROWS_AS(acc::length_histogram(rs, 0), acc::Error);

    auto csv = acc::histogram_csv(acc::length_histogram(rs, 2));
    CHECK(csv == "agent_type,bin_start,bin_end,count\n"
                 "Search,0,50,2\nSearch,50,100,0\n"
                 "SWE,0,50,1\nSWE,50,100,0\n"
                 "SQL,0,50,0\nSQL,50,100,2\n"
                 "all,0,50,3\nall,50,100,2\n");
}

TEST_CASE("manifest lists counts for every agent type") {
    using T = acc::AgentType;
    acc::ManifestInfo info;
    info.seed = 42;
    info.config = {{"seed", "42"}};
    auto text = acc::render_manifest({record(T::Search, 3)}, info);
    CHECK(text.find(R"("toolkit_version": "0.3.0")") != std::string::npos);
    CHECK(text.find(R"("SWE": 0)") != std::string::npos);
    CHECK(text.find(R"("budget": 131072)") != std::string::npos);
    CHECK(text.find(R"("total": 1)") != std::string::npos);
}

TEST_CASE("emit then read back") {
    auto dir = acc_test::scratch_dir("emit");
    std::vector<acc::DatasetRecord> rs{record(acc::AgentType::Search, 3, "a"), record(acc::AgentType::SWE, 9, "b")};
    acc::emit_dataset(rs, (dir / "d.jsonl").string(), (dir / "m.json").string(), {});
    CHECK(acc::read_dataset((dir / "d.jsonl").string()) == rs);
    CHECK_THROWS_AS(acc::emit_dataset(rs, "/nonexistent/dir/d.jsonl", "/nonexistent/dir/m.json", {}), acc::Error);
}

TEST_CASE("number formatting is shortest round-trip") {
    CHECK(acc::format_number(0.5) == "0.5");
    CHECK(acc::format_number(3.0) == "3");
    CHECK(acc::format_number(0.1) == "0.1");
}
