#include <catch2/catch_amalgamated.hpp>
#include <map>
#include <sstream>

#include "rlgnet/dataset.hpp"
#include "test_helpers.hpp"

using namespace rlgnet;

TEST_CASE("add_reverse_relations is definitional") {
    SnapshotSequence seq;
    seq.num_entities = 3;
    seq.num_relations_raw = 5;
    seq.snapshots.resize(4);
    seq.snapshots[3].push_back({0, 0, 1, 3});  // (A, r0, B, 3)
    seq.valid_start = seq.test_start = 4;

    auto aug = add_reverse_relations(seq);
    REQUIRE(aug.snapshots[3].size() == 2);
    CHECK(aug.snapshots[3][0] == Quadruple{0, 0, 1, 3});
    CHECK(aug.snapshots[3][1] == Quadruple{1, 5, 0, 3});
    CHECK(aug.num_relations_total() == 10);
}

TEST_CASE("add_reverse_relations keeps self-loops distinct") {
    SnapshotSequence seq;
    seq.num_entities = 2;
    seq.num_relations_raw = 5;
    seq.snapshots.resize(4);
    seq.snapshots[3].push_back({0, 0, 0, 3});
    seq.valid_start = seq.test_start = 4;

    auto aug = add_reverse_relations(seq);
    REQUIRE(aug.snapshots[3].size() == 2);
    CHECK(aug.snapshots[3][0] == Quadruple{0, 0, 0, 3});
    CHECK(aug.snapshots[3][1] == Quadruple{0, 5, 0, 3});
}

TEST_CASE("augmentation doubles every snapshot and involution maps back") {
    std::mt19937_64 rng(11);
    auto raw = test::random_sequence(rng, 12, 4, 8, 9, /*augment=*/false);
    auto aug = add_reverse_relations(raw);
    const int32_t R = raw.num_relations_raw;
    for (int t = 0; t < raw.num_snapshots(); ++t) {
        CHECK(aug.snapshots[t].size() == 2 * raw.snapshots[t].size());
        // r -> (r + R) mod 2R maps the augmented set onto itself bijectively
        std::vector<Quadruple> mapped;
        for (const auto& q : aug.snapshots[t])
            mapped.push_back({q.object, (q.relation + R) % (2 * R), q.subject, q.timestamp});
        std::sort(mapped.begin(), mapped.end());
        CHECK(mapped == aug.snapshots[t]);
    }
    CHECK_THROWS_AS(add_reverse_relations(aug), Error);
}

TEST_CASE("load_dataset normalizes timestamps and records splits") {
    std::mt19937_64 rng(3);
    auto snaps = test::random_sequence(rng, 10, 3, 10, 6, false).snapshots;
    auto dir = test::temp_dir("load");
    test::write_dataset_files(dir, snaps, 10, 3, 8, 9, /*gap=*/24);

    auto seq = load_dataset(dir.parent_path(), dir.filename().string());
    CHECK(seq.num_entities == 10);
    CHECK(seq.num_relations_raw == 3);
    CHECK(seq.num_snapshots() == 10);
    CHECK(seq.valid_start == 8);
    CHECK(seq.test_start == 9);
    CHECK_FALSE(seq.augmented);
    // timestamp contiguity: max timestamp + 1 == number of snapshots
    int32_t max_t = -1;
    for (const auto& s : seq.snapshots)
        for (const auto& q : s) max_t = std::max(max_t, q.timestamp);
    CHECK(max_t + 1 == seq.num_snapshots());

    for (int t = 0; t < 10; ++t) {
        CHECK(seq.snapshots[t] == snaps[t]);
        for (const auto& q : seq.snapshots[t]) CHECK(q.timestamp == t);
    }
}

TEST_CASE("load_dataset densifies gapped timestamps") {
    auto dir = test::temp_dir("gaps");
    std::filesystem::create_directories(dir);
    {
        std::ofstream train(dir / "train.txt");
        train << "0\t0\t1\t0\n0\t0\t2\t48\n";  // hole at raw t=24
        std::ofstream valid(dir / "valid.txt");
        valid << "1\t0\t2\t96\n";
        std::ofstream tst(dir / "test.txt");
        tst << "2\t0\t0\t120\n";
        std::ofstream stat(dir / "stat.txt");
        stat << "3 1\n";
    }
    auto seq = load_dataset(dir.parent_path(), dir.filename().string());
    CHECK(seq.num_snapshots() == 4);  // 0, 48, 96, 120 -> 0..3
    CHECK(seq.valid_start == 2);
    CHECK(seq.test_start == 3);
}

TEST_CASE("load_dataset tolerates a fifth column and flags bad ids") {
    auto dir = test::temp_dir("cols");
    std::filesystem::create_directories(dir);
    {
        std::ofstream train(dir / "train.txt");
        train << "0\t0\t1\t0\t999\n";
        std::ofstream valid(dir / "valid.txt");
        std::ofstream tst(dir / "test.txt");
        std::ofstream stat(dir / "stat.txt");
        stat << "2 1\n";
    }
    auto seq = load_dataset(dir.parent_path(), dir.filename().string());
    CHECK(seq.num_facts() == 1);

    {
        std::ofstream train(dir / "train.txt");
        train << "0\t0\t1\t0\n5\t0\t1\t0\n";  // subject 5 out of range
    }
    try {
        load_dataset(dir.parent_path(), dir.filename().string());
        FAIL("expected validation error");
    } catch (const Error& e) {
        CHECK(e.code() == std::string(errc::validation));
        CHECK(std::string(e.what()).find(":2") != std::string::npos);  // line number
    }
}

TEST_CASE("load_dataset rejects empty train and missing files") {
    auto dir = test::temp_dir("empty");
    std::filesystem::create_directories(dir);
    {
        std::ofstream train(dir / "train.txt");
        std::ofstream valid(dir / "valid.txt");
        std::ofstream tst(dir / "test.txt");
        std::ofstream stat(dir / "stat.txt");
        stat << "2 1\n";
    }
    CHECK_THROWS_AS(load_dataset(dir.parent_path(), dir.filename().string()), Error);

    std::filesystem::remove(dir / "stat.txt");
    try {
        load_dataset(dir.parent_path(), dir.filename().string());
        FAIL("expected io error");
    } catch (const Error& e) {
        CHECK(e.code() == std::string(errc::io));
    }
}

TEST_CASE("sequence cache round-trips identical multisets") {
    std::mt19937_64 rng(5);
    auto seq = test::random_sequence(rng, 15, 4, 12, 7);
    std::stringstream buf;
    save_sequence(seq, buf);
    auto back = load_sequence(buf);
    CHECK(back.num_entities == seq.num_entities);
    CHECK(back.num_relations_raw == seq.num_relations_raw);
    CHECK(back.valid_start == seq.valid_start);
    CHECK(back.test_start == seq.test_start);
    CHECK(back.augmented == seq.augmented);
    REQUIRE(back.num_snapshots() == seq.num_snapshots());
    for (int t = 0; t < seq.num_snapshots(); ++t) CHECK(back.snapshots[t] == seq.snapshots[t]);

    std::stringstream bad("XXXXXXXXgarbage");
    CHECK_THROWS_AS(load_sequence(bad), Error);
}
