// Generates a small synthetic TKG in the standard file layout
// (train/valid/test.txt + stat.txt) so the pipeline can be exercised without
// the published datasets. Facts mix stable recurring patterns with noise.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <tuple>
#include <vector>

namespace {

struct Options {
    std::string out = "data/toy";
    int entities = 40;
    int relations = 6;
    int timestamps = 30;
    int facts_per_snapshot = 25;
    double repeat_rate = 0.6;  // chance a fact comes from a recurring pattern
    unsigned long long seed = 7;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic TKG generator"};
    Options opt;
    app.add_option("--out", opt.out, "output dataset directory");
    app.add_option("--entities", opt.entities);
    app.add_option("--relations", opt.relations);
    app.add_option("--timestamps", opt.timestamps);
    app.add_option("--facts-per-snapshot", opt.facts_per_snapshot);
    app.add_option("--repeat-rate", opt.repeat_rate);
    app.add_option("--seed", opt.seed);
    CLI11_PARSE(app, argc, argv);

    std::mt19937_64 rng(opt.seed);
    std::uniform_int_distribution<int> ent(0, opt.entities - 1);
    std::uniform_int_distribution<int> rel(0, opt.relations - 1);
    std::bernoulli_distribution from_pattern(opt.repeat_rate);

    // Recurring patterns: fixed (s, r) -> o pairs that fire repeatedly.
    const int num_patterns = std::max(4, opt.entities / 2);
    std::vector<std::tuple<int, int, int>> patterns;
    patterns.reserve(num_patterns);
    for (int i = 0; i < num_patterns; ++i) patterns.emplace_back(ent(rng), rel(rng), ent(rng));
    std::uniform_int_distribution<int> pattern_pick(0, num_patterns - 1);

    std::vector<std::vector<std::tuple<int, int, int>>> snaps(opt.timestamps);
    for (int t = 0; t < opt.timestamps; ++t) {
        std::set<std::tuple<int, int, int>> seen;
        while (static_cast<int>(seen.size()) < opt.facts_per_snapshot) {
            if (from_pattern(rng))
                seen.insert(patterns[pattern_pick(rng)]);
            else
                seen.insert({ent(rng), rel(rng), ent(rng)});
        }
        snaps[t].assign(seen.begin(), seen.end());
    }

    namespace fs = std::filesystem;
    fs::create_directories(opt.out);
    const int valid_start = opt.timestamps * 8 / 10;
    const int test_start = opt.timestamps * 9 / 10;
    auto dump = [&](const char* name, int lo, int hi) {
        std::ofstream os(fs::path(opt.out) / name);
        for (int t = lo; t < hi; ++t)
            for (const auto& [s, r, o] : snaps[t])
                os << s << "\t" << r << "\t" << o << "\t" << t * 24 << "\n";  // 24h gap
    };
    dump("train.txt", 0, valid_start);
    dump("valid.txt", valid_start, test_start);
    dump("test.txt", test_start, opt.timestamps);
    std::ofstream stat(fs::path(opt.out) / "stat.txt");
    stat << opt.entities << " " << opt.relations << "\n";

    std::cout << "wrote " << opt.out << ": |E|=" << opt.entities << " |R|=" << opt.relations
              << " |T|=" << opt.timestamps << " (valid from " << valid_start << ", test from "
              << test_start << ")\n";
    return 0;
}
