// Runs the acceptance criteria and prints one line per criterion.
// Usage: scbl_acceptance <config-dir> [report.json] [ids...]

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "scbl/acceptance.hpp"
#include "scbl/io.hpp"

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: " << argv[0] << " <config-dir> [report.json] [ids...]\n";
        return 2;
    }
    scbl::AcceptanceContext ctx;
    ctx.config_dir = argv[1];
    const std::string report_path = argc > 2 ? argv[2] : "";
    std::vector<int> ids;
    for (int i = 3; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
    if (ids.empty())
        for (int id = 1; id <= 10; ++id) ids.push_back(id);

    try {
        const auto results = scbl::run_acceptance(ids, ctx, [](const scbl::CriterionResult& r) {
            std::printf("criterion %d %s  %s\n", r.id, r.passed ? "PASS" : "FAIL", r.title.c_str());
            if (!r.passed && !r.note.empty()) std::printf("    %s\n", r.note.c_str());
            std::fflush(stdout);
        });
        const auto report = scbl::acceptance_report(results);
        if (!report_path.empty()) scbl::write_text_file(report_path, scbl::dump_json(report) + "\n");
        std::printf("%d of %zu criteria passed\n", report["passed"].get<int>(), results.size());
        return scbl::all_passed(results) ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "acceptance aborted: " << e.what() << "\n";
        return 2;
    }
}
