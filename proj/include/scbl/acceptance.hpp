#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "scbl/cache.hpp"

namespace scbl {

struct CriterionResult {
    int id = 0;
    std::string title;
    bool passed = false;
    nlohmann::json measured = nlohmann::json::object();
    std::string note;
};

struct AcceptanceContext {
    std::filesystem::path config_dir;  // reference configs
    int workers = 1;
    ResultCache* cache = nullptr;      // may be null or disabled
    std::uint64_t seed = 20240601;     // random matrices of criterion 7
};

const char* criterion_title(int id);

/// One criterion, ids 1..10. Criterion 10 reruns 1..9 against a fresh
/// cache and a replay of it and compares the reports byte for byte.
CriterionResult run_criterion(int id, const AcceptanceContext& ctx);

/// Runs the criteria in order; `on_result` sees each result as it completes.
std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids, const AcceptanceContext& ctx,
                                            const std::function<void(const CriterionResult&)>& on_result = {});

/// Deterministic report: no timestamps, no timings.
nlohmann::json acceptance_report(const std::vector<CriterionResult>& results);

bool all_passed(const std::vector<CriterionResult>& results);

}  // namespace scbl
