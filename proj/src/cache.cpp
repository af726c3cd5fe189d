#include "scbl/cache.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "scbl/common.hpp"
#include "scbl/io.hpp"

namespace scbl {

const char* code_version_tag() { return "scbl-" SCBL_VERSION "-r1"; }

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ResultCache::ResultCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

std::string ResultCache::make_key(const std::string& canonical_inputs, const std::string& operation) {
    return fnv1a_hex(std::string(code_version_tag()) + '\n' + operation + '\n' + canonical_inputs);
}

std::optional<std::string> ResultCache::load(const std::string& key) const {
    if (!enabled()) return std::nullopt;
    std::lock_guard<std::mutex> lock(mutex_);
    const auto path = dir_ / (key + ".json");
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        ++misses_;
        return std::nullopt;
    }
    try {
        const auto record = nlohmann::json::parse(in);
        if (record.at("key").get<std::string>() != key || record.at("version").get<std::string>() != code_version_tag()) {
            ++misses_;
            return std::nullopt;
        }
        ++hits_;
        return record.at("payload").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        ++misses_;
        return std::nullopt;  // unreadable record: recompute
    }
}

void ResultCache::store(const std::string& key, const std::string& operation, const std::string& payload) {
    if (!enabled()) return;
    std::lock_guard<std::mutex> lock(mutex_);
    const auto path = dir_ / (key + ".json");
    if (std::filesystem::exists(path)) return;
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    nlohmann::json record = {
        {"key", key},
        {"operation", operation},
        {"version", code_version_tag()},
        {"timestamp", std::chrono::duration_cast<std::chrono::seconds>(now).count()},
        {"payload", payload},
    };
    write_text_file(path, record.dump(1) + "\n");
}

}  // namespace scbl
