#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>

namespace scbl {

/// Tag mixed into every key; bump when a cached algorithm changes.
const char* code_version_tag();

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

/// Append-only on-disk store of computed payloads. One JSON file per
/// record, written atomically. An empty directory disables caching.
class ResultCache {
public:
    ResultCache() = default;
    explicit ResultCache(std::filesystem::path dir);

    bool enabled() const { return !dir_.empty(); }
    const std::filesystem::path& directory() const { return dir_; }

    /// Key from the canonical text of the inputs, the operation name and
    /// the code version tag.
    static std::string make_key(const std::string& canonical_inputs, const std::string& operation);

    std::optional<std::string> load(const std::string& key) const;

    /// First writer wins; an existing record is never replaced.
    void store(const std::string& key, const std::string& operation, const std::string& payload);

    std::size_t hits() const { return hits_; }
    std::size_t misses() const { return misses_; }

private:
    std::filesystem::path dir_;
    mutable std::mutex mutex_;
    mutable std::size_t hits_ = 0;
    mutable std::size_t misses_ = 0;
};

/// Handle passed down to computations: the store plus the canonical text of
/// the inputs that are not spelled out per record.
struct CacheContext {
    ResultCache* store = nullptr;
    std::string inputs;

    bool active() const { return store != nullptr && store->enabled(); }
};

}  // namespace scbl
