#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace deturb {

/// Ordered key=value record of a run: parameters, paths and timings.
/// Serialized one "key=value" pair per line, UTF-8.
class RunManifest {
public:
    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, double value);
    void set(const std::string& key, long long value);
    void set(const std::string& key, int value) { set(key, static_cast<long long>(value)); }
    void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }
    void set(const std::string& key, const char* value) { set(key, std::string(value)); }

    std::optional<std::string> get(const std::string& key) const;
    const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

    std::string to_string() const;
    void write(const std::filesystem::path& path) const;

    /// Parses key=value lines; blank lines and lines starting with '#' are skipped.
    static RunManifest parse(const std::string& text);
    static RunManifest read(const std::filesystem::path& path);

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

} // namespace deturb
