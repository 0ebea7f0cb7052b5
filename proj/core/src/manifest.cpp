#include "deturb/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "deturb/errors.hpp"

namespace deturb {

void RunManifest::set(const std::string& key, const std::string& value)
{
    if (key.empty() || key.find_first_of("=\n") != std::string::npos)
        throw InvalidInput("RunManifest: bad key '" + key + "'");
    if (value.find('\n') != std::string::npos)
        throw InvalidInput("RunManifest: value for '" + key + "' contains a newline");
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == key; });
    if (it != entries_.end())
        it->second = value;
    else
        entries_.emplace_back(key, value);
}

void RunManifest::set(const std::string& key, double value)
{
    std::ostringstream os;
    os << std::setprecision(17) << value;
    set(key, os.str());
}

void RunManifest::set(const std::string& key, long long value)
{
    set(key, std::to_string(value));
}

std::optional<std::string> RunManifest::get(const std::string& key) const
{
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == key; });
    if (it == entries_.end())
        return std::nullopt;
    return it->second;
}

std::string RunManifest::to_string() const
{
    std::string out;
    for (const auto& [k, v] : entries_)
        out += k + "=" + v + "\n";
    return out;
}

void RunManifest::write(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << to_string();
    if (!out)
        throw IoError("write failed: " + path.string());
}

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

RunManifest RunManifest::parse(const std::string& text)
{
    RunManifest m;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#')
            continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw FormatError("line " + std::to_string(lineno) + ": expected key=value");
        m.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return m;
}

RunManifest RunManifest::read(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

} // namespace deturb
