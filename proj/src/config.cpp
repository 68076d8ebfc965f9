#include "racsim/config.hpp"

#include "racsim/trace.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace racsim {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

double to_double(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0') {
        throw ConfigError(key, "expected a number, got '" + value + "'");
    }
    return v;
}

}  // namespace

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");
    return parse(in, path);
}

Config Config::parse(std::istream& in, const std::string& origin) {
    Config cfg;
    cfg.origin_ = origin;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(lineno),
                              "expected 'key = value', got '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(origin + ":" + std::to_string(lineno), "empty key");
        }
        cfg.entries_[key] = value;
    }
    return cfg;
}

std::string Config::get_string(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError(key, "missing required key");
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key) const {
    return to_double(key, get_string(key));
}

double Config::get_double(const std::string& key, double fallback) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? fallback : to_double(key, it->second);
}

std::int64_t Config::get_int(const std::string& key) const {
    const double v = get_double(key);
    const auto i = static_cast<std::int64_t>(v);
    if (static_cast<double>(i) != v) throw ConfigError(key, "expected an integer");
    return i;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
}

std::vector<double> Config::get_doubles(const std::string& key) const {
    std::istringstream ss(get_string(key));
    std::vector<double> out;
    std::string tok;
    while (ss >> tok) out.push_back(to_double(key, tok));
    if (out.empty()) throw ConfigError(key, "expected at least one number");
    return out;
}

std::vector<double> Config::get_doubles(const std::string& key,
                                        const std::vector<double>& fallback) const {
    return has(key) ? get_doubles(key) : fallback;
}

std::vector<std::pair<double, double>> Config::get_pairs(const std::string& key) const {
    std::istringstream ss(get_string(key));
    std::vector<std::pair<double, double>> out;
    std::string tok;
    while (ss >> tok) {
        const auto colon = tok.find(':');
        if (colon == std::string::npos) {
            throw ConfigError(key, "expected 'time:value' pairs, got '" + tok + "'");
        }
        out.emplace_back(to_double(key, tok.substr(0, colon)),
                         to_double(key, tok.substr(colon + 1)));
    }
    if (out.empty()) throw ConfigError(key, "expected at least one pair");
    return out;
}

void Config::set(const std::string& key, const std::string& value) {
    entries_[key] = value;
}

void Config::set_double(const std::string& key, double value) {
    entries_[key] = format_double(value);
}

void Config::set_doubles(const std::string& key, const std::vector<double>& values) {
    std::string joined;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) joined += ' ';
        joined += format_double(values[i]);
    }
    entries_[key] = joined;
}

void Config::merge(const Config& other) {
    for (const auto& [k, v] : other.entries_) entries_[k] = v;
}

std::vector<std::string> Config::keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_) {
        if (k.rfind(prefix, 0) == 0) out.push_back(k);
    }
    return out;
}

void Config::save(std::ostream& out) const {
    for (const auto& [k, v] : entries_) out << k << " = " << v << '\n';
}

void Config::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("config", "cannot open '" + path + "' for writing");
    save(out);
}

}  // namespace racsim
