#pragma once

#include "racsim/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace racsim {

/// Flat key/value tree with dotted paths, the on-disk format of scenario
/// files and tuned gain blocks:
///
///   # comment
///   duration_s = 8.0
///   controller.k = 80 40 0.5
///   load.profile_kn = 0:65 8:76
///
/// Keys carry their units; values are free-form strings parsed on access.
class Config {
public:
    Config() = default;

    static Config load(const std::string& path);
    static Config parse(std::istream& in, const std::string& origin);

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;

    /// "t:v t:v ..." pairs for schedules.
    std::vector<std::pair<double, double>> get_pairs(const std::string& key) const;

    void set(const std::string& key, const std::string& value);
    void set_double(const std::string& key, double value);
    void set_doubles(const std::string& key, const std::vector<double>& values);

    /// Overlays other's entries on top of this one (same-format gain blocks).
    void merge(const Config& other);

    std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

    void save(std::ostream& out) const;
    void save_file(const std::string& path) const;

    const std::string& origin() const { return origin_; }

private:
    std::map<std::string, std::string> entries_;
    std::string origin_ = "<memory>";
};

}  // namespace racsim
