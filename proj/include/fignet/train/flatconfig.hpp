#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace fignet::train {

// Flat TOML-style configuration: [section.sub] headers plus key = value
// lines, addressed as dotted keys ("stage.finetune.epochs"). CLI --set
// overrides land in the same map and win.
struct FlatConfig {
    std::map<std::string, std::string> values;

    static FlatConfig parse(const std::string& text);
    static FlatConfig parse_file(const std::string& path);

    bool has(const std::string& key) const { return values.count(key) > 0; }
    void set(const std::string& key, const std::string& value) { values[key] = value; }
    void set_kv(const std::string& key_eq_value);  // "a.b=c" form used by --set

    std::string get_str(const std::string& key, const std::string& fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    std::string dump() const;  // canonical flat key=value echo
};

}  // namespace fignet::train
