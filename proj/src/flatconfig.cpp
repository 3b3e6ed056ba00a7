#include "fignet/train/flatconfig.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "fignet/common.hpp"

namespace fignet::train {

namespace {

std::string strip(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

}  // namespace

FlatConfig FlatConfig::parse(const std::string& text) {
    FlatConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = strip(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section");
            section = strip(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = strip(line.substr(0, eq));
        const std::string value = unquote(strip(line.substr(eq + 1)));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        cfg.values[section.empty() ? key : section + "." + key] = value;
    }
    return cfg;
}

FlatConfig FlatConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

void FlatConfig::set_kv(const std::string& key_eq_value) {
    const auto eq = key_eq_value.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("--set expects key=value, got '" + key_eq_value + "'");
    values[key_eq_value.substr(0, eq)] = unquote(key_eq_value.substr(eq + 1));
}

std::string FlatConfig::get_str(const std::string& key, const std::string& fallback) const {
    const auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

std::int64_t FlatConfig::get_int(const std::string& key, std::int64_t fallback) const {
    const auto it = values.find(key);
    if (it == values.end()) return fallback;
    try {
        return std::stoll(it->second);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' is not an integer: " + it->second);
    }
}

double FlatConfig::get_double(const std::string& key, double fallback) const {
    const auto it = values.find(key);
    if (it == values.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' is not a number: " + it->second);
    }
}

bool FlatConfig::get_bool(const std::string& key, bool fallback) const {
    const auto it = values.find(key);
    if (it == values.end()) return fallback;
    std::string v = it->second;
    std::transform(v.begin(), v.end(), v.begin(), ::tolower);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config key '" + key + "' is not a boolean: " + it->second);
}

std::string FlatConfig::dump() const {
    std::string out;
    for (const auto& [k, v] : values) out += k + " = " + v + "\n";
    return out;
}

}  // namespace fignet::train
