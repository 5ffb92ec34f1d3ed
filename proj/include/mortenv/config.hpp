#pragma once

// Flat key=value run configuration with dotted section prefixes. No
// nesting, no quoting; '#' starts a comment. Values are parsed on access
// so unknown keys are tolerated but typos in known keys fail loudly.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mortenv/errors.hpp"

namespace mortenv {

class RunConfig {
public:
    RunConfig() = default;

    static RunConfig from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ValidationError("cannot open config " + path);
        RunConfig config;
        config.path_ = path;
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            while (!line.empty() && (line.back() == '\r' || line.back() == ' ' ||
                                     line.back() == '\t'))
                line.pop_back();
            std::size_t start = 0;
            while (start < line.size() && (line[start] == ' ' || line[start] == '\t'))
                ++start;
            line.erase(0, start);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ValidationError(path + " line " + std::to_string(line_no) +
                                      ": expected key=value");
            std::string key = line.substr(0, eq);
            while (!key.empty() && key.back() == ' ') key.pop_back();
            std::string value = line.substr(eq + 1);
            std::size_t vstart = 0;
            while (vstart < value.size() && value[vstart] == ' ') ++vstart;
            value.erase(0, vstart);
            config.values_[key] = value;
        }
        return config;
    }

    bool has(const std::string& key) const {
        const auto it = values_.find(key);
        return it != values_.end() && !it->second.empty();
    }

    std::string get(const std::string& key, const std::string& fallback = {}) const {
        const auto it = values_.find(key);
        return it == values_.end() || it->second.empty() ? fallback : it->second;
    }

    std::string require(const std::string& key) const {
        if (!has(key))
            throw ValidationError("config " + path_ + ": missing required key '" + key +
                                  "'");
        return values_.at(key);
    }

    double get_double(const std::string& key, double fallback) const {
        if (!has(key)) return fallback;
        return parse_double_value(key, values_.at(key));
    }

    long get_long(const std::string& key, long fallback) const {
        if (!has(key)) return fallback;
        const std::string& s = values_.at(key);
        try {
            std::size_t used = 0;
            const long v = std::stol(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ValidationError("config key '" + key + "': '" + s +
                                  "' is not an integer");
        }
    }

    bool get_bool(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const std::string& s = values_.at(key);
        if (s == "1" || s == "true" || s == "yes") return true;
        if (s == "0" || s == "false" || s == "no") return false;
        throw ValidationError("config key '" + key + "': '" + s + "' is not a boolean");
    }

    std::vector<std::string> get_list(const std::string& key) const {
        std::vector<std::string> out;
        if (!has(key)) return out;
        std::stringstream ss(values_.at(key));
        std::string item;
        while (std::getline(ss, item, ',')) {
            while (!item.empty() && item.front() == ' ') item.erase(item.begin());
            while (!item.empty() && item.back() == ' ') item.pop_back();
            if (!item.empty()) out.push_back(item);
        }
        return out;
    }

    std::vector<double> get_doubles(const std::string& key) const {
        std::vector<double> out;
        for (const auto& s : get_list(key)) out.push_back(parse_double_value(key, s));
        return out;
    }

    // Integer lists accept "start:stop:step" ranges alongside plain values.
    std::vector<int> get_ints(const std::string& key) const {
        std::vector<int> out;
        for (const auto& s : get_list(key)) {
            const auto c1 = s.find(':');
            if (c1 != std::string::npos) {
                const auto c2 = s.find(':', c1 + 1);
                if (c2 == std::string::npos)
                    throw ValidationError("config key '" + key + "': range '" + s +
                                          "' needs start:stop:step");
                const int start = std::stoi(s.substr(0, c1));
                const int stop = std::stoi(s.substr(c1 + 1, c2 - c1 - 1));
                const int step = std::stoi(s.substr(c2 + 1));
                if (step <= 0)
                    throw ValidationError("config key '" + key + "': step must be > 0");
                for (int v = start; v <= stop; v += step) out.push_back(v);
            } else {
                out.push_back(static_cast<int>(get_long_value(key, s)));
            }
        }
        return out;
    }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    const std::map<std::string, std::string>& entries() const { return values_; }
    const std::string& source_path() const { return path_; }

private:
    static double parse_double_value(const std::string& key, const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ValidationError("config key '" + key + "': '" + s +
                                  "' is not a number");
        }
    }

    static long get_long_value(const std::string& key, const std::string& s) {
        try {
            std::size_t used = 0;
            const long v = std::stol(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ValidationError("config key '" + key + "': '" + s +
                                  "' is not an integer");
        }
    }

    std::string path_;
    std::map<std::string, std::string> values_;
};

}  // namespace mortenv
