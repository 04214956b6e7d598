#pragma once

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "lpn/gf2.hpp"

namespace lpn {

// JSON-lines run log. The first record is the fully resolved configuration,
// the last one carries the success flag. Every record goes to stdout and,
// when a path is given, to the log file as well.
class RunLog {
public:
    explicit RunLog(const std::string& path = "", bool echo = true) : echo_(echo) {
        if (!path.empty()) {
            file_.open(path, std::ios::trunc);
            if (!file_) throw std::runtime_error("cannot open log file " + path);
        }
    }

    void record(const nlohmann::json& j) {
        const std::string line = j.dump();
        if (echo_) std::cout << line << "\n";
        if (file_.is_open()) file_ << line << "\n";
    }

    void flush() {
        std::cout.flush();
        if (file_.is_open()) file_.flush();
    }

private:
    bool echo_;
    std::ofstream file_;
};

// Timing fields vary between runs of the same seed; everything else must be
// byte-identical. Used by the determinism checks.
inline nlohmann::json strip_volatile_fields(nlohmann::json j) {
    static const char* volatile_keys[] = {"wall_ms", "wall_seconds", "seconds", "timestamp"};
    if (j.is_object()) {
        for (const char* k : volatile_keys) j.erase(k);
        for (auto& [key, value] : j.items()) value = strip_volatile_fields(value);
    } else if (j.is_array()) {
        for (auto& value : j) value = strip_volatile_fields(value);
    }
    return j;
}

// Parses a JSON-lines payload and strips the volatile fields from each record.
inline std::vector<nlohmann::json> parse_runlog(const std::string& text) {
    std::vector<nlohmann::json> records;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(strip_volatile_fields(nlohmann::json::parse(line)));
    }
    return records;
}

inline bool runlogs_equal_modulo_time(const std::string& a, const std::string& b) {
    return parse_runlog(a) == parse_runlog(b);
}

inline std::string secret_hex(const BitVector& s) { return s.to_hex(); }

}  // namespace lpn
