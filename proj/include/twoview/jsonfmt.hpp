#pragma once

#include <cstdio>
#include <map>
#include <string>
#include <variant>

namespace twoview::jsonfmt {

// Canonical single-line JSON for CLI output: keys sorted, numbers at 17
// significant digits, no whitespace. Flat objects are all we emit.

inline std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string num(long long x) { return std::to_string(x); }

struct Value {
    std::variant<bool, long long, double, std::string> v;
    Value(bool b) : v(b) {}
    Value(int i) : v(static_cast<long long>(i)) {}
    Value(long long i) : v(i) {}
    Value(std::uint64_t i) : v(static_cast<long long>(i)) {}
    Value(double d) : v(d) {}
    Value(const char* s) : v(std::string(s)) {}
    Value(std::string s) : v(std::move(s)) {}
};

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string object(const std::map<std::string, Value>& fields) {
    std::string out = "{";
    bool first = true;
    for (const auto& [k, val] : fields) {  // std::map iterates in key order
        if (!first) out += ",";
        first = false;
        out += "\"" + escape(k) + "\":";
        if (std::holds_alternative<bool>(val.v)) {
            out += std::get<bool>(val.v) ? "true" : "false";
        } else if (std::holds_alternative<long long>(val.v)) {
            out += num(std::get<long long>(val.v));
        } else if (std::holds_alternative<double>(val.v)) {
            out += num(std::get<double>(val.v));
        } else {
            out += "\"" + escape(std::get<std::string>(val.v)) + "\"";
        }
    }
    out += "}";
    return out;
}

}  // namespace twoview::jsonfmt
