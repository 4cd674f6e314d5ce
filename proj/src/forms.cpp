#include "mfimpulse/forms.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "mfimpulse/error.hpp"

namespace mfimpulse {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool is_identifier(std::string_view s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s.front())) || s.front() == '_')) return false;
    return std::all_of(s.begin(), s.end(),
                       [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

}  // namespace

double parse_real(std::string_view text, std::string_view what) {
    const std::string_view t = trim(text);
    double value = 0.0;
    const char* first = t.data();
    if (!t.empty() && t.front() == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), value);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(value))
        throw Error(ErrorKind::precondition,
                    "cannot parse '" + std::string(text) + "' as a real for " + std::string(what));
    return value;
}

std::string format_real(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc()) throw Error(ErrorKind::evaluation, "cannot format real");
    return std::string(buf, ptr);
}

FormSpec FormSpec::parse(std::string_view text) {
    const std::string_view t = trim(text);
    FormSpec spec;
    const auto open = t.find('{');
    if (open == std::string_view::npos) {
        spec.name = std::string(t);
    } else {
        if (t.back() != '}')
            throw Error(ErrorKind::precondition, "form '" + std::string(text) + "' is missing a closing brace");
        spec.name = std::string(trim(t.substr(0, open)));
        std::string_view body = t.substr(open + 1, t.size() - open - 2);
        while (!trim(body).empty()) {
            const auto comma = body.find(',');
            const std::string_view item = trim(body.substr(0, comma));
            const auto eq = item.find('=');
            if (eq == std::string_view::npos)
                throw Error(ErrorKind::precondition, "form parameter '" + std::string(item) + "' needs key=value");
            const std::string key(trim(item.substr(0, eq)));
            const std::string val(trim(item.substr(eq + 1)));
            if (!is_identifier(key))
                throw Error(ErrorKind::precondition, "bad parameter name '" + key + "'");
            if (spec.has(key)) throw Error(ErrorKind::precondition, "duplicate parameter '" + key + "'");
            parse_real(val, key);
            spec.params.emplace_back(key, val);
            if (comma == std::string_view::npos) break;
            body.remove_prefix(comma + 1);
        }
    }
    if (!is_identifier(spec.name))
        throw Error(ErrorKind::precondition, "bad form name in '" + std::string(text) + "'");
    return spec;
}

std::string FormSpec::str() const {
    if (params.empty()) return name;
    std::string out = name + "{";
    for (size_t i = 0; i < params.size(); ++i) {
        if (i) out += ",";
        out += params[i].first + "=" + params[i].second;
    }
    return out + "}";
}

bool FormSpec::has(std::string_view key) const {
    return std::any_of(params.begin(), params.end(), [&](const auto& kv) { return kv.first == key; });
}

double FormSpec::get(std::string_view key) const {
    for (const auto& [k, v] : params)
        if (k == key) return parse_real(v, k);
    throw Error(ErrorKind::precondition, "form '" + name + "' is missing parameter '" + std::string(key) + "'");
}

void FormSpec::expect_keys(const std::vector<std::string>& required, const std::vector<std::string>& optional) const {
    for (const auto& [k, v] : params) {
        const bool known = std::find(required.begin(), required.end(), k) != required.end() ||
                           std::find(optional.begin(), optional.end(), k) != optional.end();
        if (!known) throw Error(ErrorKind::precondition, "form '" + name + "' has unknown parameter '" + k + "'");
    }
    for (const auto& k : required)
        if (!has(k)) throw Error(ErrorKind::precondition, "form '" + name + "' is missing parameter '" + k + "'");
}

}  // namespace mfimpulse
