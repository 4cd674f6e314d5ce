#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mfimpulse {

/// Parses a real from its full decimal text; rejects trailing junk and non-finite values.
double parse_real(std::string_view text, std::string_view what);

/// Shortest decimal text that parses back to the same double.
std::string format_real(double value);

/// A named parametric form such as `logistic{r=5,delta=5,sigma=1,x0=1}`.
/// Parameter values keep their original decimal text so a config round-trips exactly.
struct FormSpec {
    std::string name;
    std::vector<std::pair<std::string, std::string>> params;

    static FormSpec parse(std::string_view text);
    std::string str() const;

    bool has(std::string_view key) const;
    double get(std::string_view key) const;
    /// Rejects keys outside `allowed` and reports any key in `required` that is missing.
    void expect_keys(const std::vector<std::string>& required, const std::vector<std::string>& optional = {}) const;

    bool operator==(const FormSpec&) const = default;
};

}  // namespace mfimpulse
