#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace aerogrid {

// Precondition violations on public operations.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// The optimizer hit a NaN or infinite cost.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Every local candidate direction left the window; the mission must replan.
class BlockedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A word layout or goal cannot be realized with the current map.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Command text outside the supported grammar.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Scenario validation failure; carries one diagnostic per offending field.
class ScenarioError : public std::runtime_error {
public:
    explicit ScenarioError(std::vector<std::string> diagnostics)
        : std::runtime_error(join(diagnostics)), diagnostics_(std::move(diagnostics)) {}

    const std::vector<std::string>& diagnostics() const { return diagnostics_; }

private:
    static std::string join(const std::vector<std::string>& lines) {
        std::string out = "invalid scenario";
        for (const auto& l : lines) out += "\n  " + l;
        return out;
    }

    std::vector<std::string> diagnostics_;
};

}  // namespace aerogrid
