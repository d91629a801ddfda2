#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace eyesal {

/// Malformed or inconsistent input. The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numeric routine could not produce a result (rank deficiency, etc.).
/// The CLI maps this to exit code 2.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Collects non-fatal warnings. Functions that can warn take an optional
/// pointer to one of these; passing nullptr discards the warnings.
class Diagnostics {
public:
    void warn(std::string message) { warnings_.push_back(std::move(message)); }
    const std::vector<std::string>& warnings() const { return warnings_; }
    bool empty() const { return warnings_.empty(); }
    void clear() { warnings_.clear(); }

private:
    std::vector<std::string> warnings_;
};

inline void warn(Diagnostics* diag, std::string message) {
    if (diag != nullptr) diag->warn(std::move(message));
}

}  // namespace eyesal
