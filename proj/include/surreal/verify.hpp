#pragma once

// Randomised property suites, seeded. Each reports its worst observed error
// against a fixed tolerance.

#include <cstdint>
#include <string>
#include <vector>

namespace surreal {

struct PropertyResult {
    std::string name;
    double max_error = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    double seconds = 0.0;
    std::size_t trials = 0;
    std::string detail;

    std::string json() const;
};

struct VerifyOptions {
    std::uint64_t seed = 1;
    /// 0 keeps each property's default trial count.
    std::size_t trials = 0;
};

const std::vector<std::string>& property_names();

/// Throws std::invalid_argument for unknown names.
PropertyResult run_property(const std::string& name, const VerifyOptions& options);

std::vector<PropertyResult> run_all(const VerifyOptions& options);

}  // namespace surreal
