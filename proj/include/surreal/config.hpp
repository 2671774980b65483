#pragma once

// Run configuration: flat `key = value` text with `#` comments.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "surreal/model.hpp"
#include "surreal/train.hpp"

namespace surreal {

struct RunConfig {
    std::string arch = "surreal";
    std::string dataset;
    std::string test_dataset;
    std::string out_dir = "run";
    std::size_t epochs = 120;
    std::size_t batch = 32;
    double lr = 1e-3;
    std::uint64_t seed = 1;
    std::string optimizer = "adam";
    std::optional<double> clip_norm;
    std::string preset = "auto";
    std::size_t tr_rank = 0;
    std::size_t dist_sets = 1;
    bool trelu = false;
    double logit_init = 0.0;

    void validate() const;
    std::string to_text() const;
    OptimizerConfig optimizer_config() const;
    ArchConfig arch_config(Shape input, std::size_t classes) const;
};

using KeyValues = std::map<std::string, std::string>;

/// Throws std::invalid_argument naming the line on malformed input.
KeyValues parse_key_values(std::string_view text);

/// Applies the entries on top of base; unknown keys are an error.
RunConfig apply_key_values(const KeyValues& entries, RunConfig base = {});

RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace surreal
