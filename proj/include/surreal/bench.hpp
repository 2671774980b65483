#pragma once

// Model size and per-layer timing reports.

#include <string>
#include <vector>

#include "surreal/model.hpp"

namespace surreal {

struct LayerTiming {
    std::string name;
    std::string kind;
    Shape out;
    std::size_t params = 0;
    double forward_ms = 0.0;
    double backward_ms = 0.0;
};

struct BenchReport {
    std::string arch;
    std::string preset;
    Shape input;
    std::size_t classes = 0;
    std::size_t tr_rank = 0;
    std::size_t params = 0;
    std::size_t buffers = 0;
    std::size_t batch = 0;
    std::vector<LayerTiming> layers;

    std::string json() const;
};

/// Times forward and backward per layer on random inputs, averaged over
/// `repeats` runs (counts only when repeats is 0).
BenchReport bench_model(const ArchConfig& config, std::size_t batch, std::size_t repeats);

}  // namespace surreal
