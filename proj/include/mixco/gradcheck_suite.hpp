#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mixco/numerics.hpp"

namespace mixco {

struct GradSuiteEntry {
    std::string name;
    GradCheckReport worst;
    std::size_t instances = 0;
};

struct GradSuiteReport {
    std::vector<GradSuiteEntry> entries;

    [[nodiscard]] double worst_relative_error() const;
};

/// Central-difference verification (h = 1e-5) of every hand-written
/// backward pass: the softmax losses, row normalization, the three
/// contrastive losses, the encoder, and the full loss-through-encoder
/// objective in queue and in-batch modes. Instances are random with
/// B <= 8, K <= 8, C <= 8.
[[nodiscard]] GradSuiteReport run_gradient_suite(std::uint64_t seed, std::size_t instances);

}  // namespace mixco
