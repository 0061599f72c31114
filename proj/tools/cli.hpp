#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mixco/config_file.hpp"
#include "mixco/data.hpp"
#include "mixco/training.hpp"

namespace mixco::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDiverged = 2, kIo = 3 };

/// Keys the command line owns in addition to RunConfig's.
struct CliSettings {
    std::string data;     // dataset file
    std::string encoder;  // encoder checkpoint; empty = fresh encoder from the run seed

    // gen-data
    int classes = 10;
    std::size_t per_class = 500;
    std::size_t dim = 20;
    double center_spread = 2.0;
    double within_sigma = 1.0;
    std::uint64_t data_seed = 0;

    // linear-eval
    std::size_t probe_epochs = 100;
    double probe_lr = 3.0 * 64.0 / 256.0;
    std::size_t probe_batch_size = 64;
    double probe_momentum = 0.9;
    double test_fraction = 0.2;
    std::uint64_t split_seed = 0;

    // gradcheck
    std::size_t gradcheck_instances = 20;
};

struct Effective {
    RunConfig run;
    CliSettings cli;
};

/// Applies entries in order; unknown keys raise ConfigError naming the key.
[[nodiscard]] Effective resolve(const KeyValues& entries);
[[nodiscard]] KeyValues to_key_values(const Effective& eff);

/// Entry point shared by the executable and the tests.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mixco::cli
