#pragma once

#include <cstdint>
#include <iosfwd>

namespace streamdiar::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitInputError = 2,
    kExitFormatError = 3,
    kExitParseError = 4,
};

// Seed used by every randomized subcommand when --seed is omitted.
inline constexpr std::uint64_t kDefaultSeed = 20210;

// Entry point shared by the executable and the tests.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace streamdiar::cli
