#pragma once

#include <stdexcept>
#include <string>

namespace urlab {

// Exit codes used by the CLI: 2 config, 3 numeric, 4 missing artifact.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

struct MissingArtifact : std::runtime_error {
    explicit MissingArtifact(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace urlab
