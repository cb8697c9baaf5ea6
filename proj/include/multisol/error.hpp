#pragma once

#include <stdexcept>
#include <string>

namespace msol {

/// Malformed input file (IDX, CSV, checkpoint, threshold set).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration; carries every offending field in the message.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Training diverged (non-finite loss) or otherwise could not proceed.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace msol
