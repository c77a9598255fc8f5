#pragma once

#include <stdexcept>

namespace qrex {

/// Malformed or inconsistent input data (corpus files, embeddings, qrels, ...).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid parameter values or parameter combinations.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace qrex
