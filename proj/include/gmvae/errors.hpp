#pragma once

#include <stdexcept>
#include <string>

namespace gmvae {

/// Invalid mathematical input (nonpositive sigma, off-manifold point, ...).
struct domain_error : std::domain_error {
    using std::domain_error::domain_error;
};

/// Malformed on-disk data (bad IDX magic, truncated buffer, bad checkpoint).
struct format_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Inconsistent run configuration (unknown keys, shape mismatch, missing file).
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite loss or activations during training; carries diagnostics.
struct training_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace gmvae
