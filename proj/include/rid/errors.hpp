// Copyright (c) 2026 the rid authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace rid {

/// Base class for all rid errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shape or dimension mismatch between tensors.
struct dim_error : error {
    using error::error;
};

/// A caller violated an operation's precondition.
struct contract_error : error {
    using error::error;
};

/// Non-finite values or other numeric breakdown.
struct numeric_error : error {
    using error::error;
};

/// Training diverged or otherwise failed.
struct training_error : error {
    using error::error;
};

/// Invalid configuration file or value.
struct config_error : error {
    using error::error;
};

/// Filesystem or stream failure.
struct io_error : error {
    using error::error;
};

}  // namespace rid
