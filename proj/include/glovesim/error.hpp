#pragma once

#include <stdexcept>
#include <string>

namespace glovesim {

// Error taxonomy used across the library. The CLI maps these onto exit
// codes: config_error -> 2, io_error -> 3, numeric_error -> 4.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct param_error : error {
    using error::error;
};

struct shape_error : error {
    using error::error;
};

struct lookup_error : error {
    using error::error;
};

struct config_error : error {
    using error::error;
};

struct io_error : error {
    using error::error;
};

struct numeric_error : error {
    using error::error;
};

struct protocol_error : error {
    using error::error;
};

}  // namespace glovesim
