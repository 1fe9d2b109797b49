#pragma once

#include <stdexcept>
#include <string>

namespace polysim {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct invalid_transition : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct invalid_composition : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct unsupported_config : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct insufficient_data : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct undefined_statistic : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct precision_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace polysim
