#pragma once

#include <stdexcept>

namespace moodshift {

/// Malformed or unreadable input: bad file formats, unparsable values,
/// missing files. The CLI maps this to exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Semantically unusable data or model state: degenerate corpora,
/// diverging training, model version mismatch. CLI exit code 3.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace moodshift
