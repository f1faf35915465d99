#pragma once

#include <stdexcept>
#include <string>

namespace uceval {

struct corpus_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Transport-level failure after all retry attempts were exhausted.
struct transport_error : std::runtime_error {
    transport_error(const std::string& msg, int last_status = 0)
        : std::runtime_error(msg), last_status(last_status) {}
    int last_status;
};

// The backend answered but the body was not parsable as the wire format.
struct protocol_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The backend does not expose the needed feature (e.g. next-token logprobs).
struct capability_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct journal_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace uceval
