#include "sdssar/errors.hpp"

namespace sdssar {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::invalid_argument: return "invalid-argument";
        case ErrorKind::degenerate_input: return "degenerate-input";
        case ErrorKind::corrupted_stack: return "corrupted-stack";
        case ErrorKind::numeric_overflow: return "numeric-overflow";
        case ErrorKind::training_diverged: return "training-diverged";
        case ErrorKind::version_mismatch: return "version-mismatch";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

}  // namespace sdssar
