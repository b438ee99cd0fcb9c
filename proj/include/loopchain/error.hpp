#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace loopchain {

enum class ErrorKind {
    invalid_parameter,
    invalid_config,
    slot_collision,
    too_large_instance,
    divergent,
    not_applicable,
    non_hermitian,
    series_too_short,
    numerical,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_parameter: return "invalid-parameter";
        case ErrorKind::invalid_config: return "invalid-config";
        case ErrorKind::slot_collision: return "slot-collision";
        case ErrorKind::too_large_instance: return "too-large-instance";
        case ErrorKind::divergent: return "divergent";
        case ErrorKind::not_applicable: return "not-applicable";
        case ErrorKind::non_hermitian: return "non-hermitian";
        case ErrorKind::series_too_short: return "series-too-short";
        case ErrorKind::numerical: return "numerical";
    }
    return "unknown";
}

/// Library-wide exception; `kind()` lets callers branch without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace loopchain
