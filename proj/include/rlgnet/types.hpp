#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace rlgnet {

// One timestamped fact. After reverse augmentation, relation ids in
// [num_relations_raw, 2*num_relations_raw) are reverse edges.
struct Quadruple {
    int32_t subject = 0;
    int32_t relation = 0;
    int32_t object = 0;
    int32_t timestamp = 0;

    friend bool operator==(const Quadruple&, const Quadruple&) = default;
    friend auto operator<=>(const Quadruple&, const Quadruple&) = default;
};

// Error carrying a short machine-parseable code. The CLI prints these as
// "error[CODE]: message" on a single line and exits nonzero.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const { return code_; }

private:
    std::string code_;
};

namespace errc {
inline constexpr const char* io = "E_IO";
inline constexpr const char* validation = "E_VALIDATION";
inline constexpr const char* ordering = "E_ORDERING";
inline constexpr const char* config = "E_CONFIG";
inline constexpr const char* version = "E_VERSION";
inline constexpr const char* missing_artifact = "E_MISSING_ARTIFACT";
inline constexpr const char* diverged = "E_DIVERGED";
inline constexpr const char* unsupported = "E_UNSUPPORTED";
inline constexpr const char* domain = "E_DOMAIN";
}  // namespace errc

}  // namespace rlgnet
