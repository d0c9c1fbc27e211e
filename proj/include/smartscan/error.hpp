#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace smartscan {

/// Base class for every error the library raises. `kind()` is a stable
/// machine-readable tag used by the HTTP layer and the CLI to pick a status.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define SMARTSCAN_DEFINE_ERROR(Name, tag)                                   \
    class Name : public Error {                                             \
    public:                                                                 \
        explicit Name(const std::string& message) : Error(tag, message) {} \
    }

SMARTSCAN_DEFINE_ERROR(GeoRangeError, "geo_range");
SMARTSCAN_DEFINE_ERROR(ZoomRangeError, "zoom_range");
SMARTSCAN_DEFINE_ERROR(FetchError, "fetch");
SMARTSCAN_DEFINE_ERROR(MalformedTileError, "malformed_tile");
SMARTSCAN_DEFINE_ERROR(DimensionMismatchError, "dimension_mismatch");
SMARTSCAN_DEFINE_ERROR(CodecError, "codec");
SMARTSCAN_DEFINE_ERROR(DegenerateGeometryError, "degenerate_geometry");
SMARTSCAN_DEFINE_ERROR(BackendError, "backend");
SMARTSCAN_DEFINE_ERROR(MissingFixtureError, "missing_fixture");
SMARTSCAN_DEFINE_ERROR(StateError, "state");
SMARTSCAN_DEFINE_ERROR(ConflictError, "conflict");
SMARTSCAN_DEFINE_ERROR(NotFoundError, "not_found");
SMARTSCAN_DEFINE_ERROR(BadRequestError, "bad_request");
SMARTSCAN_DEFINE_ERROR(UnavailableError, "unavailable");
SMARTSCAN_DEFINE_ERROR(IoError, "io");

#undef SMARTSCAN_DEFINE_ERROR

/// Raised when a document or constraint set fails validation; carries every
/// violation found, not just the first.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> violations)
        : Error("validation", join(violations)), violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out = "validation failed";
        for (const auto& s : v) {
            out += "; ";
            out += s;
        }
        return out;
    }

    std::vector<std::string> violations_;
};

/// Message fragment attached to every image-extraction failure.
inline constexpr const char* kZoomGuidance = "change the zoom level and try again";

}  // namespace smartscan
