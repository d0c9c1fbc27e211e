#pragma once

#include <string>

namespace smartscan::http {

/// "http://host:8080/a/b?c" -> {"http://host:8080", "/a/b?c"}.
struct SplitUrl {
    std::string origin;
    std::string path;
};

/// Throws BadRequestError for URLs without an http(s) scheme.
SplitUrl split_url(const std::string& url);

}  // namespace smartscan::http
