#pragma once

#include <httplib.h>

#include <json.hpp>

#include "smartscan/error.hpp"
#include "smartscan/service.hpp"

namespace smartscan::http {

/// HTTP status for a typed error (400 zoom/geo/bad request, 404, 409
/// state/conflict, 422 validation/geometry, 502 tiles/backend, 503, else 500).
int status_for(const Error& e);

/// {"error": kind, "message": ..., "violations": [...]?}
nlohmann::json error_body(const Error& e);

nlohmann::json site_json(const SiteRecord& r);
nlohmann::json element_json(const constraints::SiteElement& e);
nlohmann::json job_json(const JobReport& r);

/// Registers every /sites route (and /jobs, /health) on `srv`.
void mount_routes(httplib::Server& srv, SiteService& svc);

/// Mounts routes plus the optional static UI and blocks in listen().
/// Returns false when the socket could not be bound.
bool serve(SiteService& svc, const std::string& host, int port, const std::filesystem::path& ui_dir = {});

}  // namespace smartscan::http
