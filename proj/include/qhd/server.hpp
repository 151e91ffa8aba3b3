#pragma once

#include <iosfwd>

// Project headers come first: httplib pulls in <resolv.h>, whose _res macro
// collides with identifiers inside Eigen.
#include "qhd/config.hpp"
#include "qhd/session.hpp"

#include <httplib.h>

namespace qhd {

// Registers the session JSON endpoints and static asset serving on `server`.
void install_routes(httplib::Server& server, SessionStore& store, const ServeConfig& serve);

// Blocks serving until the process is stopped. Returns non-zero if the port
// cannot be bound.
int cmd_serve(const RunConfig& config, std::ostream& log);

} // namespace qhd
