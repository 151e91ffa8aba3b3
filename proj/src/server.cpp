#include "qhd/server.hpp"

#include <filesystem>
#include <ostream>

namespace qhd {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

const char* kPlaceholderPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>qhd session server</title></head>
<body><h1>qhd session server</h1>
<p>No static UI directory is configured. The JSON API lives under <code>/api</code>.</p>
</body></html>
)";

void send_error(httplib::Response& res, int status, const std::string& reason) {
  res.status = status;
  res.set_content(json{{"error", reason}}.dump(), kJson);
}

void send_state(httplib::Response& res, const json& state, int status = 200) {
  res.status = status;
  res.set_content(state.dump(), kJson);
}

json parse_body(const httplib::Request& req, bool allow_empty) {
  if (req.body.empty()) {
    if (allow_empty) return json::object();
    throw SessionError(400, "request body is required");
  }
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded()) throw SessionError(400, "request body is not valid JSON");
  if (!body.is_object()) throw SessionError(400, "request body must be a JSON object");
  return body;
}

int session_id(const httplib::Request& req) {
  try {
    return std::stoi(req.matches[1].str());
  } catch (const std::exception&) {
    throw SessionError(404, "session id out of range");
  }
}

// Runs `body`, mapping protocol and JSON type errors onto HTTP responses.
template <typename F>
httplib::Server::Handler guarded(F body) {
  return [body](const httplib::Request& req, httplib::Response& res) {
    try {
      body(req, res);
    } catch (const SessionError& e) {
      send_error(res, e.status(), e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, std::string("malformed field: ") + e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  };
}

} // namespace

void install_routes(httplib::Server& server, SessionStore& store, const ServeConfig& serve) {
  server.Post("/api/session", guarded([&store](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req, true);
    std::optional<TreatmentCell> cell;
    if (body.contains("cell") && !body["cell"].is_null()) {
      const std::string key = body["cell"].get<std::string>();
      cell = parse_cell(key);
      if (!cell) throw SessionError(400, "unknown cell '" + key + "'");
    }
    std::optional<bool> reverse;
    if (body.contains("reverse_order") && !body["reverse_order"].is_null())
      reverse = body["reverse_order"].get<bool>();
    send_state(res, store.create(cell, reverse), 201);
  }));

  server.Get(R"(/api/session/(\d+))", guarded([&store](const httplib::Request& req, httplib::Response& res) {
    send_state(res, store.get(session_id(req)));
  }));

  server.Post(R"(/api/session/(\d+)/task)",
              guarded([&store](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req, false);
    if (!body.contains("answer") || !body["answer"].is_number_integer())
      throw SessionError(400, "field 'answer' must be an integer");
    send_state(res, store.submit_task(session_id(req), body["answer"].get<int>()));
  }));

  server.Post(R"(/api/session/(\d+)/allocation)",
              guarded([&store](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req, false);
    if (!body.contains("rate_index") || !body["rate_index"].is_number_unsigned())
      throw SessionError(400, "field 'rate_index' must be a non-negative integer");
    if (!body.contains("e2") || !body["e2"].is_number())
      throw SessionError(400, "field 'e2' must be a number");
    const bool practice = body.value("practice", false);
    send_state(res, store.submit_allocation(session_id(req), body["rate_index"].get<std::size_t>(),
                                            body["e2"].get<double>(), practice));
  }));

  server.Post(R"(/api/session/(\d+)/advance)",
              guarded([&store](const httplib::Request& req, httplib::Response& res) {
    send_state(res, store.advance(session_id(req)));
  }));

  server.Get("/api/export", guarded([&store](const httplib::Request&, httplib::Response& res) {
    res.set_content(store.export_csv(), "text/csv");
  }));

  if (!serve.static_dir.empty() && std::filesystem::is_directory(serve.static_dir)) {
    server.set_mount_point("/", serve.static_dir);
  } else {
    server.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(kPlaceholderPage, "text/html");
    });
  }
}

int cmd_serve(const RunConfig& config, std::ostream& log) {
  const ServeConfig& serve = config.serve;
  if (!serve.static_dir.empty() && !std::filesystem::is_directory(serve.static_dir))
    log << "warning: static directory " << serve.static_dir << " does not exist; serving placeholder\n";
  std::optional<std::filesystem::path> output;
  if (!serve.output.empty()) output = serve.output;
  SessionStore store(config, output);
  httplib::Server server;
  // httplib's default also sets SO_REUSEPORT, which lets a second server share
  // an occupied port instead of failing to bind.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
  });
  install_routes(server, store, serve);
  if (!server.bind_to_port(serve.host, serve.port)) {
    log << "error: cannot bind " << serve.host << ':' << serve.port << " (port in use or not permitted)\n";
    return 1;
  }
  log << "serving on http://" << serve.host << ':' << serve.port;
  if (output) log << ", appending completed sessions to " << output->string();
  log << '\n' << std::flush;
  return server.listen_after_bind() ? 0 : 1;
}

} // namespace qhd
