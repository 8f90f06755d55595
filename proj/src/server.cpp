#include <atomic>
#include <charconv>

#include <httplib.h>

#include "mcfsm/error.hpp"
#include "mcfsm/service.hpp"

namespace mcfsm::service {

struct Server::Impl {
  SessionManager& sessions;
  ServerOptions options;
  httplib::Server http;
  std::atomic<bool> stopping{false};

  Impl(SessionManager& s, ServerOptions o) : sessions(s), options(std::move(o)) {}

  void routes() {
    http.Post("/api", [this](const httplib::Request& req, httplib::Response& res) {
      res.set_content(sessions.handle_text(req.body), "application/json");
    });

    http.Get("/subscribe", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string session = req.get_param_value("session");
      std::uint64_t after = 0;
      const std::string after_text = req.get_param_value("after");
      std::from_chars(after_text.data(), after_text.data() + after_text.size(), after);
      try {
        sessions.traces_after(session, after, std::chrono::milliseconds(0));
      } catch (const Error& e) {
        res.status = 404;
        Json body;
        body["type"] = "error";
        body["session"] = session;
        body["seq"] = 0;
        body["payload"] = {{"code", to_string(e.code())}, {"message", e.what()}};
        res.set_content(body.dump(), "application/json");
        return;
      }
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider(
          "text/event-stream", [this, session, after](std::size_t, httplib::DataSink& sink) mutable {
            if (stopping) return false;
            std::vector<Json> batch;
            try {
              batch = sessions.traces_after(session, after, std::chrono::milliseconds(500));
            } catch (const Error&) {
              return false;
            }
            if (batch.empty()) {
              static constexpr char kKeepAlive[] = ": keep-alive\n\n";
              return sink.write(kKeepAlive, sizeof(kKeepAlive) - 1);
            }
            for (const auto& m : batch) {
              const std::string frame =
                  "id: " + std::to_string(m["seq"].get<std::uint64_t>()) + "\ndata: " + m.dump() + "\n\n";
              if (!sink.write(frame.data(), frame.size())) return false;
              after = m["seq"].get<std::uint64_t>();
            }
            return true;
          });
    });

    if (!options.static_dir.empty()) http.set_mount_point("/", options.static_dir);
  }
};

Server::Server(SessionManager& sessions, ServerOptions options)
    : impl_(std::make_unique<Impl>(sessions, std::move(options))) {
  impl_->routes();
}

Server::~Server() { stop(); }

int Server::bind() {
  if (impl_->options.port == 0) return impl_->http.bind_to_any_port(impl_->options.host);
  return impl_->http.bind_to_port(impl_->options.host, impl_->options.port) ? impl_->options.port : -1;
}

void Server::run() { impl_->http.listen_after_bind(); }

void Server::stop() {
  impl_->stopping = true;
  impl_->http.stop();
}

}  // namespace mcfsm::service
