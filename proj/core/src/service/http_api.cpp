#include "docingest/service/http_api.hpp"

#include <httplib.h>

#include <exception>
#include <functional>
#include <stdexcept>
#include <string>

#include "docingest/errors.hpp"
#include "docingest/json_io.hpp"

namespace docingest::service {

namespace {

constexpr const char* kJson = "application/json";

void send_error(httplib::Response& res, int status, const std::string& kind,
                const std::string& message, const std::vector<std::string>& issues = {}) {
  OrderedJson body;
  body["error"] = kind;
  body["message"] = message;
  body["issues"] = issues;
  res.status = status;
  res.set_content(dump_json(body), kJson);
}

void send_json(httplib::Response& res, int status, const OrderedJson& body) {
  res.status = status;
  res.set_content(dump_json(body), kJson);
}

nlohmann::json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json();
  auto j = nlohmann::json::parse(req.body, nullptr, false);
  if (j.is_discarded()) throw ValidationError({"$: request body is not valid JSON"});
  return j;
}

/// Runs a handler and maps service exceptions onto HTTP errors.
httplib::Server::Handler guarded(
    std::function<void(const httplib::Request&, httplib::Response&)> fn) {
  return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const ValidationError& e) {
      send_error(res, 400, "validation", e.what(), e.issues());
    } catch (const NotFoundError& e) {
      send_error(res, 404, "not_found", e.what());
    } catch (const ConflictError& e) {
      send_error(res, 409, "conflict", e.what());
    } catch (const std::invalid_argument& e) {
      send_error(res, 400, "bad_request", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

int parse_int(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used == text.size() && v >= 0 && v <= INT32_MAX) return static_cast<int>(v);
  } catch (const std::exception&) {
  }
  throw NotFoundError("unknown " + what + " \"" + text + "\"");
}

OrderedJson model_body(const DocumentService& service, int version) {
  OrderedJson body;
  body["version"] = version;
  body["model"] = service.model_json(version);
  return body;
}

}  // namespace

struct HttpApi::Impl {
  explicit Impl(DocumentService& s) : service(s) {}
  DocumentService& service;
  httplib::Server server;
};

HttpApi::HttpApi(DocumentService& service) : impl_(std::make_unique<Impl>(service)) {
  DocumentService& svc = impl_->service;
  httplib::Server& srv = impl_->server;

  srv.Get("/health", guarded([](const auto&, auto& res) {
            OrderedJson body;
            body["status"] = "ok";
            send_json(res, 200, body);
          }));

  srv.Post("/documents", guarded([&svc](const auto& req, auto& res) {
             OrderedJson body;
             body["page_id"] = svc.ingest_document(parse_body(req));
             send_json(res, 201, body);
           }));

  srv.Get("/documents", guarded([&svc](const auto&, auto& res) {
            OrderedJson body;
            body["documents"] = svc.document_ids();
            send_json(res, 200, body);
          }));

  srv.Get(R"(/documents/([^/]+))", guarded([&svc](const auto& req, auto& res) {
            send_json(res, 200, document_summary_json(svc.get_document(req.matches[1])));
          }));

  srv.Get(R"(/documents/([^/]+)/layout)", guarded([&svc](const auto& req, auto& res) {
            res.set_content(svc.get_layout(req.matches[1]), kJson);
          }));

  srv.Post(R"(/documents/([^/]+)/corrections)", guarded([&svc](const auto& req, auto& res) {
             const std::string page_id = req.matches[1];
             const CorrectionAck ack = svc.submit_correction(parse_correction(parse_body(req), page_id));
             send_json(res, 201, ack_to_json(ack));
           }));

  srv.Post(R"(/documents/([^/]+)/finalize)", guarded([&svc](const auto& req, auto& res) {
             const std::string page_id = req.matches[1];
             svc.finalize_document(page_id);
             send_json(res, 200, document_summary_json(svc.get_document(page_id)));
           }));

  srv.Get("/corrections/staged", guarded([&svc](const auto&, auto& res) {
            OrderedJson staged = OrderedJson::array();
            for (const CorrectionRecord& c : svc.staged_corrections()) {
              staged.push_back(correction_to_json(c));
            }
            OrderedJson body;
            body["staged"] = std::move(staged);
            send_json(res, 200, body);
          }));

  srv.Post("/train/incremental", guarded([&svc](const auto& req, auto& res) {
             const auto cfg = parse_train_request(parse_body(req), svc.config().update_train);
             const TrainingJob job = svc.trigger_incremental_training(cfg);
             OrderedJson body = job_to_json(job);
             if (job.status == JobStatus::noop) body["message"] = "no staged corrections to train on";
             send_json(res, job.status == JobStatus::noop ? 200 : 201, body);
           }));

  srv.Get(R"(/train/jobs/([^/]+))", guarded([&svc](const auto& req, auto& res) {
            const int id = parse_int(req.matches[1], "training job");
            send_json(res, 200, job_to_json(svc.get_job(static_cast<std::uint64_t>(id))));
          }));

  srv.Get("/models/current", guarded([&svc](const auto&, auto& res) {
            send_json(res, 200, model_body(svc, svc.current_model_version()));
          }));

  srv.Get(R"(/models/([0-9]+))", guarded([&svc](const auto& req, auto& res) {
            send_json(res, 200, model_body(svc, parse_int(req.matches[1], "model version")));
          }));
}

HttpApi::~HttpApi() { stop(); }

int HttpApi::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host)
                              : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) {
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  }
  return bound;
}

void HttpApi::serve() { impl_->server.listen_after_bind(); }

void HttpApi::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace docingest::service
