#pragma once

#include <memory>
#include <string>

#include "docingest/service/document_service.hpp"

namespace docingest::service {

/// HTTP+JSON front end for a DocumentService.
///
///   POST /documents                    ingest -> 201 {"page_id"}
///   GET  /documents                    {"documents": [page_id, ...]}
///   GET  /documents/{id}               document summary
///   GET  /documents/{id}/layout        layout JSON (canonical bytes)
///   POST /documents/{id}/corrections   -> 201 acknowledgment
///   POST /documents/{id}/finalize      document summary
///   GET  /corrections/staged           {"staged": [correction, ...]}
///   POST /train/incremental            -> 201 job, or 200 no-op
///   GET  /train/jobs/{id}              job
///   GET  /models/current               {"version", "model"}
///   GET  /models/{version}             {"version", "model"}
///   GET  /health                       {"status": "ok"}
///
/// Errors are {"error": kind, "message": text, "issues": [...]} with status
/// 400 (validation, bad_request), 404 (not_found), 409 (conflict) or 500.
class HttpApi {
 public:
  explicit HttpApi(DocumentService& service);
  ~HttpApi();
  HttpApi(const HttpApi&) = delete;
  HttpApi& operator=(const HttpApi&) = delete;

  /// Binds host:port; port 0 picks a free port. Returns the bound port.
  /// Throws std::runtime_error if binding fails.
  int bind(const std::string& host, int port);
  /// Serves requests until stop() is called.
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace docingest::service
