#pragma once

#include <memory>
#include <string>

#include "sidetect/annotation.hpp"

namespace sidetect {

// JSON-over-HTTP front end for an AnnotationStore.
//
//   POST /sessions                              {annotator_id, seed}
//   GET  /sessions/{id}
//   GET  /sessions/{id}/next
//   POST /sessions/{id}/labels                  {tweet_id, label}
//   POST /sessions/{id}/labels/{tweet_id}/revise {label}
//   GET  /agreement?a={id}&b={id}
//   POST /merge                                 {a, b, policy}
//   GET  /guidelines
//
// Errors are {code, message} with 400/403/404/409 status codes. An
// X-Annotator-Id header, when sent, must match the session's annotator.
class AnnotationServer {
 public:
  explicit AnnotationServer(AnnotationStore& store);
  ~AnnotationServer();

  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  // Returns the bound port (an ephemeral one when port == 0).
  int bind(const std::string& host, int port);
  // Blocks until stop() is called.
  void listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace sidetect
