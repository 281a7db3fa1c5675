#include "sidetect/annotation_http.hpp"

#include <httplib.h>

#include <json.hpp>

#include "sidetect/error.hpp"

namespace sidetect {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message) {
  send_json(res, status, json{{"code", code}, {"message", message}});
}

json progress_json(const Progress& p) {
  return {{"decided", p.decided}, {"total", p.total}, {"fraction", p.fraction()}};
}

json table_json(const AgreementTable& t) {
  return {{"n00", t.n00}, {"n01", t.n01}, {"n10", t.n10}, {"n11", t.n11}, {"total", t.total()}};
}

class BadRequest : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Forbidden : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json parse_body(const httplib::Request& req) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) throw BadRequest("request body must be a JSON object");
  return body;
}

long long label_field(const json& body) {
  auto it = body.find("label");
  if (it == body.end()) throw ValidationError("missing field 'label'");
  if (!it->is_number_integer()) throw ValidationError("label must be the integer 0 or 1");
  return it->get<long long>();
}

std::string string_field(const json& body, const char* name) {
  auto it = body.find(name);
  if (it == body.end() || !it->is_string()) throw ValidationError(std::string("missing string field '") + name + "'");
  return it->get<std::string>();
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const BadRequest& e) {
      send_error(res, 400, "bad_request", e.what());
    } catch (const ValidationError& e) {
      send_error(res, 400, "validation", e.what());
    } catch (const Forbidden& e) {
      send_error(res, 403, "forbidden", e.what());
    } catch (const NotFoundError& e) {
      send_error(res, 404, "not_found", e.what());
    } catch (const ConflictError& e) {
      send_error(res, 409, "conflict", e.what());
    } catch (const DataError& e) {
      send_error(res, 422, "data", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

}  // namespace

struct AnnotationServer::Impl {
  AnnotationStore& store;
  httplib::Server server;

  explicit Impl(AnnotationStore& s) : store(s) { routes(); }

  void check_annotator(const httplib::Request& req, const std::string& session_id) {
    if (!req.has_header("X-Annotator-Id")) return;
    const auto claimed = req.get_header_value("X-Annotator-Id");
    if (claimed != store.session(session_id).annotator_id) {
      throw Forbidden("annotator '" + claimed + "' does not own session '" + session_id + "'");
    }
  }

  void routes() {
    server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      std::string annotator = body.contains("annotator_id") ? string_field(body, "annotator_id")
                                                            : req.get_header_value("X-Annotator-Id");
      std::uint64_t seed = 0;
      if (auto it = body.find("seed"); it != body.end()) {
        if (!it->is_number_unsigned()) throw ValidationError("seed must be a non-negative integer");
        seed = it->get<std::uint64_t>();
      }
      const auto s = store.create_session(annotator, seed);
      send_json(res, 201,
                {{"session_id", s.session_id},
                 {"annotator_id", s.annotator_id},
                 {"seed", s.seed},
                 {"guideline_version", s.guideline_version},
                 {"progress", progress_json(progress(s))}});
    }));

    server.Get(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto s = store.session(req.matches[1]);
      send_json(res, 200,
                {{"session_id", s.session_id},
                 {"annotator_id", s.annotator_id},
                 {"guideline_version", s.guideline_version},
                 {"progress", progress_json(progress(s))}});
    }));

    server.Get(R"(/sessions/([^/]+)/next)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      check_annotator(req, id);
      const auto item = store.next(id);
      json body{{"done", !item.tweet.has_value()}, {"progress", progress_json(item.progress)}};
      if (item.tweet) body["tweet"] = {{"id", item.tweet->id}, {"text", item.tweet->text}};
      send_json(res, 200, body);
    }));

    server.Post(R"(/sessions/([^/]+)/labels)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      check_annotator(req, id);
      const json body = parse_body(req);
      const auto tweet = string_field(body, "tweet_id");
      const auto p = store.submit(id, tweet, label_field(body));
      send_json(res, 200, {{"session_id", id}, {"tweet_id", tweet}, {"progress", progress_json(p)}});
    }));

    server.Post(R"(/sessions/([^/]+)/labels/([^/]+)/revise)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1];
                  const std::string tweet = req.matches[2];
                  check_annotator(req, id);
                  const json body = parse_body(req);
                  const auto p = store.revise(id, tweet, label_field(body));
                  send_json(res, 200,
                            {{"session_id", id}, {"tweet_id", tweet}, {"revised", true}, {"progress", progress_json(p)}});
                }));

    server.Get("/agreement", guarded([this](const httplib::Request& req, httplib::Response& res) {
      if (!req.has_param("a") || !req.has_param("b")) throw ValidationError("query parameters a and b are required");
      const auto k = store.agreement(req.get_param_value("a"), req.get_param_value("b"));
      if (k.status == LiveKappa::Status::insufficient_overlap) {
        send_json(res, 200, {{"status", "insufficient_overlap"}, {"overlap", k.overlap}});
        return;
      }
      if (k.status == LiveKappa::Status::insufficient_variation) {
        send_json(res, 200,
                  {{"status", "insufficient_variation"}, {"overlap", k.overlap}, {"table", table_json(k.table)}});
        return;
      }
      send_json(res, 200,
                {{"status", "ok"},
                 {"overlap", k.overlap},
                 {"kappa", k.result.kappa},
                 {"pa", k.result.observed},
                 {"pe", k.result.expected},
                 {"table", table_json(k.table)}});
    }));

    server.Post("/merge", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      const auto policy_name = string_field(body, "policy");
      const auto policy = parse_merge_policy(policy_name);
      if (!policy) throw ValidationError("unknown merge policy '" + policy_name + "'");
      const auto gold = store.merge(string_field(body, "a"), string_field(body, "b"), *policy);
      json labels = json::array();
      for (const auto& [id, label] : gold.labels) labels.push_back({{"id", id}, {"label", static_cast<int>(label)}});
      json log = json::array();
      for (const auto& r : gold.resolution_log) {
        log.push_back({{"tweet", r.tweet_id},
                       {"a", static_cast<int>(r.label_a)},
                       {"b", static_cast<int>(r.label_b)},
                       {"resolution", r.resolution}});
      }
      send_json(res, 200, {{"gold", labels}, {"adjudication", gold.adjudication}, {"resolution_log", log}});
    }));

    server.Get("/guidelines", guarded([this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"version", store.guidelines().version}, {"text", store.guidelines().text}});
    }));
  }
};

AnnotationServer::AnnotationServer(AnnotationStore& store) : impl_(std::make_unique<Impl>(store)) {}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

void AnnotationServer::listen() { impl_->server.listen_after_bind(); }

void AnnotationServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void AnnotationServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace sidetect
