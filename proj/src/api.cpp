#include "topicens/api.hpp"

#include <charconv>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <sstream>

#include "httplib.h"
#include "topicens/docviews.hpp"
#include "topicens/error.hpp"

namespace topicens {

using nlohmann::json;

namespace {

struct HttpError {
  int status;
  std::string code;
  std::string message;
};

[[noreturn]] void bad_request(const std::string& message) { throw HttpError{400, "bad_request", message}; }
[[noreturn]] void not_found(const std::string& message) { throw HttpError{404, "not_found", message}; }
[[noreturn]] void unavailable(const std::string& message) { throw HttpError{422, "capability_unavailable", message}; }

ApiResponse error_response(const HttpError& e) {
  return {e.status, {{"error", e.code}, {"message", e.message}}};
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = text.find(sep, start);
    out.emplace_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<std::string> param(const ApiRequest& r, const std::string& name) {
  const auto it = r.query.find(name);
  if (it == r.query.end()) return std::nullopt;
  return it->second;
}

std::size_t to_size(const std::string& s, const std::string& what) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) bad_request("invalid " + what + " '" + s + "'");
  return v;
}

double to_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) bad_request("invalid " + what + " '" + s + "'");
  return v;
}

bool to_bool(const std::string& s, const std::string& what) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  bad_request("invalid " + what + " '" + s + "' (expected true or false)");
}

/// "m/t", "m:t" or "m,t".
TopicRef parse_ref(const std::string& s) {
  const auto sep = s.find_first_of("/:,");
  if (sep == std::string::npos) bad_request("invalid topic reference '" + s + "'");
  return {to_size(s.substr(0, sep), "model index"), to_size(s.substr(sep + 1), "topic index")};
}

/// Comma-separated list of "m/t" (or "m:t") references.
std::vector<TopicRef> parse_ref_list(const std::string& s) {
  std::vector<TopicRef> out;
  if (s.empty()) return out;
  for (const auto& item : split(s, ',')) {
    if (item.find_first_of("/:") == std::string::npos) bad_request("topic list entries must look like m/t: '" + item + "'");
    out.push_back(parse_ref(item));
  }
  return out;
}

std::string full_precision(double v) {
  std::ostringstream ss;
  ss << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return ss.str();
}

json ref_json(const TopicRef& r) { return {{"model_index", r.model_index}, {"topic_index", r.topic_index}}; }

const Ensemble& need_ensemble(const Project& p) {
  if (!p.ensemble) unavailable("project has no ensemble");
  return *p.ensemble;
}

const EnsembleMetrics& need_metrics(const Project& p) {
  if (!p.metrics) unavailable("project has no uncertainty metrics; run the metrics step");
  return *p.metrics;
}

TopicRef need_topic(const Ensemble& e, const std::string& m, const std::string& t) {
  const TopicRef ref{to_size(m, "model index"), to_size(t, "topic index")};
  if (!e.contains(ref)) not_found("unknown topic " + m + "/" + t);
  return ref;
}

json top_terms_json(const Ensemble& e, TopicRef ref, std::size_t n) {
  json out = json::array();
  const auto phi = e.phi(ref);
  for (TermId id : top_terms(e, ref, n)) out.push_back({{"term", e.vocabulary.term(id)}, {"p", phi[id]}});
  return out;
}

json topic_record_json(const Project& p, TopicRef ref, std::size_t top_n) {
  const auto& e = *p.ensemble;
  const auto& m = *p.metrics;
  const std::size_t i = e.flat_index(ref);
  const auto& rec = m.records[i];
  json j = ref_json(ref);
  if (p.embedding) {
    j["x"] = p.embedding->coords[i][0];
    j["y"] = p.embedding->coords[i][1];
  }
  j["u_match"] = rec.u_match;
  j["u_exist"] = rec.u_exist;
  j["stability"] = {{"u_match", to_string(classify(rec.u_match, p.view.thresholds))},
                    {"u_exist", to_string(classify(rec.u_exist, p.view.thresholds))}};
  j["flags"] = {{"degenerate_pairs", rec.degenerate_pairs}, {"single_topic_pairs", rec.single_topic_pairs}};
  j["top_terms"] = top_terms_json(e, ref, top_n);
  return j;
}

json summary_json(const MeasureSummary& s) {
  return {{"mean", s.mean}, {"median", s.median}, {"stable", s.stable}, {"grey", s.grey}, {"unstable", s.unstable}};
}

FilterSpec filter_from_query(const ApiRequest& r, std::size_t default_top_n) {
  FilterSpec f;
  f.top_n = default_top_n;
  if (auto v = param(r, "top_n")) f.top_n = to_size(*v, "top_n");
  if (auto v = param(r, "selected")) f.selected = parse_ref_list(*v);
  if (auto v = param(r, "terms")) {
    for (auto& t : split(*v, ',')) {
      if (!t.empty()) f.terms.push_back(std::move(t));
    }
  }
  const auto [lo, hi] = r.query.equal_range("term");
  for (auto it = lo; it != hi; ++it) f.terms.push_back(it->second);

  std::optional<UncertaintyFilter> u;
  if (auto v = param(r, "u_measure")) {
    u = UncertaintyFilter{};
    try {
      u->measure = measure_from_string(*v);
    } catch (const std::invalid_argument& e) {
      bad_request(e.what());
    }
    if (auto mx = param(r, "u_max")) u->max_value = to_double(*mx, "u_max");
    if (auto mn = param(r, "u_min")) u->min_value = to_double(*mn, "u_min");
  }
  for (const auto measure : {Measure::u_match, Measure::u_exist}) {
    const std::string name(to_string(measure));
    const auto mx = param(r, name + "_max");
    const auto mn = param(r, name + "_min");
    if (!mx && !mn) continue;
    if (u && u->measure != measure) bad_request("only one uncertainty measure can be filtered at a time");
    if (!u) u = UncertaintyFilter{measure, std::nullopt, std::nullopt};
    if (mx) u->max_value = to_double(*mx, name + "_max");
    if (mn) u->min_value = to_double(*mn, name + "_min");
  }
  f.uncertainty = u;

  if (auto a = param(r, "anchor")) {
    SimilarityFilter s;
    s.anchor = parse_ref(*a);
    if (auto v = param(r, "min_similarity")) s.min_similarity = to_double(*v, "min_similarity");
    if (auto v = param(r, "min")) s.min_similarity = to_double(*v, "min");
    if (auto v = param(r, "best_per_model")) s.best_per_model = to_bool(*v, "best_per_model");
    f.similar_to = s;
  }
  return f;
}

FilterResult run_filter(const Project& p, const FilterSpec& f) {
  const auto& e = need_ensemble(p);
  const auto& m = need_metrics(p);
  if (f.selected) {
    for (const auto& r : *f.selected) {
      if (!e.contains(r)) not_found("unknown topic " + std::to_string(r.model_index) + "/" + std::to_string(r.topic_index));
    }
  }
  if (f.similar_to && !e.contains(f.similar_to->anchor)) not_found("unknown anchor topic");
  try {
    return apply_filter(f, e, m.records, m.similarity);
  } catch (const std::invalid_argument& ex) {
    bad_request(ex.what());
  }
}

json parse_body(const ApiRequest& r) {
  try {
    auto j = json::parse(r.body.empty() ? std::string("{}") : r.body);
    if (!j.is_object()) bad_request("request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    bad_request(std::string("malformed JSON body: ") + e.what());
  }
}

std::vector<TopicRef> members_from_body(const json& body) {
  if (!body.contains("members") || !body["members"].is_array()) bad_request("'members' must be an array");
  std::vector<TopicRef> out;
  for (const auto& m : body["members"]) {
    if (m.is_object()) {
      const auto model = m.contains("model") ? m["model"] : m.value("model_index", json());
      const auto topic = m.contains("topic") ? m["topic"] : m.value("topic_index", json());
      if (!model.is_number_unsigned() || !topic.is_number_unsigned()) bad_request("member needs unsigned model and topic");
      out.push_back({model.get<std::size_t>(), topic.get<std::size_t>()});
    } else if (m.is_string()) {
      out.push_back(parse_ref(m.get<std::string>()));
    } else {
      bad_request("members entries must be {model, topic} objects");
    }
  }
  if (out.empty()) bad_request("a group needs at least one member");
  return out;
}

}  // namespace

Api::Api(Project project, std::optional<std::filesystem::path> save_path)
    : project_(std::move(project)), save_path_(std::move(save_path)) {}

Project Api::project() const {
  std::shared_lock lock(mutex_);
  return project_;
}

ApiResponse Api::handle(const ApiRequest& request) {
  try {
    if (request.method == "GET") {
      std::shared_lock lock(mutex_);
      return get(request);
    }
    if (request.method == "POST" || request.method == "PUT" || request.method == "DELETE") {
      std::unique_lock lock(mutex_);
      return mutate(request);
    }
    return error_response({405, "method_not_allowed", "method " + request.method + " is not supported"});
  } catch (const HttpError& e) {
    return error_response(e);
  } catch (const CapabilityError& e) {
    return error_response({422, "capability_unavailable", e.what()});
  } catch (const std::out_of_range& e) {
    return error_response({404, "not_found", e.what()});
  } catch (const std::invalid_argument& e) {
    return error_response({400, "bad_request", e.what()});
  } catch (const std::exception& e) {
    return error_response({500, "internal_error", e.what()});
  }
}

ApiResponse Api::get(const ApiRequest& r) {
  const auto seg = split(r.path, '/');
  // seg[0] is empty (leading slash), seg[1] == "api"
  if (seg.size() < 3 || !seg[0].empty() || seg[1] != "api") not_found("no route for " + r.path);
  const Project& p = project_;
  const std::string& res = seg[2];
  const std::size_t n = seg.size();

  if (res == "project" && n == 3) {
    json j = {{"id", p.id}, {"revision", p.revision}};
    j["view"] = {{"top_n", p.view.top_n},
                 {"stable_below", p.view.thresholds.stable_below},
                 {"unstable_above", p.view.thresholds.unstable_above},
                 {"color_map", p.view.color_map}};
    if (p.ensemble) {
      const auto& e = *p.ensemble;
      json members = json::array();
      for (std::size_t i = 0; i < e.size(); ++i) {
        members.push_back({{"model_index", i},
                           {"k", e.members[i].num_topics()},
                           {"config", config_to_json(e.members[i].config)},
                           {"source", e.provenance[i].source},
                           {"has_theta", e.members[i].has_theta()}});
      }
      j["ensemble"] = {{"spec", spec_to_json(e.spec)},
                       {"imported", e.imported},
                       {"members", members},
                       {"total_topics", e.total_topics()},
                       {"vocabulary_size", e.vocabulary.size()},
                       {"documents", e.doc_ids.size()}};
    }
    if (p.metrics) {
      const auto s = ensemble_summary(p.metrics->records, p.view.thresholds);
      j["summary"] = {{"topics", s.topics}, {"u_match", summary_json(s.u_match)}, {"u_exist", summary_json(s.u_exist)}};
      try {
        const auto c = correlation(p.metrics->records);
        j["correlation"] = {{"pearson", c.pearson}, {"spearman", c.spearman}};
      } catch (const std::exception&) {
        j["correlation"] = nullptr;
      }
    }
    j["capabilities"] = {{"documents", p.documents_available()},
                         {"embedding", p.embedding.has_value()},
                         {"metrics", p.metrics.has_value()}};
    return {200, j};
  }

  if (res == "topics" && n == 3) {
    const auto& e = need_ensemble(p);
    need_metrics(p);
    auto f = filter_from_query(r, p.view.top_n);
    json topics = json::array();
    json warnings = json::array();
    std::vector<TopicRef> refs;
    if (f.has_criterion()) {
      auto result = run_filter(p, f);
      refs = std::move(result.refs);
      for (auto& w : result.warnings) warnings.push_back(std::move(w));
    } else {
      refs = e.refs();
    }
    for (const auto& ref : refs) topics.push_back(topic_record_json(p, ref, f.top_n));
    return {200, {{"topics", topics}, {"warnings", warnings}}};
  }

  if (res == "topics" && n == 5) {
    const auto& e = need_ensemble(p);
    need_metrics(p);
    const auto ref = need_topic(e, seg[3], seg[4]);
    std::size_t top_n = p.view.top_n;
    if (auto v = param(r, "top_n")) top_n = to_size(*v, "top_n");
    json j = topic_record_json(p, ref, top_n);
    json phi = json::array();
    for (double v : e.phi(ref)) phi.push_back(full_precision(v));
    j["phi"] = phi;
    return {200, j};
  }

  if (res == "topics" && n == 6 && seg[5] == "documents") {
    const auto& e = need_ensemble(p);
    const auto ref = need_topic(e, seg[3], seg[4]);
    std::size_t limit = 20;
    if (auto v = param(r, "limit")) limit = to_size(*v, "limit");
    const auto ranking = rank_documents(ref, e, limit);
    json rows = json::array();
    for (const auto& row : ranking.rows) {
      json jr = {{"doc_id", row.doc_id}, {"doc_index", row.doc_index}, {"theta", row.theta}};
      if (const auto* d = p.find_document(row.doc_id)) jr["title"] = d->title;
      rows.push_back(std::move(jr));
    }
    return {200, {{"topic", ref_json(ref)}, {"rows", rows}}};
  }

  if (res == "similarity" && n == 3) {
    const auto& e = need_ensemble(p);
    const auto& m = need_metrics(p);
    if (!param(r, "anchor")) bad_request("missing 'anchor' parameter");
    FilterSpec f;
    SimilarityFilter s;
    s.anchor = parse_ref(*param(r, "anchor"));
    if (auto v = param(r, "min")) s.min_similarity = to_double(*v, "min");
    if (auto v = param(r, "best_per_model")) s.best_per_model = to_bool(*v, "best_per_model");
    f.similar_to = s;
    const auto result = run_filter(p, f);
    const std::size_t anchor = e.flat_index(s.anchor);
    json results = json::array();
    for (const auto& ref : result.refs) {
      json jr = ref_json(ref);
      jr["similarity"] = m.similarity(anchor, e.flat_index(ref));
      results.push_back(std::move(jr));
    }
    return {200, {{"anchor", ref_json(s.anchor)}, {"results", results}}};
  }

  if (res == "heatmap" && n == 3) {
    const auto& e = need_ensemble(p);
    const auto refs = parse_ref_list(param(r, "refs").value_or(""));
    if (refs.empty()) bad_request("'refs' must list at least one topic");
    for (const auto& ref : refs) {
      if (!e.contains(ref)) not_found("unknown topic in refs");
    }
    std::size_t top_n = p.view.top_n;
    if (auto v = param(r, "top_n")) top_n = to_size(*v, "top_n");
    const auto h = heatmap(e, refs, top_n);
    json rows = json::array();
    for (const auto& ref : h.rows) {
      json jr = ref_json(ref);
      jr["label"] = std::to_string(ref.model_index) + "/" + std::to_string(ref.topic_index);
      rows.push_back(std::move(jr));
    }
    json columns = json::array();
    for (std::size_t c = 0; c < h.columns.size(); ++c) {
      double mean = 0.0;
      for (std::size_t i = 0; i < h.rows.size(); ++i) mean += h.values(i, c);
      columns.push_back({{"term", e.vocabulary.term(h.columns[c])}, {"mean", mean / static_cast<double>(h.rows.size())}});
    }
    json values = json::array();
    for (std::size_t i = 0; i < h.rows.size(); ++i) {
      const auto row = h.values.row(i);
      values.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return {200, {{"rows", rows}, {"columns", columns}, {"values", values}}};
  }

  if (res == "documents" && n == 4) {
    const auto& e = need_ensemble(p);
    if (!p.documents_available()) unavailable("corpus documents are not loaded; the document view is unavailable");
    const Document* doc = p.find_document(seg[3]);
    if (doc == nullptr) not_found("unknown document '" + seg[3] + "'");
    const std::size_t model = to_size(param(r, "model").value_or("0"), "model");
    if (model >= e.size()) not_found("unknown model " + std::to_string(model));
    HighlightRule rule = HighlightRule::document_contextual;
    if (auto v = param(r, "rule")) {
      if (*v == "global") {
        rule = HighlightRule::global;
      } else if (*v != "contextual") {
        bad_request("rule must be 'contextual' or 'global'");
      }
    }
    std::size_t doc_index = 0;
    if (rule == HighlightRule::document_contextual) {
      const auto idx = p.doc_index(doc->id);
      if (!idx) unavailable("document '" + doc->id + "' has no topic proportions in this ensemble");
      doc_index = *idx;
    }
    const auto h = highlight(*doc, doc_index, e.members[model], e.vocabulary, rule);
    json spans = json::array();
    for (const auto& s : h.spans) {
      spans.push_back({{"begin", s.span.begin}, {"end", s.span.end}, {"topic", s.topic}, {"color", s.color}});
    }
    return {200,
            {{"doc_id", h.doc_id}, {"title", doc->title}, {"model_index", model}, {"raw_text", h.raw_text}, {"spans", spans}}};
  }

  if (res == "embedding" && n == 3) {
    if (!p.embedding) unavailable("project has no embedding; run the embed step");
    json points = json::array();
    for (std::size_t i = 0; i < p.embedding->coords.size(); ++i) {
      json jp = ref_json(p.embedding->refs[i]);
      jp["x"] = p.embedding->coords[i][0];
      jp["y"] = p.embedding->coords[i][1];
      points.push_back(std::move(jp));
    }
    return {200, {{"points", points}, {"initial_kl", p.embedding->initial_kl}, {"final_kl", p.embedding->final_kl}}};
  }

  if (res == "vocabulary" && n == 3) {
    return {200, {{"terms", need_ensemble(p).vocabulary.terms()}}};
  }

  if (res == "groups" && n == 3) {
    json groups = json::array();
    for (const auto& g : p.groups) groups.push_back(group_to_json(g));
    return {200, {{"groups", groups}, {"revision", p.revision}}};
  }

  not_found("no route for GET " + r.path);
}

ApiResponse Api::mutate(const ApiRequest& r) {
  const auto seg = split(r.path, '/');
  if (seg.size() < 3 || seg.size() > 4 || !seg[0].empty() || seg[1] != "api" || seg[2] != "groups") {
    not_found("no route for " + r.method + " " + r.path);
  }
  Project& p = project_;
  const auto& e = need_ensemble(p);
  const Embedding empty_embedding;
  const Embedding& emb = p.embedding ? *p.embedding : empty_embedding;

  json body = r.method == "DELETE" && r.body.empty() ? json::object() : parse_body(r);
  std::optional<std::uint64_t> revision;
  if (body.contains("revision")) {
    if (!body["revision"].is_number_unsigned()) bad_request("'revision' must be an unsigned integer");
    revision = body["revision"].get<std::uint64_t>();
  } else if (auto v = param(r, "revision")) {
    revision = to_size(*v, "revision");
  }
  if (!revision) bad_request("mutations must echo the current project 'revision'");
  if (*revision != p.revision) {
    throw HttpError{409, "conflict",
                    "revision " + std::to_string(*revision) + " is stale; current revision is " +
                        std::to_string(p.revision)};
  }

  const auto old_groups = p.groups;
  const auto old_revision = p.revision;
  const auto old_next = p.next_group_id;
  json response;
  int status = 200;

  if (r.method == "POST" && seg.size() == 3) {
    const std::string label = body.value("label", "");
    auto group = make_group("g" + std::to_string(p.next_group_id), label, members_from_body(body), e, emb);
    ++p.next_group_id;
    p.groups.push_back(group);
    response["group"] = group_to_json(group);
    status = 201;
  } else if ((r.method == "PUT" || r.method == "DELETE") && seg.size() == 4) {
    const auto it = std::find_if(p.groups.begin(), p.groups.end(), [&](const TopicGroup& g) { return g.id == seg[3]; });
    if (it == p.groups.end()) not_found("unknown group '" + seg[3] + "'");
    if (r.method == "PUT") {
      std::string label = it->label;
      if (body.contains("label")) {
        if (!body["label"].is_string()) bad_request("'label' must be a string");
        label = body["label"].get<std::string>();
      }
      auto members = body.contains("members") ? members_from_body(body) : it->members;
      *it = make_group(it->id, label, std::move(members), e, emb);
      response["group"] = group_to_json(*it);
    } else {
      response["deleted"] = it->id;
      p.groups.erase(it);
    }
  } else {
    not_found("no route for " + r.method + " " + r.path);
  }

  ++p.revision;
  if (save_path_) {
    try {
      save_project(p, *save_path_);
    } catch (...) {
      p.groups = old_groups;
      p.revision = old_revision;
      p.next_group_id = old_next;
      throw;
    }
  }
  response["revision"] = p.revision;
  return {status, response};
}

struct HttpServer::Impl {
  Api& api;
  httplib::Server server;
  explicit Impl(Api& a) : api(a) {}
};

HttpServer::HttpServer(Api& api) : impl_(std::make_unique<Impl>(api)) {
  const auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    ApiRequest ar;
    ar.method = req.method;
    ar.path = req.path;
    for (const auto& [k, v] : req.params) ar.query.emplace(k, v);
    ar.body = req.body;
    const auto out = impl_->api.handle(ar);
    res.status = out.status;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(out.body.dump(), "application/json");
  };
  impl_->server.Get(".*", handler);
  impl_->server.Post(".*", handler);
  impl_->server.Put(".*", handler);
  impl_->server.Delete(".*", handler);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  if (!impl_->server.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

int default_port() {
  if (const char* env = std::getenv("TOPICENS_PORT")) {
    int port = 0;
    const std::string_view s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), port);
    if (ec == std::errc() && ptr == s.data() + s.size() && port > 0 && port < 65536) return port;
  }
  return 8080;
}

}  // namespace topicens
