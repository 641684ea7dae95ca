#include "ace/service.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "ace/text.hpp"

namespace ace::service {

namespace fs = std::filesystem;
using nlohmann::json;

// -- config ------------------------------------------------------------------------

ServiceConfig load_service_config(const fs::path& file) {
  const auto j = corpus::read_json_file(file);
  const auto base = file.parent_path();
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_relative() ? base / path : path;
  };
  ServiceConfig c;
  try {
    c.corpus = corpus::load_corpus(resolve(j.at("corpus_dir").get<std::string>()));
    if (j.contains("data_dir")) c.data_dir = resolve(j.at("data_dir").get<std::string>());
    c.seed = j.value("seed", std::uint64_t{0});
    c.snapshot_every = j.value("snapshot_every", std::size_t{8});
    const auto few = j.value("few_shots", std::size_t{2});
    for (std::size_t i = 0; i < c.corpus.threads.size() && i < few; ++i) c.few_shots.push_back(c.corpus.threads[i]);
    for (const auto& [key, s] : j.at("slots").items()) {
      int slot = 0;
      try {
        slot = std::stoi(key);
      } catch (const std::exception&) {
        throw Error("slot key '" + key + "' is not a number");
      }
      if (slot < kMinSlot || slot > kMaxSlot) throw Error("slot " + key + " outside 1..4");
      SlotConfig sc;
      sc.backend = llm::make_backend(s.at("backend"), base);
      sc.model = s.contains("model")
                     ? std::make_shared<const reward::RewardModel>(
                           reward::RewardModel::load(resolve(s.at("model").get<std::string>())))
                     : std::make_shared<const reward::RewardModel>();
      if (s.contains("best_of_n")) sc.best_of_n = align::best_of_n_config_from_json(s.at("best_of_n"));
      sc.prompt.include_fix = s.value("include_fix", false);
      sc.prompt.max_few_shots = few;
      c.slots.emplace(slot, std::move(sc));
    }
  } catch (const json::exception& e) {
    throw Error(file.string() + ": invalid service config: " + e.what());
  }
  return c;
}

// -- types -------------------------------------------------------------------------

std::string to_string(Label l) {
  switch (l) {
    case Label::true_positive: return "true_positive";
    case Label::false_positive: return "false_positive";
    case Label::false_negative: return "false_negative";
  }
  return "true_positive";
}

std::optional<Label> parse_label(std::string_view s) {
  if (s == "true_positive") return Label::true_positive;
  if (s == "false_positive") return Label::false_positive;
  if (s == "false_negative") return Label::false_negative;
  return std::nullopt;
}

bool Session::pending() const { return !turns.empty() && turns.back().turn.speaker == corpus::Speaker::student; }

namespace {

json audit_json(const align::BestOfNResult& r) {
  json j = r;
  return j;
}

align::BestOfNResult audit_from_json(const json& j) {
  align::BestOfNResult r;
  r.chosen_index = j.at("chosen_index").get<std::size_t>();
  r.chosen = j.at("chosen").get<std::string>();
  for (const auto& c : j.at("candidates")) {
    align::Candidate cand{c.at("text").get<std::string>(), c.at("score").get<double>(), std::nullopt};
    if (!c.at("duplicate_of").is_null()) cand.duplicate_of = c.at("duplicate_of").get<std::size_t>();
    r.candidates.push_back(std::move(cand));
  }
  return r;
}

json turn_json(const SessionTurn& t) {
  json j = t.turn;
  if (t.audit) j["audit"] = audit_json(*t.audit);
  return j;
}

SessionTurn turn_from_json(const json& j) {
  SessionTurn t;
  auto stripped = j;
  stripped.erase("audit");
  std::vector<Issue> issues;
  t.turn = corpus::turn_from_json(stripped, issues);
  if (!issues.empty()) throw Error("malformed session turn: " + to_string(issues.front()));
  if (j.contains("audit")) t.audit = audit_from_json(j.at("audit"));
  return t;
}

std::string now_iso8601() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Response error(int status, const std::string& message) { return {status, json{{"error", message}}}; }

void write_atomic(const fs::path& path, const std::string& content) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    out << content;
    out.flush();
    if (!out) throw Error("cannot write " + tmp);
  }
  fs::rename(tmp, path);
}

void append_line(const fs::path& path, const json& record) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot append to " + path.string());
  out << record.dump() << '\n';
  out.flush();
  if (!out) throw Error("cannot append to " + path.string());
}

// Complete lines of a JSONL file; a final line without '\n' is a torn write
// and is dropped.
std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string data = ss.str();
  std::vector<json> out;
  std::size_t start = 0;
  int line = 0;
  while (start < data.size()) {
    const auto nl = data.find('\n', start);
    if (nl == std::string::npos) {
      spdlog::warn("{}: ignoring truncated final line", path.string());
      break;
    }
    ++line;
    const auto text = std::string_view(data).substr(start, nl - start);
    start = nl + 1;
    if (text.empty()) continue;
    try {
      out.push_back(json::parse(text));
    } catch (const json::parse_error& e) {
      if (start >= data.size()) {
        spdlog::warn("{}: ignoring unparsable final line", path.string());
        break;
      }
      throw Error(path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
  }
  return out;
}

void apply_event(Session& s, const json& ev) {
  const auto type = ev.at("type").get<std::string>();
  if (type == "turn") s.turns.push_back(turn_from_json(ev.at("turn")));
  else if (type == "closed") s.status = SessionStatus::closed;
  else throw Error("unknown session event '" + type + "'");
}

}  // namespace

json to_json(const Session& s) {
  json turns = json::array();
  for (const auto& t : s.turns) turns.push_back(turn_json(t));
  return {{"id", s.id},
          {"problem_id", s.problem_id},
          {"model_slot", s.model_slot},
          {"created_at", s.created_at},
          {"status", s.status == SessionStatus::open ? "open" : "closed"},
          {"pending", s.pending()},
          {"turns", turns}};
}

Session session_from_json(const json& j) {
  Session s;
  try {
    s.id = j.at("id").get<std::string>();
    s.problem_id = j.at("problem_id").get<std::string>();
    s.model_slot = j.at("model_slot").get<int>();
    s.created_at = j.at("created_at").get<std::string>();
    const auto status = j.at("status").get<std::string>();
    if (status != "open" && status != "closed") throw Error("unknown session status '" + status + "'");
    s.status = status == "open" ? SessionStatus::open : SessionStatus::closed;
    for (const auto& t : j.at("turns")) s.turns.push_back(turn_from_json(t));
  } catch (const json::exception& e) {
    throw Error(std::string("malformed session: ") + e.what());
  }
  return s;
}

std::vector<std::string> check_invariants(const Session& s) {
  std::vector<std::string> out;
  if (s.id.empty()) out.push_back("empty session id");
  if (s.model_slot < kMinSlot || s.model_slot > kMaxSlot) out.push_back("model_slot outside 1..4");
  for (std::size_t i = 0; i < s.turns.size(); ++i) {
    const auto& t = s.turns[i];
    const auto expected = i % 2 == 0 ? corpus::Speaker::student : corpus::Speaker::assistant;
    if (t.turn.speaker != expected) out.push_back("turn " + std::to_string(i) + " breaks alternation");
    if (t.turn.speaker == corpus::Speaker::assistant && !t.audit)
      out.push_back("assistant turn " + std::to_string(i) + " has no candidate audit");
    if (t.turn.text.empty()) out.push_back("turn " + std::to_string(i) + " is empty");
  }
  return out;
}

// -- service -----------------------------------------------------------------------

struct TutorService::Entry {
  std::mutex mu;
  Session session;
  std::size_t event_count = 0;
  std::size_t since_snapshot = 0;
  fs::path events_path;
  fs::path snapshot_path;
};

TutorService::TutorService(ServiceConfig config) : config_(std::move(config)), id_rng_(config_.seed) {
  if (config_.data_dir.empty()) throw Error("service data_dir is not set");
  fs::create_directories(config_.data_dir / "sessions");
  load_existing();
}

TutorService::~TutorService() = default;

void TutorService::load_existing() {
  for (const auto& e : fs::directory_iterator(config_.data_dir / "sessions")) {
    const auto name = e.path().filename().string();
    const std::string suffix = ".events.jsonl";
    if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0)
      continue;
    auto entry = std::make_shared<Entry>();
    entry->events_path = e.path();
    entry->snapshot_path = e.path().parent_path() / (name.substr(0, name.size() - suffix.size()) + ".snapshot.json");
    const auto events = read_jsonl(entry->events_path);
    if (events.empty()) continue;
    std::size_t applied = 0;
    if (fs::exists(entry->snapshot_path)) {
      const auto snap = corpus::read_json_file(entry->snapshot_path);
      entry->session = session_from_json(snap.at("session"));
      applied = snap.at("event_count").get<std::size_t>();
      if (applied > events.size()) throw Error(entry->snapshot_path.string() + ": snapshot is ahead of the event log");
    } else {
      const auto& created = events.front();
      if (created.at("type") != "created") throw Error(entry->events_path.string() + ": first event is not 'created'");
      entry->session = session_from_json(created.at("session"));
      applied = 1;
    }
    for (std::size_t i = applied; i < events.size(); ++i) apply_event(entry->session, events[i]);
    entry->event_count = events.size();
    const auto problems = check_invariants(entry->session);
    if (!problems.empty()) throw Error(entry->events_path.string() + ": " + problems.front());
    sessions_.emplace(entry->session.id, entry);
  }

  const auto ratings = config_.data_dir / "ratings.jsonl";
  if (fs::exists(ratings)) {
    for (const auto& r : read_jsonl(ratings)) {
      if (r.at("kind") == "turn") {
        TurnRating t{r.at("session_id").get<std::string>(), r.at("turn_idx").get<std::size_t>(),
                     *parse_label(r.at("label").get<std::string>()), r.at("rater_id").get<std::string>()};
        rated_turns_.emplace(t.session_id, t.turn_idx, t.rater_id);
        turn_ratings_.push_back(std::move(t));
      } else {
        ModelRating m{r.at("session_id").get<std::string>(), r.at("rater_id").get<std::string>(),
                      r.at("scores").get<std::map<std::string, int>>()};
        rated_sessions_.emplace(m.session_id, m.rater_id);
        model_ratings_.push_back(std::move(m));
      }
    }
  }
  spdlog::info("loaded {} sessions and {} ratings from {}", sessions_.size(),
               turn_ratings_.size() + model_ratings_.size(), config_.data_dir.string());
}

std::string TutorService::new_session_id() {
  for (;;) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(id_rng_()));
    if (!sessions_.count(buf)) return buf;
  }
}

std::shared_ptr<TutorService::Entry> TutorService::find(const std::string& id) const {
  std::lock_guard lock(sessions_mu_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::size_t TutorService::session_count() const {
  std::lock_guard lock(sessions_mu_);
  return sessions_.size();
}

void TutorService::append_event(Entry& entry, const json& event) {
  append_line(entry.events_path, event);
  ++entry.event_count;
  if (++entry.since_snapshot >= config_.snapshot_every) {
    write_atomic(entry.snapshot_path,
                 corpus::canonical_dump(json{{"event_count", entry.event_count}, {"session", to_json(entry.session)}}));
    entry.since_snapshot = 0;
  }
}

Response TutorService::list_problems() const {
  json out = json::array();
  for (const auto& p : config_.corpus.problems)
    out.push_back({{"id", p.id}, {"title", p.title}, {"difficulty", corpus::to_string(p.difficulty)}});
  json slots = json::array();
  for (const auto& [k, _] : config_.slots) slots.push_back(k);
  return {200, json{{"problems", out}, {"slots", slots}}};
}

Response TutorService::create_session(const json& body) {
  if (!body.is_object() || !body.contains("problem_id") || !body["problem_id"].is_string())
    return error(400, "problem_id (string) is required");
  if (!body.contains("model_slot") || !body["model_slot"].is_number_integer())
    return error(400, "model_slot (integer 1..4) is required");
  const auto problem_id = body["problem_id"].get<std::string>();
  const int slot = body["model_slot"].get<int>();
  if (!config_.corpus.find_problem(problem_id)) return error(404, "unknown problem '" + problem_id + "'");
  if (slot < kMinSlot || slot > kMaxSlot || !config_.slots.count(slot))
    return error(400, "model slot " + std::to_string(slot) + " is not configured");

  auto entry = std::make_shared<Entry>();
  {
    std::lock_guard lock(sessions_mu_);
    entry->session.id = new_session_id();
    entry->session.problem_id = problem_id;
    entry->session.model_slot = slot;
    entry->session.created_at = now_iso8601();
    entry->events_path = config_.data_dir / "sessions" / (entry->session.id + ".events.jsonl");
    entry->snapshot_path = config_.data_dir / "sessions" / (entry->session.id + ".snapshot.json");
    append_event(*entry, json{{"type", "created"}, {"session", to_json(entry->session)}});
    sessions_.emplace(entry->session.id, entry);
  }
  return {201, to_json(entry->session)};
}

Response TutorService::generate_reply(Entry& entry) {
  auto& s = entry.session;
  const auto& slot = config_.slots.at(s.model_slot);
  const auto* problem = config_.corpus.find_problem(s.problem_id);
  reward::DialogueContext ctx{*problem, {}};
  for (const auto& t : s.turns) ctx.prefix.push_back(t.turn);
  align::BestOfNResult result;
  try {
    result = align::best_of_n(*slot.backend, *slot.model, ctx, slot.best_of_n, config_.few_shots, slot.prompt);
  } catch (const llm::BackendError& e) {
    spdlog::warn("session {}: generation failed: {}", s.id, e.what());
    return {502, json{{"error", "response generation failed; the student turn is kept, POST /retry to try again"},
                      {"pending", true}}};
  }
  SessionTurn reply{{corpus::Speaker::assistant, result.chosen, std::nullopt}, result};
  s.turns.push_back(reply);
  append_event(entry, json{{"type", "turn"}, {"turn", turn_json(reply)}});
  return {200, json{{"assistant_text", result.chosen}, {"turn_idx", s.turns.size() - 1}}};
}

Response TutorService::post_turn(const std::string& id, const json& body) {
  auto entry = find(id);
  if (!entry) return error(404, "unknown session '" + id + "'");
  if (!body.is_object() || !body.contains("text") || !body["text"].is_string() ||
      text::normalize_ws(body["text"].get<std::string>()).empty())
    return error(400, "text (non-empty string) is required");
  if (body.contains("code") && !body["code"].is_null() && !body["code"].is_string())
    return error(400, "code must be a string");

  std::lock_guard lock(entry->mu);
  auto& s = entry->session;
  if (s.status == SessionStatus::closed) return error(409, "session is closed");
  if (s.pending()) return error(409, "waiting for the assistant's reply to the previous turn");

  SessionTurn student{{corpus::Speaker::student, body["text"].get<std::string>(), std::nullopt}, std::nullopt};
  if (body.contains("code") && body["code"].is_string() && !body["code"].get<std::string>().empty())
    student.turn.code = body["code"].get<std::string>();
  s.turns.push_back(student);
  append_event(*entry, json{{"type", "turn"}, {"turn", turn_json(student)}});
  return generate_reply(*entry);
}

Response TutorService::retry(const std::string& id) {
  auto entry = find(id);
  if (!entry) return error(404, "unknown session '" + id + "'");
  std::lock_guard lock(entry->mu);
  if (entry->session.status == SessionStatus::closed) return error(409, "session is closed");
  if (!entry->session.pending()) return error(409, "no student turn is waiting for a reply");
  return generate_reply(*entry);
}

Response TutorService::close(const std::string& id) {
  auto entry = find(id);
  if (!entry) return error(404, "unknown session '" + id + "'");
  std::lock_guard lock(entry->mu);
  if (entry->session.status == SessionStatus::closed) return error(409, "session is already closed");
  entry->session.status = SessionStatus::closed;
  append_event(*entry, json{{"type", "closed"}});
  return {200, to_json(entry->session)};
}

Response TutorService::get_session(const std::string& id) const {
  auto entry = find(id);
  if (!entry) return error(404, "unknown session '" + id + "'");
  std::lock_guard lock(entry->mu);
  return {200, to_json(entry->session)};
}

Response TutorService::post_rating(const std::string& id, const json& body) {
  auto entry = find(id);
  if (!entry) return error(404, "unknown session '" + id + "'");
  if (!body.is_object()) return error(422, "rating must be a JSON object");
  if (!body.contains("rater_id") || !body["rater_id"].is_string() || body["rater_id"].get<std::string>().empty())
    return error(422, "rater_id (non-empty string) is required");
  const auto rater = body["rater_id"].get<std::string>();

  if (body.contains("label")) {
    if (!body["label"].is_string()) return error(422, "label must be a string");
    const auto label = parse_label(body["label"].get<std::string>());
    if (!label) return error(422, "label must be true_positive, false_positive, or false_negative");
    if (!body.contains("turn_idx") || !body["turn_idx"].is_number_integer() || body["turn_idx"].get<long long>() < 0)
      return error(422, "turn_idx (non-negative integer) is required");
    const auto turn = body["turn_idx"].get<std::size_t>();
    {
      std::lock_guard lock(entry->mu);
      const auto& turns = entry->session.turns;
      if (turn >= turns.size() || turns[turn].turn.speaker != corpus::Speaker::assistant)
        return error(422, "turn_idx " + std::to_string(turn) + " is not an assistant turn");
    }
    TurnRating r{id, turn, *label, rater};
    std::lock_guard lock(ratings_mu_);
    if (!rated_turns_.emplace(id, turn, rater).second)
      return error(409, "rater '" + rater + "' already labeled turn " + std::to_string(turn));
    json rec{{"kind", "turn"}, {"session_id", id}, {"turn_idx", turn}, {"label", to_string(*label)},
             {"rater_id", rater}};
    append_line(config_.data_dir / "ratings.jsonl", rec);
    turn_ratings_.push_back(r);
    return {201, rec};
  }

  if (body.contains("scores")) {
    const auto& scores = body["scores"];
    if (!scores.is_object()) return error(422, "scores must be an object");
    ModelRating r{id, rater, {}};
    for (const char* key : kModelRatingKeys) {
      if (!scores.contains(key)) return error(422, std::string("scores.") + key + " is required");
      const auto& v = scores[key];
      if (!v.is_number_integer() || v.get<int>() < 1 || v.get<int>() > 10)
        return error(422, std::string("scores.") + key + " must be an integer in 1..10");
      r.scores[key] = v.get<int>();
    }
    if (scores.size() != std::size(kModelRatingKeys)) return error(422, "scores has unknown keys");
    std::lock_guard lock(ratings_mu_);
    if (!rated_sessions_.emplace(id, rater).second)
      return error(409, "rater '" + rater + "' already rated this session");
    json rec{{"kind", "model"}, {"session_id", id}, {"rater_id", rater}, {"scores", r.scores}};
    append_line(config_.data_dir / "ratings.jsonl", rec);
    model_ratings_.push_back(std::move(r));
    return {201, rec};
  }
  return error(422, "rating needs either label + turn_idx or scores");
}

Response TutorService::export_ratings() const {
  std::map<std::string, int> slot_of;
  {
    std::lock_guard lock(sessions_mu_);
    for (const auto& [id, e] : sessions_) slot_of[id] = e->session.model_slot;
  }
  std::lock_guard lock(ratings_mu_);
  struct Counts {
    int tp = 0, fp = 0, fn = 0;
  };
  std::map<int, Counts> per_slot;
  json turns = json::array();
  for (const auto& r : turn_ratings_) {
    auto& c = per_slot[slot_of.at(r.session_id)];
    if (r.label == Label::true_positive) ++c.tp;
    else if (r.label == Label::false_positive) ++c.fp;
    else ++c.fn;
    turns.push_back({{"session_id", r.session_id}, {"turn_idx", r.turn_idx}, {"label", to_string(r.label)},
                     {"rater_id", r.rater_id}, {"model_slot", slot_of.at(r.session_id)}});
  }
  json models = json::array();
  for (const auto& r : model_ratings_)
    models.push_back({{"session_id", r.session_id}, {"rater_id", r.rater_id}, {"scores", r.scores},
                      {"model_slot", slot_of.at(r.session_id)}});
  json slots = json::object();
  for (const auto& [slot, c] : per_slot) {
    const double p = c.tp + c.fp ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
    const double r = c.tp + c.fn ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
    const double f1 = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    slots[std::to_string(slot)] = {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn},
                                   {"precision", p}, {"recall", r}, {"f1", f1}};
  }
  return {200, json{{"turn_ratings", turns}, {"model_ratings", models}, {"slots", slots}}};
}

// -- HTTP --------------------------------------------------------------------------

HttpServer::HttpServer(TutorService& service, fs::path ui_dir)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto reply = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  auto parse = [](const httplib::Request& req) -> std::optional<json> {
    if (req.body.empty()) return json::object();
    try {
      return json::parse(req.body);
    } catch (const json::parse_error&) {
      return std::nullopt;
    }
  };
  auto bad_json = [reply](httplib::Response& res) { reply(res, error(400, "request body is not valid JSON")); };

  server_->Get("/problems", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, service_.list_problems());
  });
  server_->Post("/sessions", [=, this](const httplib::Request& req, httplib::Response& res) {
    auto body = parse(req);
    if (!body) return bad_json(res);
    reply(res, service_.create_session(*body));
  });
  server_->Get(R"(/sessions/([^/]+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, service_.get_session(req.matches[1]));
  });
  server_->Post(R"(/sessions/([^/]+)/turns)", [=, this](const httplib::Request& req, httplib::Response& res) {
    auto body = parse(req);
    if (!body) return bad_json(res);
    reply(res, service_.post_turn(req.matches[1], *body));
  });
  server_->Post(R"(/sessions/([^/]+)/retry)", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, service_.retry(req.matches[1]));
  });
  server_->Post(R"(/sessions/([^/]+)/close)", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, service_.close(req.matches[1]));
  });
  server_->Post(R"(/sessions/([^/]+)/ratings)", [=, this](const httplib::Request& req, httplib::Response& res) {
    auto body = parse(req);
    if (!body) return bad_json(res);
    reply(res, service_.post_rating(req.matches[1], *body));
  });
  server_->Get("/ratings/export", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, service_.export_ratings());
  });
  if (!ui_dir.empty() && !server_->set_mount_point("/", ui_dir.string()))
    throw Error("UI directory " + ui_dir.string() + " does not exist");
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::listen() { server_->listen_after_bind(); }

void HttpServer::stop() { server_->stop(); }

}  // namespace ace::service
