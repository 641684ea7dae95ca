#pragma once

// Tutoring service: sessions, Socratic turns through Best-of-n, rating
// capture, and persistence.
//
// Data directory:
//   <data>/sessions/<id>.events.jsonl   append-only event log, one JSON per line
//   <data>/sessions/<id>.snapshot.json  {"event_count": n, "session": {...}}
//   <data>/ratings.jsonl                append-only rating log
//
// A snapshot covers the first event_count events; reload applies the rest. A
// truncated final line (crash mid-append) is ignored.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <tuple>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ace/align.hpp"
#include "ace/corpus.hpp"
#include "ace/llmclient.hpp"
#include "ace/reward.hpp"

namespace httplib {
class Server;
}

namespace ace::service {

inline constexpr int kMinSlot = 1;
inline constexpr int kMaxSlot = 4;

struct SlotConfig {
  std::shared_ptr<llm::ChatBackend> backend;
  std::shared_ptr<const reward::RewardModel> model;
  align::BestOfNConfig best_of_n;
  llm::PromptOptions prompt;
};

struct ServiceConfig {
  corpus::Corpus corpus;
  std::map<int, SlotConfig> slots;
  std::filesystem::path data_dir;
  std::uint64_t seed = 0;
  /// Events between snapshots.
  std::size_t snapshot_every = 8;
  std::vector<corpus::DialogueThread> few_shots;
};

/// Config file:
///   {"corpus_dir": path, "data_dir": path, "seed": int, "few_shots": int,
///    "snapshot_every": int,
///    "slots": {"1": {"backend": {...}, "model": path?, "best_of_n": {...},
///                    "include_fix": bool}, ...}}
/// Relative paths resolve against the file's directory. A slot without a
/// model scores with the zero model.
ServiceConfig load_service_config(const std::filesystem::path& file);

enum class SessionStatus { open, closed };
enum class Label { true_positive, false_positive, false_negative };

std::string to_string(Label l);
std::optional<Label> parse_label(std::string_view s);

struct SessionTurn {
  corpus::Turn turn;
  std::optional<align::BestOfNResult> audit;  // assistant turns only
};

struct Session {
  std::string id;
  std::string problem_id;
  int model_slot = 1;
  std::vector<SessionTurn> turns;
  std::string created_at;
  SessionStatus status = SessionStatus::open;

  /// Last turn is a student turn still waiting for its reply.
  bool pending() const;
};

nlohmann::json to_json(const Session& s);
Session session_from_json(const nlohmann::json& j);
/// Alternation from the student, audits on every assistant turn, slot range.
std::vector<std::string> check_invariants(const Session& s);

inline constexpr const char* kModelRatingKeys[] = {"relevancy", "fluency", "informativeness", "task_completion",
                                                   "overall"};

struct TurnRating {
  std::string session_id;
  std::size_t turn_idx = 0;
  Label label = Label::true_positive;
  std::string rater_id;
};

struct ModelRating {
  std::string session_id;
  std::string rater_id;
  std::map<std::string, int> scores;
};

struct Response {
  int status = 200;
  nlohmann::json body;
};

/// Transport-independent request handling; the HTTP layer only routes.
class TutorService {
 public:
  /// Loads every session and rating already in config.data_dir.
  explicit TutorService(ServiceConfig config);
  ~TutorService();

  Response create_session(const nlohmann::json& body);
  Response post_turn(const std::string& id, const nlohmann::json& body);
  Response retry(const std::string& id);
  Response close(const std::string& id);
  Response post_rating(const std::string& id, const nlohmann::json& body);
  Response get_session(const std::string& id) const;
  Response export_ratings() const;
  Response list_problems() const;

  std::size_t session_count() const;

 private:
  struct Entry;
  std::shared_ptr<Entry> find(const std::string& id) const;
  Response generate_reply(Entry& entry);
  void append_event(Entry& entry, const nlohmann::json& event);
  void load_existing();
  std::string new_session_id();

  ServiceConfig config_;
  mutable std::mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::mt19937_64 id_rng_;

  mutable std::mutex ratings_mu_;
  std::vector<TurnRating> turn_ratings_;
  std::vector<ModelRating> model_ratings_;
  std::set<std::tuple<std::string, std::size_t, std::string>> rated_turns_;
  std::set<std::pair<std::string, std::string>> rated_sessions_;
};

/// HTTP front end. Routes:
///   GET  /problems
///   POST /sessions                  {problem_id, model_slot}
///   GET  /sessions/{id}
///   POST /sessions/{id}/turns       {text, code?}
///   POST /sessions/{id}/retry
///   POST /sessions/{id}/close
///   POST /sessions/{id}/ratings     TurnRating or ModelRating
///   GET  /ratings/export
/// Static files from ui_dir, when set, are served at /.
class HttpServer {
 public:
  HttpServer(TutorService& service, std::filesystem::path ui_dir = {});
  ~HttpServer();
  /// Binds and returns the port (port 0 picks a free one).
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();

 private:
  TutorService& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace ace::service
