#include "ace/cli.hpp"

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <pthread.h>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ace/align.hpp"
#include "ace/calibration.hpp"
#include "ace/corpus.hpp"
#include "ace/evalharness.hpp"
#include "ace/llmclient.hpp"
#include "ace/metrics.hpp"
#include "ace/presets.hpp"
#include "ace/reward.hpp"
#include "ace/service.hpp"

namespace ace::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Overrides {
  std::string preset = "toy";
  std::optional<std::uint64_t> seed;
  std::optional<int> n;
  std::optional<double> temperature;
  std::optional<int> max_tokens;
  std::optional<double> prob_cutoff;
  std::optional<double> lr;
  std::optional<int> batch_size;
  std::optional<int> epochs;
  std::optional<double> beta;
  bool diversify = false;
};

config::GlobalConfig effective(const Overrides& o) {
  auto c = config::preset(o.preset);
  if (o.seed) {
    c.seed = *o.seed;
    c.reward_train.seed = *o.seed;
    c.ppo.seed = *o.seed;
  }
  if (o.n) c.best_of_n.n = *o.n;
  if (o.temperature) c.best_of_n.temperature = *o.temperature;
  if (o.max_tokens) c.best_of_n.max_tokens = *o.max_tokens;
  if (o.prob_cutoff) c.best_of_n.prob_cutoff = *o.prob_cutoff;
  if (o.diversify) c.best_of_n.diversify = true;
  if (o.lr) c.reward_train.learning_rate = c.ppo.learning_rate = *o.lr;
  if (o.batch_size) c.reward_train.batch_size = c.ppo.batch_size = *o.batch_size;
  if (o.epochs) c.reward_train.epochs = c.ppo.epochs = *o.epochs;
  if (o.beta) c.ppo.beta = *o.beta;
  c.best_of_n.validate();
  c.reward_train.validate();
  c.ppo.validate();
  return c;
}

void write_json_file(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << corpus::canonical_dump(j);
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_relative() ? base / path : path;
}

std::unique_ptr<llm::ChatBackend> backend_from(const std::string& backend_file, const std::string& mock_pool,
                                               const std::string& mock_mode, std::uint64_t seed) {
  if (!backend_file.empty()) {
    const fs::path p(backend_file);
    return llm::make_backend(corpus::read_json_file(p), p.parent_path());
  }
  if (!mock_pool.empty()) {
    if (mock_mode != "hashed" && mock_mode != "scripted") throw Error("--mock-mode must be hashed or scripted");
    return llm::MockBackend::from_file(mock_pool, seed,
                                       mock_mode == "scripted" ? llm::MockMode::scripted : llm::MockMode::hashed);
  }
  return nullptr;
}

json issues_json(const std::vector<Issue>& issues) {
  json out = json::array();
  for (const auto& i : issues)
    out.push_back({{"kind", i.kind == Issue::Kind::parse ? "parse" : "integrity"},
                   {"file", i.file},
                   {"id", i.id},
                   {"message", i.message},
                   {"line", i.line}});
  return out;
}

std::vector<corpus::PreferencePair> load_pairs(const fs::path& dir) {
  auto pairs = corpus::load_preferences(dir);
  if (pairs.empty()) throw Error("no preference pairs found in " + dir.string());
  return pairs;
}

fs::path default_corpus_for(const fs::path& pairs_dir) {
  auto abs = fs::absolute(pairs_dir).lexically_normal();
  if (abs.filename().empty()) abs = abs.parent_path();
  return abs.parent_path();
}

std::sig_atomic_t g_dummy = 0;

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  // stdout carries --json output; logs go to stderr.
  static const bool logger_ready = [] {
    spdlog::set_default_logger(spdlog::stderr_color_mt("ace"));
    return true;
  }();
  (void)logger_ready;
  CLI::App app{"Socratic debugging feedback engine", "ace"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  Overrides o;
  bool as_json = false;
  bool show_config = false;
  app.add_flag("--json", as_json, "Print machine-readable JSON to stdout");
  app.add_option("--preset", o.preset, "Hyperparameter profile")->check(CLI::IsMember({"paper", "toy"}));
  app.add_flag("--show-config", show_config, "Print the effective configuration and exit");
  app.add_option("--seed", o.seed, "Random seed");
  app.add_option("--n", o.n, "Best-of-n candidate count");
  app.add_option("--temperature", o.temperature, "Sampling temperature");
  app.add_option("--max-tokens", o.max_tokens, "Maximum completion tokens");
  app.add_option("--prob-cutoff", o.prob_cutoff, "Probability cutoff forwarded as top_p");
  app.add_option("--lr", o.lr, "Learning rate");
  app.add_option("--batch-size", o.batch_size, "Batch size");
  app.add_option("--epochs", o.epochs, "Training epochs");
  app.add_option("--beta", o.beta, "KL coefficient");
  app.add_flag("--diversify", o.diversify, "Temperature ladder across Best-of-n candidates");

  // validate
  std::string validate_dir;
  auto* validate = app.add_subcommand("validate", "Validate a corpus directory");
  validate->add_option("dir", validate_dir, "Corpus root")->required();

  // augment
  std::string augment_dir, augment_out, augment_backend;
  std::size_t per_turn_pairs = 4;
  auto* augment = app.add_subcommand("augment", "Build preference pairs from a corpus");
  augment->add_option("dir", augment_dir, "Corpus root")->required();
  augment->add_option("--per-turn-pairs", per_turn_pairs, "Pairs per assistant turn")->check(CLI::PositiveNumber);
  augment->add_option("--backend", augment_backend, "Backend config for LLM-generated invalid responses");
  augment->add_option("--out", augment_out, "Preferences directory (default <dir>/preferences)");

  // train-reward
  std::string tr_pairs, tr_corpus, tr_config, tr_out, tr_store, tr_name;
  auto* train = app.add_subcommand("train-reward", "Train a reward model on preference pairs");
  train->add_option("--pairs", tr_pairs, "Preferences directory")->required();
  train->add_option("--corpus", tr_corpus, "Corpus root (default: parent of --pairs)");
  train->add_option("--config", tr_config, "Training config JSON");
  train->add_option("--out", tr_out, "Model output file");
  train->add_option("--store", tr_store, "Model store directory");
  train->add_option("--name", tr_name, "Model store name")->check(CLI::IsMember({"ppo", "best_of_n"}));

  // calibrate
  std::string cal_model, cal_pairs, cal_corpus, cal_out;
  int bins = calibration::kDefaultBins;
  auto* calibrate = app.add_subcommand("calibrate", "Reliability bins and ECE of a reward model");
  calibrate->add_option("--model", cal_model, "Reward model file")->required();
  calibrate->add_option("--pairs", cal_pairs, "Held-out preferences directory")->required();
  calibrate->add_option("--corpus", cal_corpus, "Corpus root (default: parent of --pairs)");
  calibrate->add_option("--bins", bins, "Number of bins")->check(CLI::PositiveNumber);
  calibrate->add_option("--out", cal_out, "Report output file");

  // eval
  std::string ev_corpus, ev_generated, ev_backend, ev_model, ev_metrics = "bleu4,rougeL,codebleu,embed_f1", ev_out;
  std::string ev_mock_pool, ev_mock_mode = "hashed", ev_embed_url;
  std::size_t ev_embed_dim = 256;
  auto* evalc = app.add_subcommand("eval", "Automated evaluation against reference responses");
  evalc->add_option("--corpus", ev_corpus, "Corpus root")->required();
  auto* gen_opt = evalc->add_option("--generated", ev_generated, "Pre-generated utterance file");
  auto* be_opt = evalc->add_option("--backend", ev_backend, "Backend config file");
  gen_opt->excludes(be_opt);
  evalc->add_option("--mock-pool", ev_mock_pool, "Mock backend pool file")->excludes(gen_opt);
  evalc->add_option("--mock-mode", ev_mock_mode, "hashed or scripted");
  evalc->add_option("--model", ev_model, "Reward model for Best-of-n generation");
  evalc->add_option("--metrics", ev_metrics, "Comma-separated metric list");
  evalc->add_option("--embedding-url", ev_embed_url, "Remote embedding endpoint (base URL + path)");
  evalc->add_option("--embedding-dim", ev_embed_dim, "Embedding dimension");
  evalc->add_option("--out", ev_out, "Run output file");

  // rank
  std::string rk_context, rk_model, rk_backend, rk_mock_pool, rk_mock_mode = "hashed", rk_corpus;
  bool include_fix = false;
  auto* rank = app.add_subcommand("rank", "Best-of-n reranking for one dialogue context");
  rank->add_option("--context", rk_context, "Context file")->required();
  rank->add_option("--model", rk_model, "Reward model file");
  rank->add_option("--backend", rk_backend, "Backend config file");
  rank->add_option("--mock-pool", rk_mock_pool, "Mock backend pool file");
  rank->add_option("--mock-mode", rk_mock_mode, "hashed or scripted");
  rank->add_option("--corpus", rk_corpus, "Corpus root for few-shot examples and problem lookup");
  rank->add_option("-n", o.n, "Candidate count");
  rank->add_flag("--include-fix", include_fix, "Give the model the literal bug fix");

  // simulate-ppo
  std::string sp_config, sp_out, sp_method = "ppo";
  auto* sim = app.add_subcommand("simulate-ppo", "Policy optimization on an enumerated toy policy");
  sim->add_option("--config", sp_config, "Toy policy config")->required();
  sim->add_option("--method", sp_method, "ppo or rjs")->check(CLI::IsMember({"ppo", "rjs"}));
  sim->add_option("--out", sp_out, "Training log (JSON lines)");

  // serve
  std::string sv_config, sv_host = "127.0.0.1", sv_port_file, sv_data_dir, sv_ui_dir;
  int sv_port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the tutoring HTTP service");
  serve->add_option("--config", sv_config, "Service config")->required();
  serve->add_option("--host", sv_host, "Bind address");
  serve->add_option("--port", sv_port, "Port (0 picks a free one)");
  serve->add_option("--port-file", sv_port_file, "Write the bound port to this file");
  serve->add_option("--data-dir", sv_data_dir, "Data directory (overrides the config)");
  serve->add_option("--ui-dir", sv_ui_dir, "Static UI assets to serve at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    auto cfg = effective(o);
    if (show_config) {
      out << snapshot(cfg).dump(2) << "\n";
      return kExitOk;
    }

    if (*validate) {
      try {
        const auto c = corpus::load_corpus(validate_dir);
        if (as_json)
          out << json{{"ok", true}, {"problems", c.problems.size()}, {"threads", c.threads.size()},
                      {"issues", json::array()}}.dump(2)
              << "\n";
        else
          out << "ok: " << c.problems.size() << " problems, " << c.threads.size() << " threads\n";
        return kExitOk;
      } catch (const ValidationError& e) {
        if (as_json)
          out << json{{"ok", false}, {"problems", 0}, {"threads", 0}, {"issues", issues_json(e.issues())}}.dump(2)
              << "\n";
        for (const auto& i : e.issues()) err << to_string(i) << "\n";
        return kExitDomain;
      }
    }

    if (*augment) {
      const auto c = corpus::load_corpus(augment_dir);
      std::vector<corpus::PreferencePair> pairs;
      if (!augment_backend.empty()) {
        auto backend = backend_from(augment_backend, "", "", cfg.seed);
        llm::GenerationParams params = cfg.best_of_n.params_for(0);
        llm::LlmInvalidGenerator gen(*backend, params);
        pairs = corpus::build_preferences(c, gen, per_turn_pairs, cfg.seed);
      } else {
        corpus::RuleBasedGenerator gen;
        pairs = corpus::build_preferences(c, gen, per_turn_pairs, cfg.seed);
      }
      const fs::path dir = augment_out.empty() ? fs::path(augment_dir) / "preferences" : fs::path(augment_out);
      corpus::save_preferences(pairs, dir);
      std::map<std::string, int> by;
      for (const auto& p : pairs) ++by[corpus::to_string(p.criterion)];
      if (as_json)
        out << json{{"pairs", pairs.size()}, {"out", dir.string()}, {"by_criterion", by}}.dump(2) << "\n";
      else
        out << "wrote " << pairs.size() << " pairs to " << dir.string() << "\n";
      return kExitOk;
    }

    if (*train) {
      if (tr_out.empty() && (tr_store.empty() || tr_name.empty()))
        throw CLI::ValidationError("--out or --store with --name is required");
      auto tc = cfg.reward_train;
      if (!tr_config.empty()) {
        tc = reward::train_config_from_json(corpus::read_json_file(tr_config), tc);
        // Command-line flags win over the file.
        if (o.lr) tc.learning_rate = *o.lr;
        if (o.batch_size) tc.batch_size = *o.batch_size;
        if (o.epochs) tc.epochs = *o.epochs;
        if (o.seed) tc.seed = *o.seed;
      }
      const auto c = corpus::load_corpus(tr_corpus.empty() ? default_corpus_for(tr_pairs) : fs::path(tr_corpus));
      const auto pairs = load_pairs(tr_pairs);
      const auto model = reward::train(c, pairs, tc);
      if (!tr_out.empty()) model.save(tr_out);
      if (!tr_store.empty()) reward::ModelStore(tr_store).put(tr_name, model);
      json log = json::array();
      for (const auto& e : model.training_log)
        log.push_back({{"epoch", e.epoch}, {"mean_loss", e.mean_loss}, {"pairwise_accuracy", e.pairwise_accuracy}});
      if (as_json)
        out << json{{"out", tr_out}, {"pairs", pairs.size()}, {"config", tc}, {"training_log", log}}.dump(2) << "\n";
      else
        for (const auto& e : model.training_log)
          out << "epoch " << e.epoch << " loss " << e.mean_loss << " accuracy " << e.pairwise_accuracy << "\n";
      return kExitOk;
    }

    if (*calibrate) {
      const auto model = reward::RewardModel::load(cal_model);
      const auto c = corpus::load_corpus(cal_corpus.empty() ? default_corpus_for(cal_pairs) : fs::path(cal_corpus));
      const auto pairs = load_pairs(cal_pairs);
      const auto report = calibration::calibrate(model, c, pairs, bins);
      auto j = calibration::to_json(report);
      // Held-out pairwise accuracy, printed next to ece; no relation between them is asserted.
      double correct = 0.0;
      for (const auto& b : report.bins) correct += b.acc * static_cast<double>(b.count);
      const double accuracy = correct / static_cast<double>(report.n);
      j["pairwise_accuracy"] = accuracy;
      if (!cal_out.empty()) write_json_file(cal_out, j);
      if (as_json) out << j.dump(2) << "\n";
      else
        out << "ece " << report.ece << " accuracy " << accuracy << " over " << report.n << " pairs, " << bins
            << " bins\n";
      return kExitOk;
    }

    if (*evalc) {
      const auto c = corpus::load_corpus(ev_corpus);
      std::vector<metrics::Metric> metric_list;
      try {
        metric_list = metrics::parse_metric_list(ev_metrics);
      } catch (const Error& e) {
        throw CLI::ValidationError("--metrics", e.what());
      }
      std::unique_ptr<metrics::EmbeddingProvider> provider;
      if (!ev_embed_url.empty()) {
        const auto scheme = ev_embed_url.find("://");
        const auto slash = ev_embed_url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
        if (slash == std::string::npos) throw Error("--embedding-url needs a path");
        provider = std::make_unique<metrics::RemoteEmbeddingProvider>(ev_embed_url.substr(0, slash),
                                                                      ev_embed_url.substr(slash), ev_embed_dim);
      } else {
        provider = std::make_unique<metrics::HashedTrigramProvider>(ev_embed_dim, cfg.seed);
      }
      std::unique_ptr<eval::UtteranceSource> source;
      std::unique_ptr<llm::ChatBackend> backend;
      std::optional<reward::RewardModel> model;
      if (!ev_generated.empty()) {
        source = eval::PregeneratedSource::from_file(ev_generated);
      } else {
        backend = backend_from(ev_backend, ev_mock_pool, ev_mock_mode, cfg.seed);
        if (!backend) throw CLI::ValidationError("one of --generated, --backend, --mock-pool is required");
        if (!ev_model.empty()) model = reward::RewardModel::load(ev_model);
        source = std::make_unique<eval::BackendSource>(*backend, model ? &*model : nullptr, cfg.best_of_n);
      }
      eval::EvalOptions opts;
      opts.corpus_ref = ev_corpus;
      const auto run = eval::evaluate(c, *source, metric_list, provider.get(), opts);
      const auto j = eval::to_json(run);
      if (!ev_out.empty()) write_json_file(ev_out, j);
      if (as_json) {
        out << j.dump(2) << "\n";
      } else {
        for (const auto& [m, a] : run.aggregate)
          out << metrics::to_string(m) << ": P " << a.precision << " R " << a.recall << " F1 " << a.f1 << "\n";
        if (run.partial) out << "partial run: some turns failed\n";
      }
      return kExitOk;
    }

    if (*rank) {
      const fs::path ctx_path(rk_context);
      const auto cj = corpus::read_json_file(ctx_path);
      std::optional<corpus::Corpus> c;
      if (!rk_corpus.empty()) c = corpus::load_corpus(rk_corpus);
      else if (cj.contains("corpus_dir")) c = corpus::load_corpus(resolve(ctx_path.parent_path(), cj.at("corpus_dir")));
      reward::DialogueContext ctx;
      std::vector<Issue> issues;
      if (cj.contains("problem")) {
        ctx.problem = corpus::problem_from_json(cj.at("problem"), issues, ctx_path.string());
      } else if (cj.contains("problem_id")) {
        if (!c) throw Error("context names a problem_id but no corpus was given");
        const auto* p = c->find_problem(cj.at("problem_id").get<std::string>());
        if (!p) throw Error("unknown problem '" + cj.at("problem_id").get<std::string>() + "'");
        ctx.problem = *p;
      } else {
        throw Error(ctx_path.string() + ": context needs 'problem' or 'problem_id'");
      }
      if (cj.contains("prefix"))
        for (const auto& t : cj.at("prefix")) ctx.prefix.push_back(corpus::turn_from_json(t, issues, ctx_path.string()));
      if (!issues.empty()) throw ValidationError(issues);
      if (ctx.prefix.empty() || ctx.prefix.back().speaker != corpus::Speaker::student)
        throw Error("context prefix must end with a student turn");

      auto backend = backend_from(rk_backend, rk_mock_pool, rk_mock_mode, cfg.seed);
      if (!backend) throw CLI::ValidationError("one of --backend, --mock-pool is required");
      const auto model = rk_model.empty() ? reward::RewardModel{} : reward::RewardModel::load(rk_model);
      llm::PromptOptions popts;
      popts.include_fix = include_fix;
      std::vector<corpus::DialogueThread> few;
      if (c) few = c->threads;
      const auto result = align::best_of_n(*backend, model, ctx, cfg.best_of_n, few, popts);
      json j = result;
      j["n"] = cfg.best_of_n.n;
      j["config"] = cfg.best_of_n;
      if (as_json) out << j.dump(2) << "\n";
      else {
        for (std::size_t i = 0; i < result.candidates.size(); ++i)
          out << (i == result.chosen_index ? "* " : "  ") << "[" << i << "] " << result.candidates[i].score << "  "
              << result.candidates[i].text << "\n";
      }
      return kExitOk;
    }

    if (*sim) {
      const fs::path cp(sp_config);
      const auto sj = corpus::read_json_file(cp);
      std::vector<std::string> ids;
      std::vector<std::vector<std::string>> cands;
      align::RewardTable rewards;
      try {
        for (const auto& e : sj.at("contexts")) {
          ids.push_back(e.at("id").get<std::string>());
          cands.push_back(e.at("candidates").get<std::vector<std::string>>());
          rewards.push_back(e.at("rewards").get<std::vector<double>>());
        }
      } catch (const json::exception& e) {
        throw Error(cp.string() + ": " + e.what());
      }
      align::ToyPolicy policy(ids, cands);
      auto pc = cfg.ppo;
      if (sj.contains("ppo")) {
        pc = align::ppo_config_from_json(sj.at("ppo"), pc);
        if (o.lr) pc.learning_rate = *o.lr;
        if (o.batch_size) pc.batch_size = *o.batch_size;
        if (o.epochs) pc.epochs = *o.epochs;
        if (o.beta) pc.beta = *o.beta;
        if (o.seed) pc.seed = *o.seed;
      }
      json log = json::array();
      if (sp_method == "ppo") {
        for (const auto& e : align::ppo_train(policy, rewards, pc)) log.push_back(e);
      } else {
        for (const auto& e : align::rjs_train(policy, rewards, pc.learning_rate, pc.epochs))
          log.push_back({{"epoch", e.epoch}, {"mean_loss", e.mean_loss}});
      }
      if (!sp_out.empty()) {
        std::ofstream f(sp_out, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot write " + sp_out);
        for (const auto& e : log) f << e.dump() << "\n";
      }
      json final_policy = json::array();
      for (std::size_t c = 0; c < policy.context_count(); ++c)
        final_policy.push_back({{"id", policy.context_id(c)}, {"probabilities", policy.probabilities(c)},
                                {"kl", policy.kl(c)}});
      if (as_json)
        out << json{{"method", sp_method}, {"config", pc}, {"log", log}, {"final", final_policy}}.dump(2) << "\n";
      else
        for (const auto& e : log) out << e.dump() << "\n";
      return kExitOk;
    }

    if (*serve) {
      auto sc = service::load_service_config(sv_config);
      if (!sv_data_dir.empty()) sc.data_dir = sv_data_dir;
      if (o.seed) sc.seed = *o.seed;
      // Signals are handled by a dedicated thread so the server can stop cleanly.
      sigset_t set;
      sigemptyset(&set);
      sigaddset(&set, SIGINT);
      sigaddset(&set, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &set, nullptr);

      service::TutorService svc(std::move(sc));
      service::HttpServer http(svc, sv_ui_dir);
      const int port = http.bind(sv_host, sv_port);
      if (!sv_port_file.empty()) {
        const auto tmp = sv_port_file + ".tmp";
        std::ofstream(tmp) << port << "\n";
        fs::rename(tmp, sv_port_file);
      }
      if (as_json) out << json{{"host", sv_host}, {"port", port}}.dump() << std::endl;
      else out << "listening on " << sv_host << ":" << port << std::endl;
      std::thread waiter([&] {
        int sig = 0;
        sigwait(&set, &sig);
        g_dummy = sig;
        http.stop();
      });
      http.listen();
      pthread_kill(waiter.native_handle(), SIGTERM);
      waiter.join();
      return kExitOk;
    }

    err << app.help();
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    for (const auto& i : e.issues()) err << to_string(i) << "\n";
    return kExitDomain;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  }
}

}  // namespace ace::cli
