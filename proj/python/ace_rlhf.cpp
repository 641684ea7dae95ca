// Python bindings: metrics, matching, reward model, calibration, reranking and
// the toy policy trainers. Structured results come back as plain dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ace/align.hpp"
#include "ace/calibration.hpp"
#include "ace/corpus.hpp"
#include "ace/matching.hpp"
#include "ace/metrics.hpp"
#include "ace/presets.hpp"
#include "ace/reward.hpp"

namespace py = pybind11;
using namespace ace;

namespace {

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_py(const py::object& o) {
  if (o.is_none()) return nlohmann::json::object();
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::dict score_dict(const metrics::SimilarityScore& s) {
  py::dict d;
  d["value"] = s.value;
  d["metric"] = metrics::to_string(s.metric);
  d["components"] = s.components;
  d["empty_input"] = s.empty_input;
  return d;
}

py::dict report_dict(const matching::MatchReport& r) {
  py::dict d;
  d["pairs"] = r.pairs;
  d["tp"] = r.tp;
  d["fp"] = r.fp;
  d["fn"] = r.fn;
  d["precision"] = r.precision;
  d["recall"] = r.recall;
  d["f1"] = r.f1;
  return d;
}

// Dialogue context for the assistant turn `turn_idx` of a thread.
reward::DialogueContext thread_context(const corpus::Corpus& c, const std::string& thread_id, std::size_t turn_idx) {
  const auto* th = c.find_thread(thread_id);
  if (!th) throw Error("unknown thread '" + thread_id + "'");
  if (turn_idx == 0 || turn_idx > th->turns.size()) throw Error("turn_idx out of range");
  const auto* p = c.find_problem(th->problem_id);
  return {*p, {th->turns.begin(), th->turns.begin() + static_cast<std::ptrdiff_t>(turn_idx)}};
}

metrics::Metric metric_from(const std::string& name) {
  const auto m = metrics::parse_metric(name);
  if (!m) throw Error("unknown metric '" + name + "'");
  return *m;
}

}  // namespace

PYBIND11_MODULE(ace_rlhf, m) {
  m.doc() = "Socratic feedback engine: metrics, reward model, calibration and alignment";
  m.attr("__version__") = "0.1.0";

  // Most-derived registered last; translators run in reverse order.
  auto& ace_error = py::register_exception<Error>(m, "AceError");
  py::register_exception<ValidationError>(m, "ValidationError", ace_error.ptr());

  // -- metrics
  m.def("bleu4", [](const std::string& c, const std::string& r) { return score_dict(metrics::bleu4(c, r)); },
        py::arg("candidate"), py::arg("reference"));
  m.def("rouge_l", [](const std::string& c, const std::string& r) { return score_dict(metrics::rougeL(c, r)); },
        py::arg("candidate"), py::arg("reference"));
  m.def("codebleu", [](const std::string& c, const std::string& r) { return score_dict(metrics::codebleu(c, r)); },
        py::arg("candidate"), py::arg("reference"));
  m.def(
      "similarity",
      [](const std::string& metric, const std::string& c, const std::string& r) {
        return score_dict(metrics::similarity(metric_from(metric), c, r, nullptr));
      },
      py::arg("metric"), py::arg("candidate"), py::arg("reference"));

  // -- matching
  m.def(
      "max_weight_match",
      [](std::vector<std::vector<double>> w) {
        try {
          return report_dict(matching::max_weight_match(matching::WeightedBipartiteGraph(std::move(w))));
        } catch (const std::invalid_argument& e) {
          throw py::value_error(e.what());
        }
      },
      py::arg("weights"));

  // -- corpus
  py::class_<corpus::Corpus>(m, "Corpus")
      .def(py::init([](const std::filesystem::path& root) { return corpus::load_corpus(root); }), py::arg("root"))
      .def_property_readonly("problem_ids",
                             [](const corpus::Corpus& c) {
                               std::vector<std::string> ids;
                               for (const auto& p : c.problems) ids.push_back(p.id);
                               return ids;
                             })
      .def_property_readonly("thread_ids", [](const corpus::Corpus& c) {
        std::vector<std::string> ids;
        for (const auto& t : c.threads) ids.push_back(t.id);
        return ids;
      });

  // -- reward
  py::class_<reward::RewardModel>(m, "RewardModel")
      .def(py::init<>())
      .def_static("load", &reward::RewardModel::load, py::arg("path"))
      .def("save", &reward::RewardModel::save, py::arg("path"))
      .def(
          "score",
          [](const reward::RewardModel& model, const corpus::Corpus& c, const std::string& thread_id,
             std::size_t turn_idx, const std::string& response) {
            return model.score(thread_context(c, thread_id, turn_idx), response);
          },
          py::arg("corpus"), py::arg("thread_id"), py::arg("turn_idx"), py::arg("response"))
      .def_property_readonly("training_log", [](const reward::RewardModel& model) {
        return to_py(model.to_json().at("training_log"));
      });

  m.def(
      "train_reward",
      [](const corpus::Corpus& c, const std::filesystem::path& preferences, const py::object& config) {
        const auto pairs = corpus::load_preferences(preferences);
        const auto cfg = reward::train_config_from_json(from_py(config));
        py::gil_scoped_release release;
        return reward::train(c, pairs, cfg);
      },
      py::arg("corpus"), py::arg("preferences_dir"), py::arg("config") = py::none());

  m.def("ranking_loss", &reward::ranking_loss, py::arg("delta"));

  // -- calibration
  m.def(
      "ece",
      [](const std::vector<std::pair<double, bool>>& samples, int bins) {
        std::vector<calibration::CalibrationSample> s;
        for (const auto& [conf, ok] : samples) s.push_back({conf, ok});
        return to_py(calibration::to_json(calibration::report_from_samples(s, bins)));
      },
      py::arg("samples"), py::arg("bins") = calibration::kDefaultBins);
  m.def(
      "calibrate",
      [](const reward::RewardModel& model, const corpus::Corpus& c, const std::filesystem::path& preferences,
         int bins) {
        const auto pairs = corpus::load_preferences(preferences);
        return to_py(calibration::to_json(calibration::calibrate(model, c, pairs, bins)));
      },
      py::arg("model"), py::arg("corpus"), py::arg("preferences_dir"), py::arg("bins") = calibration::kDefaultBins);

  // -- alignment
  m.def("argmax_first", [](const std::vector<double>& s) { return align::argmax_first(s); }, py::arg("scores"));
  m.def(
      "rerank",
      [](const reward::RewardModel& model, const corpus::Corpus& c, const std::string& thread_id,
         std::size_t turn_idx, const std::vector<std::string>& candidates) {
        const auto ctx = thread_context(c, thread_id, turn_idx);
        std::vector<double> scores;
        for (const auto& t : candidates) scores.push_back(model.score(ctx, t));
        py::dict d;
        d["scores"] = scores;
        d["chosen_index"] = align::argmax_first(scores);
        return d;
      },
      py::arg("model"), py::arg("corpus"), py::arg("thread_id"), py::arg("turn_idx"), py::arg("candidates"));

  m.def(
      "train_policy",
      [](const std::vector<std::vector<double>>& rewards, const std::string& method, const py::object& config) {
        std::vector<std::string> ids;
        std::vector<std::vector<std::string>> cands;
        for (std::size_t c = 0; c < rewards.size(); ++c) {
          ids.push_back("c" + std::to_string(c));
          cands.emplace_back();
          for (std::size_t i = 0; i < rewards[c].size(); ++i) cands.back().push_back(std::to_string(i));
        }
        align::ToyPolicy policy(ids, cands);
        const auto cfg = align::ppo_config_from_json(from_py(config));
        nlohmann::json log = nlohmann::json::array();
        if (method == "ppo") {
          for (const auto& e : align::ppo_train(policy, rewards, cfg)) log.push_back(e);
        } else if (method == "rjs") {
          for (const auto& e : align::rjs_train(policy, rewards, cfg.learning_rate, cfg.epochs))
            log.push_back({{"epoch", e.epoch}, {"mean_loss", e.mean_loss}});
        } else {
          throw py::value_error("method must be 'ppo' or 'rjs'");
        }
        std::vector<std::vector<double>> probs;
        for (std::size_t c = 0; c < policy.context_count(); ++c) probs.push_back(policy.probabilities(c));
        py::dict d;
        d["log"] = to_py(log);
        d["probabilities"] = probs;
        d["mean_kl"] = policy.mean_kl();
        return d;
      },
      py::arg("rewards"), py::arg("method") = "ppo", py::arg("config") = py::none());

  m.def(
      "preset",
      [](const std::string& name) { return to_py(config::snapshot(config::preset(name))); }, py::arg("name"));
}
