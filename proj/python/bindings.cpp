#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "omninav/embedding.hpp"
#include "omninav/error.hpp"
#include "omninav/harness.hpp"

namespace py = pybind11;
using namespace omninav;

namespace {

py::dict trial_dict(const TrialResult& t, const Scenario& s) {
  py::dict d;
  d["scenario"] = t.scenario;
  d["trial"] = t.trial;
  d["strategy"] = to_string(t.strategy);
  d["origin"] = py::make_tuple(t.origin.x, t.origin.y, t.origin.yaw);
  d["final_pose"] = py::make_tuple(t.final_pose.x, t.final_pose.y, t.final_pose.yaw);
  d["final_error"] = t.final_error;
  d["termination"] = to_string(t.termination);
  d["duration"] = t.duration;
  d["ticks"] = t.ticks.size();
  d["csv"] = episode_csv(t.ticks, s.sim.reflex.n_split);
  py::list visits;
  for (const auto& v : visit_waypoints(s, t)) {
    visits.append(py::dict(py::arg("label") = v.label, py::arg("t") = v.t, py::arg("closest") = v.closest));
  }
  d["waypoints"] = visits;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Reflex navigation core: scoring, selection and the desk-scale simulator";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<ScenarioError>(m, "ScenarioError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  m.def("transform_scores", [](const std::vector<double>& raw) { return transform_scores(raw); }, py::arg("raw"));
  m.def("fuse", [](const std::vector<double>& a, const std::vector<double>& b) { return fuse(a, b).e; });
  m.def("top_indices", [](const std::vector<double>& e, int n) { return top_indices(e, n); }, py::arg("e"),
        py::arg("n_extract"));
  m.def(
      "select_direction",
      [](const std::vector<double>& e, int n_extract, double previous_theta, double overlap) {
        const SliceSet slices = make_slices(2000, static_cast<int>(e.size()), overlap);
        const DirectionCommand d = select_direction(e, slices, n_extract, previous_theta);
        std::vector<int> order;
        for (const auto& c : d.contributors) order.push_back(c.slice);
        return py::make_tuple(d.theta, order);
      },
      py::arg("e"), py::arg("n_extract") = 2, py::arg("previous_theta") = 0.0, py::arg("overlap") = kDefaultOverlap,
      "Heading theta and the contributing slices, best first.");
  m.def(
      "diff_drive",
      [](double theta, double k, double c_thre) {
        DirectionCommand d;
        d.theta = theta;
        const auto v = diff_drive_command(d, k, c_thre);
        return py::make_tuple(v.linear, v.rotate);
      },
      py::arg("theta"), py::arg("k") = 0.5, py::arg("c_thre") = 0.6);
  m.def(
      "slice_azimuths",
      [](int n_split, double overlap) {
        std::vector<double> out;
        for (const auto& s : make_slices(2000, n_split, overlap).slices) out.push_back(s.center_azimuth);
        return out;
      },
      py::arg("n_split"), py::arg("overlap") = kDefaultOverlap);
  m.def(
      "sentence",
      [](const std::vector<std::pair<std::string, double>>& labelled_areas) {
        std::vector<Detection> dets;
        for (const auto& [label, area] : labelled_areas) dets.push_back({label, {0, 0, area, 1}, 1.0});
        return detections_to_sentence(dets);
      },
      "Comma-joined labels ordered by descending area.");
  m.def("similarity", [](const std::string& a, const std::string& b) { return cosine(embed_text(a), embed_text(b)); });

  m.def(
      "run_scenario",
      [](const std::filesystem::path& path, std::optional<int> trials, std::optional<std::string> strategy) {
        Scenario s = load_scenario(path);
        if (trials) s.trials = *trials;
        if (strategy) s.sim.reflex.strategy = parse_strategy(*strategy);
        const auto res = run_comparison({s});
        py::list out;
        for (const auto& t : res.trials) out.append(trial_dict(t, s));
        return out;
      },
      py::arg("path"), py::arg("trials") = py::none(), py::arg("strategy") = py::none(),
      "Runs every trial of a scenario file; one dict per trial.");
  m.def(
      "run_suite",
      [](const std::filesystem::path& path, std::optional<int> trials) {
        auto suite = load_suite(path);
        if (trials)
          for (auto& s : suite) s.trials = *trials;
        return summary_csv(run_comparison(suite).summary);
      },
      py::arg("path"), py::arg("trials") = py::none(), "Runs a comparison suite; returns the summary CSV text.");
}
