#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ssa/amr.hpp"
#include "ssa/augment.hpp"
#include "ssa/error.hpp"
#include "ssa/metrics.hpp"
#include "ssa/pipeline.hpp"
#include "ssa/smatch.hpp"

namespace py = pybind11;
using namespace ssa;

namespace {

py::dict graph_dict(const AmrGraph& g) {
  py::dict nodes;
  for (const auto& [v, n] : g.nodes()) nodes[py::str(v)] = n.concept_label;
  py::list edges, attrs;
  for (const auto& e : g.edges()) edges.append(py::make_tuple(e.source, e.role, e.target));
  for (const auto& a : g.attributes()) attrs.append(py::make_tuple(a.variable, a.role, a.value));
  py::dict out;
  out["root"] = g.root();
  out["nodes"] = nodes;
  out["edges"] = edges;
  out["attributes"] = attrs;
  return out;
}

py::dict smatch_dict(const SmatchResult& r) {
  py::dict out;
  out["precision"] = r.precision;
  out["recall"] = r.recall;
  out["f1"] = r.f1;
  out["matched"] = r.matched_triples;
  out["mapping"] = r.mapping;
  return out;
}

std::vector<Box> to_boxes(const std::vector<std::array<double, 4>>& raw) {
  std::vector<Box> boxes;
  for (const auto& b : raw) boxes.push_back({b[0], b[1], b[2], b[3]});
  return boxes;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Structured semantic augmentation core";

  // Later registrations are tried first, so ConfigError wins over its base.
  const auto base = py::register_exception<Error>(m, "SsaError");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  m.def("parse_penman", [](const std::string& text) { return graph_dict(parse_penman(text)); },
        "Graph as {root, nodes, edges, attributes}.");
  m.def("normalize_penman", [](const std::string& text) { return serialize_penman(parse_penman(text)); });
  m.def("smatch", [](const std::string& a, const std::string& b, int restarts, uint64_t seed) {
          return smatch_dict(smatch_score(parse_penman(a), parse_penman(b), restarts, seed));
        },
        py::arg("a"), py::arg("b"), py::arg("restarts") = kDefaultSmatchRestarts, py::arg("seed") = 0);
  m.def("smatch_brute_force", [](const std::string& a, const std::string& b) {
    return smatch_dict(smatch_brute_force(parse_penman(a), parse_penman(b)));
  });

  m.def("coverage", [](const std::vector<std::array<double, 4>>& boxes, double w, double h) {
    return compute_coverage(to_boxes(boxes), w, h);
  });
  m.def("length_level", [](int words) { return std::string(1, to_char(length_level(words))); });
  m.def("word_count", [](const std::string& s) { return word_count(s); });
  m.def("stub_generate", [](const std::string& penman) { return StubGenerator().generate(parse_penman(penman)); });

  m.def("hungarian", [](const std::vector<std::vector<double>>& s) {
    const Assignment a = hungarian_match(s);
    return py::make_tuple(a.pairs, a.total);
  });
  m.def("content_iou", [](const std::set<std::string>& generated, const std::set<std::string>& control,
                          const std::map<std::string, std::vector<double>>& vectors) {
    EmbeddingStore store(vectors.empty() ? 0 : vectors.begin()->second.size());
    for (const auto& [w, v] : vectors) store.add(w, v);
    const MatchResult r = content_iou(generated, control, store);
    return py::make_tuple(r.iou, r.hal);
  });
  m.def("distinct_ngram_diversity", &distinct_ngram_diversity, py::arg("captions"), py::arg("n"));
  m.def("self_cider", &self_cider);
  m.def("best5", &best5_for_image, py::arg("captions"), py::arg("n"));
  m.def("length_metrics", [](const std::vector<int>& targets, const std::vector<std::string>& outputs) {
    const LengthMetrics l = length_metrics(targets, outputs);
    return py::make_tuple(l.mae, l.level_precision);
  });
  m.def("harmonic_mean", &harmonic_mean);

  m.def("run_pipeline",
        [](const std::filesystem::path& config_path, std::optional<std::filesystem::path> out_dir,
           const std::map<std::string, std::string>& overrides) {
          PipelineConfig c = load_config(config_path);
          for (const auto& [k, v] : overrides) set_config_value(c, k, v, std::filesystem::current_path());
          if (out_dir) c.out_dir = *out_dir;
          c.validate();
          PipelineSummary s;
          {
            py::gil_scoped_release release;
            s = run_pipeline(c);
          }
          py::dict out;
          out["records"] = s.records;
          out["images"] = s.images;
          out["samples"] = s.samples;
          out["kept"] = s.kept;
          out["dropped"] = s.dropped;
          out["mixed"] = s.mixed;
          return out;
        },
        py::arg("config"), py::arg("out_dir") = py::none(),
        py::arg("overrides") = std::map<std::string, std::string>{});
  m.def("render_report", [](const std::string& report_json) {
    const RenderedReport r = render_report(Json::parse(report_json));
    return py::make_tuple(r.table, r.band_csv);
  });
}
