#include "ssa/io.hpp"

#include <fstream>
#include <sstream>

#include "ssa/error.hpp"

namespace ssa {

namespace {

const Json& field(const Json& j, const char* name) {
  if (!j.is_object()) throw SchemaError("expected an object");
  auto it = j.find(name);
  if (it == j.end()) throw SchemaError(std::string("missing field '") + name + "'");
  return *it;
}

template <typename T>
T get(const Json& j, const char* name) {
  try {
    return field(j, name).get<T>();
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("field '") + name + "': " + e.what());
  }
}

template <typename T>
std::optional<T> get_optional(const Json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return get<T>(j, name);
}

TokenSpan span_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
    throw SchemaError("token span must be [start, end]");
  return {j[0].get<int>(), j[1].get<int>()};
}

Json span_to_json(const TokenSpan& s) { return Json::array({s.start, s.end}); }

Json grounding_to_json(const std::map<VarId, BoxSet>& grounding) {
  Json out = Json::object();
  for (const auto& [v, boxes] : grounding) {
    Json arr = Json::array();
    for (const auto& b : boxes) arr.push_back(to_json(b));
    out[v] = std::move(arr);
  }
  return out;
}

VgAmr vgamr_from_json(const Json& j) {
  VgAmr g = ungrounded(parse_penman(get<std::string>(j, "penman")));
  if (auto it = j.find("grounding"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw SchemaError("field 'grounding' must be an object");
    for (const auto& [v, boxes] : it->items()) {
      if (!g.graph.has_node(v)) throw SchemaError("grounding names unknown node '" + v + "'");
      if (!boxes.is_array() || boxes.empty())
        throw SchemaError("grounding of '" + v + "' must be a non-empty box list");
      for (const auto& b : boxes) g.grounding[v].insert(box_from_json(b));
    }
  }
  if (auto it = j.find("synonyms"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw SchemaError("field 'synonyms' must be an object");
    for (const auto& [v, labels] : it->items()) {
      if (!g.graph.has_node(v)) throw SchemaError("synonyms name unknown node '" + v + "'");
      std::vector<std::string> list;
      try {
        list = labels.get<std::vector<std::string>>();
      } catch (const Json::exception&) {
        throw SchemaError("synonyms of '" + v + "' must be a list of strings");
      }
      if (list.empty() || list.front() != g.graph.concept_of(v))
        throw SchemaError("synonyms of '" + v + "' must start with its concept");
      g.synonyms[v] = std::move(list);
    }
  }
  return g;
}

void put_vgamr(Json& out, const VgAmr& g) {
  out["penman"] = serialize_penman(g.graph);
  out["grounding"] = grounding_to_json(g.grounding);
  Json syn = Json::object();
  for (const auto& [v, labels] : g.synonyms) syn[v] = labels;
  out["synonyms"] = std::move(syn);
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json values_to_json(const MetricValues& v) {
  return {{"iou", optional_number(v.iou)},         {"hal", optional_number(v.hal)},
          {"g", optional_number(v.g)},             {"sc", optional_number(v.sc)},
          {"d1", optional_number(v.d1)},           {"d2", optional_number(v.d2)},
          {"l", optional_number(v.l)},             {"lp", optional_number(v.lp)},
          {"h", optional_number(v.h)},             {"best5_d1", optional_number(v.best5_d1)},
          {"best5_d2", optional_number(v.best5_d2)}};
}

MetricValues values_from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("metric values must be an object");
  MetricValues v;
  v.iou = get_optional<double>(j, "iou");
  v.hal = get_optional<double>(j, "hal");
  v.g = get_optional<double>(j, "g");
  v.sc = get_optional<double>(j, "sc");
  v.d1 = get_optional<double>(j, "d1");
  v.d2 = get_optional<double>(j, "d2");
  v.l = get_optional<double>(j, "l");
  v.lp = get_optional<double>(j, "lp");
  v.h = get_optional<double>(j, "h");
  v.best5_d1 = get_optional<double>(j, "best5_d1");
  v.best5_d2 = get_optional<double>(j, "best5_d2");
  return v;
}

}  // namespace

Json to_json(const Box& b) { return Json::array({b.x1, b.y1, b.x2, b.y2}); }

Box box_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4)
    throw SchemaError("box must be [x1, y1, x2, y2]");
  for (const auto& x : j)
    if (!x.is_number()) throw SchemaError("box coordinates must be numbers");
  Box b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  if (!(b.x1 < b.x2 && b.y1 < b.y2)) throw InvalidBox("box corners out of order");
  return b;
}

Json to_json(const GroundedCaptionRecord& r) {
  Json groundings = Json::array();
  for (const auto& g : r.groundings) {
    Json boxes = Json::array();
    for (const auto& b : g.boxes) boxes.push_back(to_json(b));
    groundings.push_back(
        {{"token_span", span_to_json(g.span)}, {"entity_id", g.entity_id}, {"boxes", boxes}});
  }
  Json alignments = Json::array();
  for (const auto& a : r.alignments)
    alignments.push_back({{"variable", a.variable}, {"token_span", span_to_json(a.span)}});
  return {{"image_id", r.image_id},     {"image_width", r.image_width},
          {"image_height", r.image_height}, {"caption_id", r.caption_id},
          {"tokens", r.tokens},         {"groundings", groundings},
          {"amr", r.amr},               {"alignments", alignments}};
}

GroundedCaptionRecord record_from_json(const Json& j) {
  GroundedCaptionRecord r;
  r.image_id = get<std::string>(j, "image_id");
  r.image_width = get<int>(j, "image_width");
  r.image_height = get<int>(j, "image_height");
  r.caption_id = get<std::string>(j, "caption_id");
  r.tokens = get<std::vector<std::string>>(j, "tokens");
  r.amr = get<std::string>(j, "amr");
  const Json& groundings = field(j, "groundings");
  if (!groundings.is_array()) throw SchemaError("field 'groundings' must be a list");
  for (const auto& g : groundings) {
    PhraseGrounding pg;
    pg.span = span_from_json(field(g, "token_span"));
    pg.entity_id = get<std::string>(g, "entity_id");
    const Json& boxes = field(g, "boxes");
    if (!boxes.is_array()) throw SchemaError("field 'boxes' must be a list");
    for (const auto& b : boxes) pg.boxes.push_back(box_from_json(b));
    r.groundings.push_back(std::move(pg));
  }
  if (auto it = j.find("alignments"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw SchemaError("field 'alignments' must be a list");
    for (const auto& a : *it)
      r.alignments.push_back({get<std::string>(a, "variable"), span_from_json(field(a, "token_span"))});
  }
  return r;
}

Json to_json(const ImageGraph& g) {
  Json out{{"image_id", g.image_id},
           {"image_width", g.image_width},
           {"image_height", g.image_height}};
  put_vgamr(out, g.graph);
  return out;
}

ImageGraph image_graph_from_json(const Json& j) {
  return {get<std::string>(j, "image_id"), get<int>(j, "image_width"),
          get<int>(j, "image_height"), vgamr_from_json(j)};
}

Json to_json(const ImageSample& s) {
  Json out{{"image_id", s.image_id},
           {"image_width", s.image_width},
           {"image_height", s.image_height}};
  put_vgamr(out, s.sample.graph);
  out["origin_predicate"] = s.sample.origin_predicate;
  out["kind"] = to_string(s.sample.kind);
  out["source_nodes"] = s.sample.source_nodes;
  return out;
}

ImageSample image_sample_from_json(const Json& j) {
  ImageSample s{get<std::string>(j, "image_id"), get<int>(j, "image_width"),
                get<int>(j, "image_height"), {}};
  s.sample.graph = vgamr_from_json(j);
  s.sample.origin_predicate = get<std::string>(j, "origin_predicate");
  const auto kind = get<std::string>(j, "kind");
  if (kind == to_string(SampleKind::ArgumentClosure))
    s.sample.kind = SampleKind::ArgumentClosure;
  else if (kind == to_string(SampleKind::Extended))
    s.sample.kind = SampleKind::Extended;
  else
    throw SchemaError("unknown sample kind '" + kind + "'");
  s.sample.source_nodes =
      get_optional<std::map<VarId, VarId>>(j, "source_nodes").value_or(std::map<VarId, VarId>{});
  return s;
}

Json to_json(const ControlSignal& c) {
  Json boxes = Json::array();
  for (const auto& b : c.boxes) boxes.push_back(to_json(b));
  Json out{{"boxes", boxes},
           {"entity_labels", c.entity_labels},
           {"coverage", c.coverage},
           {"length_level", std::string(1, to_char(c.length_level))},
           {"word_count_target", c.word_count_target}};
  out["verbs"] = c.verbs ? Json(*c.verbs) : Json(nullptr);
  return out;
}

ControlSignal control_from_json(const Json& j) {
  ControlSignal c;
  const Json& boxes = field(j, "boxes");
  if (!boxes.is_array()) throw SchemaError("field 'boxes' must be a list");
  for (const auto& b : boxes) c.boxes.insert(box_from_json(b));
  c.entity_labels = get<std::vector<std::string>>(j, "entity_labels");
  c.coverage = get<double>(j, "coverage");
  if (!(c.coverage >= 0 && c.coverage <= 1)) throw SchemaError("coverage outside [0, 1]");
  const auto level = get<std::string>(j, "length_level");
  if (level.size() != 1) throw SchemaError("length_level must be one letter A-E");
  c.length_level = length_level_from_char(level.front());
  c.word_count_target = get<int>(j, "word_count_target");
  c.verbs = get_optional<std::vector<std::string>>(j, "verbs");
  return c;
}

Json to_json(const ControlCaptionPair& p) {
  return {{"image_id", p.image_id},
          {"caption", p.caption},
          {"control", to_json(p.control)},
          {"source", p.source == PairSource::Original ? "original" : "ssa"},
          {"quality", optional_number(p.quality)}};
}

ControlCaptionPair pair_from_json(const Json& j) {
  ControlCaptionPair p;
  p.image_id = get<std::string>(j, "image_id");
  p.caption = get<std::string>(j, "caption");
  p.control = control_from_json(field(j, "control"));
  const auto source = get<std::string>(j, "source");
  if (source == "original")
    p.source = PairSource::Original;
  else if (source == "ssa")
    p.source = PairSource::Ssa;
  else
    throw SchemaError("unknown pair source '" + source + "'");
  p.quality = get_optional<double>(j, "quality");
  if (p.quality && !(*p.quality >= 0 && *p.quality <= 1))
    throw SchemaError("quality outside [0, 1]");
  return p;
}

Json to_json(const MetricReport& r) {
  Json images = Json::array();
  for (const auto& im : r.images)
    images.push_back(
        {{"image_id", im.image_id}, {"pairs", im.pairs}, {"values", values_to_json(im.values)}});
  Json bands = Json::array();
  for (const auto& b : r.bands)
    bands.push_back({{"lower", b.lower},
                     {"upper", b.upper},
                     {"count", b.count},
                     {"sample_percentage", b.sample_percentage},
                     {"iou", optional_number(b.iou)},
                     {"hal", optional_number(b.hal)}});
  return {{"images", images}, {"aggregate", values_to_json(r.aggregate)}, {"bands", bands}};
}

MetricReport report_from_json(const Json& j) {
  MetricReport r;
  const Json& images = field(j, "images");
  if (!images.is_array()) throw SchemaError("field 'images' must be a list");
  for (const auto& im : images)
    r.images.push_back({get<std::string>(im, "image_id"), get<size_t>(im, "pairs"),
                        values_from_json(field(im, "values"))});
  r.aggregate = values_from_json(field(j, "aggregate"));
  const Json& bands = field(j, "bands");
  if (!bands.is_array()) throw SchemaError("field 'bands' must be a list");
  for (const auto& b : bands) {
    BandStats s;
    s.lower = get<double>(b, "lower");
    s.upper = get<double>(b, "upper");
    s.count = get<size_t>(b, "count");
    s.sample_percentage = get<double>(b, "sample_percentage");
    s.iou = get_optional<double>(b, "iou");
    s.hal = get_optional<double>(b, "hal");
    r.bands.push_back(s);
  }
  return r;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream body;
  body << in.rdbuf();
  return body.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& body) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << body;
  if (!out) throw ConfigError("write failed for " + path.string());
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::vector<Json> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw SchemaError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (out.empty() && j.is_object() && j.contains("_provenance")) continue;
    out.push_back(std::move(j));
  }
  return out;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& lines,
                 const Provenance* provenance) {
  std::string body;
  if (provenance) {
    Json header{{"_provenance",
                 {{"stage", provenance->stage},
                  {"config_hash", provenance->config_hash},
                  {"seed", provenance->seed}}}};
    body += header.dump() + '\n';
  }
  for (const auto& j : lines) body += j.dump() + '\n';
  write_text_file(path, body);
}

}  // namespace ssa
