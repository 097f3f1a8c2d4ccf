#include "modlab/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "modlab/errors.hpp"

namespace modlab {

namespace {

Json point_json(const Point& p, int dim) {
  Json a = Json::array();
  for (int i = 0; i < dim; ++i) a.push_back(p[i]);
  return a;
}

Point point_from(const Json& j) {
  if (!j.is_array() || j.size() < 2 || j.size() > 3) throw SpecError("points need 2 or 3 coordinates");
  Point p{0, 0, 0};
  for (std::size_t i = 0; i < j.size(); ++i) p[i] = j[i].get<double>();
  return p;
}

Json box_json(const Box& b) { return Json{{"lo", point_json(b.lo, 3)}, {"hi", point_json(b.hi, 3)}}; }

Box box_from(const Json& j) {
  if (!j.contains("lo") || !j.contains("hi")) throw SpecError("boxes need lo and hi corners");
  Box b;
  b.lo = point_from(j.at("lo"));
  b.hi = point_from(j.at("hi"));
  // Missing third coordinate: span the whole axis.
  if (j.at("lo").size() == 2) b.lo[2] = 0.0;
  if (j.at("hi").size() == 2) b.hi[2] = 1.0;
  return b;
}

Json number(double x) {
  if (std::isfinite(x)) return Json(x);
  return Json(std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf"));
}

Json series_entries(const std::vector<SeriesEntry>& es) {
  Json a = Json::array();
  for (const auto& e : es) {
    a.push_back({{"k", e.k},
                 {"lower", number(e.lower)},
                 {"upper", number(e.upper)},
                 {"status", to_string(e.status)},
                 {"iterations", e.iterations}});
  }
  return a;
}

}  // namespace

std::string format_double(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string approximation_json(const GraphApproximation& g) {
  std::ostringstream os;
  os << "{\"modlab_schema\":" << kSchemaVersion << ",\"space_tag\":\"" << to_string(g.space_tag())
     << "\",\"base_tag\":\"" << to_string(g.base_tag()) << "\",\"level\":" << g.level()
     << ",\"dim\":" << g.dim() << ",\"scale\":" << format_double(g.scale())
     << ",\"kappa\":" << format_double(g.kappa()) << ",\"cells\":[";
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Cell& c = g.cells()[i];
    if (i) os << ',';
    os << "{\"id\":" << c.id << ",\"center\":[";
    for (int d = 0; d < g.dim(); ++d) os << (d ? "," : "") << format_double(c.center[d]);
    os << "],\"half_width\":" << format_double(c.half_width) << ",\"index\":[";
    for (int d = 0; d < g.dim(); ++d) os << (d ? "," : "") << c.index[d];
    os << "]}";
  }
  os << "],\"edges\":[";
  auto edges = g.edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    os << (i ? "," : "") << '[' << edges[i].first << ',' << edges[i].second << ']';
  }
  os << "]}\n";
  return os.str();
}

GraphApproximation approximation_from_json(const std::string& text) {
  Json j = Json::parse(text);
  SpaceTag tag = parse_space_tag(j.at("space_tag").get<std::string>());
  int dim = j.at("dim").get<int>();
  std::vector<Cell> cells;
  for (const auto& jc : j.at("cells")) {
    Cell c;
    c.id = jc.at("id").get<int>();
    c.center = point_from(jc.at("center"));
    c.half_width = jc.at("half_width").get<double>();
    c.level = j.at("level").get<int>();
    if (jc.contains("index")) {
      for (std::size_t d = 0; d < jc.at("index").size(); ++d) c.index[d] = jc.at("index")[d].get<int>();
    }
    cells.push_back(c);
  }
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : j.at("edges")) edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  GraphApproximation g(tag, j.at("level").get<int>(), j.at("scale").get<double>(), dim, std::move(cells),
                       std::move(edges), j.at("kappa").get<double>());
  if (j.contains("base_tag")) g.set_base_tag(parse_space_tag(j.at("base_tag").get<std::string>()));
  return g;
}

Json to_json(const ValidationReport& r) {
  Json v = Json::array();
  for (const auto& [id, name] : r.violations) v.push_back({{"cell", id}, {"axiom", name}});
  return Json{{"passed", r.passed},
              {"worst_inner_ratio", number(r.worst_inner_ratio)},
              {"worst_outer_ratio", number(r.worst_outer_ratio)},
              {"min_center_separation", number(r.min_center_separation)},
              {"violations", v}};
}

Json to_json(const CellSet& s) {
  Json j = Json::object();
  if (s.box) {
    j["box"] = box_json(*s.box);
    j["mode"] = s.mode == CellSet::Mode::meets ? "meets" : "within";
  }
  if (!s.ids.empty() || !s.box) j["ids"] = s.ids;
  return j;
}

CellSet cell_set_from_json(const Json& j) {
  if (j.contains("side")) {
    std::string side = j.at("side").get<std::string>();
    if (side == "left") return CellSet::side(0, 0.0);
    if (side == "right") return CellSet::side(0, 1.0);
    if (side == "bottom") return CellSet::side(1, 0.0);
    if (side == "top") return CellSet::side(1, 1.0);
    if (side == "front") return CellSet::side(2, 0.0);
    if (side == "back") return CellSet::side(2, 1.0);
    throw SpecError("unknown side '" + side + "'");
  }
  CellSet s;
  if (j.contains("box")) {
    s.box = box_from(j.at("box"));
    std::string mode = j.value("mode", std::string("meets"));
    if (mode != "meets" && mode != "within") throw SpecError("cell set mode must be meets or within");
    s.mode = mode == "meets" ? CellSet::Mode::meets : CellSet::Mode::within;
  }
  if (j.contains("ids")) s.ids = j.at("ids").get<std::vector<int>>();
  if (!j.contains("box") && !j.contains("ids")) throw SpecError("cell sets need a box, ids or side");
  return s;
}

Json to_json(const CurveFamilySpec& spec) {
  Json j{{"variant", spec.variant_name()}};
  if (const auto* c = std::get_if<ConnectSpec>(&spec.variant)) {
    j["a"] = to_json(c->a);
    j["b"] = to_json(c->b);
    j["region"] = c->region ? to_json(*c->region) : Json(nullptr);
  } else if (const auto* r = std::get_if<CrossRectSpec>(&spec.variant)) {
    j["rect"] = box_json(r->rect);
    j["axis"] = r->axis == CrossAxis::horizontal ? "horizontal" : "vertical";
  } else if (const auto* d = std::get_if<DiamAtLeastSpec>(&spec.variant)) {
    j["d0"] = d->d0;
    j["seed_net"] = d->seed_net;
  } else {
    const auto& t = std::get<TubeSpec>(spec.variant);
    Json w = Json::array();
    for (const auto& p : t.waypoints) w.push_back(point_json(p, 3));
    j["waypoints"] = w;
    j["epsilon"] = t.epsilon;
    j["spacing"] = t.spacing ? Json(*t.spacing) : Json(nullptr);
  }
  return j;
}

CurveFamilySpec family_from_json(const Json& j) {
  try {
    std::string v = j.at("variant").get<std::string>();
    if (v == "connect") {
      ConnectSpec c{cell_set_from_json(j.at("a")), cell_set_from_json(j.at("b")), std::nullopt};
      if (j.contains("region") && !j.at("region").is_null()) c.region = cell_set_from_json(j.at("region"));
      return {c};
    }
    if (v == "cross_rect") {
      std::string axis = j.value("axis", std::string("horizontal"));
      if (axis != "horizontal" && axis != "vertical") throw SpecError("axis must be horizontal or vertical");
      return CurveFamilySpec::cross_rect(box_from(j.at("rect")),
                                         axis == "horizontal" ? CrossAxis::horizontal : CrossAxis::vertical);
    }
    if (v == "diam_at_least") {
      return {DiamAtLeastSpec{j.at("d0").get<double>(), j.value("seed_net", false)}};
    }
    if (v == "tube") {
      TubeSpec t;
      for (const auto& p : j.at("waypoints")) t.waypoints.push_back(point_from(p));
      t.epsilon = j.at("epsilon").get<double>();
      if (j.contains("spacing") && !j.at("spacing").is_null()) t.spacing = j.at("spacing").get<double>();
      return {t};
    }
    throw SpecError("unknown family variant '" + v + "'");
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("malformed family document: ") + e.what());
  }
}

Json to_json(const ModulusSolution& s) {
  Json curves = Json::array();
  for (const auto& c : s.active_curves) curves.push_back(c.cells);
  Json dens = Json::array();
  for (double x : s.density.values) dens.push_back(x);
  return Json{{"p", s.p},
              {"upper", number(s.upper)},
              {"lower", number(s.lower)},
              {"tol", s.tol},
              {"status", to_string(s.status)},
              {"iterations", s.iterations},
              {"spacing", s.spacing},
              {"density", dens},
              {"active_curves", curves}};
}

Json to_json(const ScaleSeries& s) {
  return Json{{"space", to_string(s.space)},
              {"family", to_json(s.family)},
              {"p", s.p},
              {"tol", s.tol},
              {"entries", series_entries(s.entries)},
              {"sub_constant", number(s.sub_constant)},
              {"super_constant", number(s.super_constant)},
              {"notes", s.notes}};
}

Json to_json(const QmEstimate& q) {
  Json probes = Json::array();
  for (const auto& pr : q.probes) {
    Json ratios = Json::array();
    for (double r : pr.trend.ratios) ratios.push_back(number(r));
    probes.push_back({{"p", pr.p},
                      {"verdict", to_string(pr.trend.verdict)},
                      {"slope", number(pr.trend.slope)},
                      {"sigma", number(pr.trend.sigma)},
                      {"ratios", ratios},
                      {"entries", series_entries(pr.entries)}});
  }
  return Json{{"bracket", {q.p_lo, q.p_hi}}, {"inconclusive", q.inconclusive}, {"probes", probes}};
}

Json to_json(const ClpProfile& c) {
  Json rows = Json::array();
  for (const auto& r : c.rows) {
    rows.push_back({{"pair", r.pair_id},
                    {"k", r.k},
                    {"delta", number(r.delta)},
                    {"lower", number(r.lower)},
                    {"upper", number(r.upper)},
                    {"skipped", r.skipped},
                    {"note", r.note}});
  }
  Json env = Json::array();
  for (const auto& e : c.envelope) env.push_back({{"t", e.t}, {"phi", number(e.phi)}, {"psi", number(e.psi)}});
  return Json{{"space", to_string(c.space)}, {"p", c.p}, {"tol", c.tol}, {"rows", rows}, {"envelope", env}};
}

Json to_json(const BallPairReport& b) {
  Json samples = Json::array();
  for (const auto& s : b.samples) {
    samples.push_back({{"index", s.index},
                       {"k", s.k},
                       {"c1", point_json(s.c1, 3)},
                       {"c2", point_json(s.c2, 3)},
                       {"r", s.r},
                       {"lower", number(s.lower)},
                       {"upper", number(s.upper)},
                       {"empty", s.empty}});
  }
  Json by_k = Json::array();
  for (std::size_t i = 0; i < b.ks.size(); ++i) by_k.push_back({{"k", b.ks[i]}, {"m_hat", number(b.m_hat_by_k[i])}});
  return Json{{"space", to_string(b.space)},
              {"p", b.p},
              {"A", b.a_param},
              {"L", b.l_param},
              {"seed", b.seed},
              {"m_hat", number(b.m_hat)},
              {"m_hat_by_k", by_k},
              {"worst_sample", b.worst_sample >= 0 ? samples[static_cast<std::size_t>(b.worst_sample)] : Json(nullptr)},
              {"samples", samples}};
}

Json to_json(const AnnulusReport& a) {
  Json rings = Json::array();
  for (double x : a.ring_upper) rings.push_back(number(x));
  return Json{{"bound", number(a.bound)},         {"balls", a.balls},
              {"radius0", a.radius0},             {"ring_upper", rings},
              {"direct_lower", number(a.direct_lower)}, {"direct_upper", number(a.direct_upper)},
              {"min_length", number(a.min_length)}};
}

Json to_json(const RectProduct& r) {
  return Json{{"horizontal", number(r.horizontal)},
              {"vertical", number(r.vertical)},
              {"product", number(r.product)},
              {"horizontal_bracket", {number(r.h.lower), number(r.h.upper)}},
              {"vertical_bracket", {number(r.v.lower), number(r.v.upper)}}};
}

Json to_json(const FoldingMap& fm) {
  Json group = Json::array();
  for (const auto& h : fm.group) {
    Json perm = Json::array(), sign = Json::array();
    for (int i = 0; i < fm.dim; ++i) {
      perm.push_back(h.perm[i]);
      sign.push_back(h.sign[i]);
    }
    group.push_back({{"perm", perm}, {"sign", sign}});
  }
  return Json{{"space", to_string(fm.tag)},
              {"base_level", fm.base_level},
              {"fine_level", fm.fine_level},
              {"tiles", fm.tile_count()},
              {"max_overlap", fm.max_overlap},
              {"group", group},
              {"multiplication", fm.multiplication},
              {"local_action", fm.local_action},
              {"tile_of", fm.tile_of},
              {"local_index", fm.local_index}};
}

std::string series_csv(const ScaleSeries& s) {
  std::string out = "space,p,k,lower,upper,status,sub_constant,super_constant\n";
  for (const auto& e : s.entries) {
    out += to_string(s.space) + "," + format_double(s.p) + "," + std::to_string(e.k) + "," + format_double(e.lower) +
           "," + format_double(e.upper) + "," + to_string(e.status) + "," + format_double(s.sub_constant) + "," +
           format_double(s.super_constant) + "\n";
  }
  return out;
}

std::string clp_csv(const ClpProfile& c) {
  std::string out = "space,p,k,pair,delta,lower,upper,skipped\n";
  for (const auto& r : c.rows) {
    out += to_string(c.space) + "," + format_double(c.p) + "," + std::to_string(r.k) + "," +
           std::to_string(r.pair_id) + "," + format_double(r.delta) + "," + format_double(r.lower) + "," +
           format_double(r.upper) + "," + (r.skipped ? "1" : "0") + "\n";
  }
  return out;
}

std::string ball_csv(const BallPairReport& b) {
  std::string out = "space,p,k,sample,r,lower,upper,empty\n";
  for (const auto& s : b.samples) {
    out += to_string(b.space) + "," + format_double(b.p) + "," + std::to_string(s.k) + "," + std::to_string(s.index) +
           "," + format_double(s.r) + "," + format_double(s.lower) + "," + format_double(s.upper) + "," +
           (s.empty ? "1" : "0") + "\n";
  }
  return out;
}

std::string qm_csv(const QmEstimate& q) {
  std::string out = "p,k,lower,upper,verdict\n";
  for (const auto& pr : q.probes) {
    for (const auto& e : pr.entries) {
      out += format_double(pr.p) + "," + std::to_string(e.k) + "," + format_double(e.lower) + "," +
             format_double(e.upper) + "," + to_string(pr.trend.verdict) + "\n";
    }
  }
  return out;
}

}  // namespace modlab
