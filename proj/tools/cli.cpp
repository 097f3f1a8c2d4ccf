#include "cli.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "modlab/acceptance.hpp"
#include "modlab/analysis.hpp"
#include "modlab/errors.hpp"
#include "modlab/serialize.hpp"
#include "modlab/solver.hpp"
#include "modlab/tiling.hpp"

namespace modlab {

namespace {

class IoFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot write " + path);
  out << text;
  if (!out) throw IoFailure("write failed for " + path);
}

// Options that may also come from the config file; flags win over the file.
class Settings {
 public:
  explicit Settings(CLI::App* app) : app_(app) {
    app_->add_option("--config", config_path_, "JSON file with option values");
  }

  template <typename T>
  CLI::Option* add(const std::string& name, T& var, const std::string& desc, bool echo = true) {
    CLI::Option* o = app_->add_option("--" + name, var, desc);
    apply_.push_back([o, &var, name](const Json& cfg) {
      if (o->count() > 0 || !cfg.contains(name)) return;
      const Json& v = cfg.at(name);
      if constexpr (std::is_same_v<T, std::string>) {
        var = v.is_string() ? v.get<std::string>() : v.dump();
      } else {
        var = v.get<T>();
      }
    });
    if (echo) echo_.push_back([&var, name](Json& j) { j[name] = var; });
    return o;
  }

  CLI::Option* flag(const std::string& name, bool& var, const std::string& desc) {
    CLI::Option* o = app_->add_flag("--" + name, var, desc);
    apply_.push_back([o, &var, name](const Json& cfg) {
      if (o->count() == 0 && cfg.contains(name)) var = cfg.at(name).get<bool>();
    });
    echo_.push_back([&var, name](Json& j) { j[name] = var; });
    return o;
  }

  void resolve() {
    if (config_path_.empty()) return;
    Json cfg;
    try {
      cfg = Json::parse(read_file(config_path_));
    } catch (const nlohmann::json::exception& e) {
      throw SpecError("malformed config file: " + std::string(e.what()));
    }
    if (!cfg.is_object()) throw SpecError("config file must hold a JSON object");
    try {
      for (auto& f : apply_) f(cfg);
    } catch (const nlohmann::json::exception& e) {
      throw SpecError("config value of the wrong type: " + std::string(e.what()));
    }
  }

  Json echo() const {
    Json j = Json::object();
    for (const auto& f : echo_) f(j);
    return j;
  }

 private:
  CLI::App* app_;
  std::string config_path_;
  std::vector<std::function<void(const Json&)>> apply_;
  std::vector<std::function<void(Json&)>> echo_;
};

CurveFamilySpec parse_family(const std::string& text) {
  if (text.empty() || text == "left_right" || text == "left-right") return CurveFamilySpec::left_right();
  if (text == "top_bottom" || text == "top-bottom") {
    return CurveFamilySpec::connect(CellSet::side(1, 0.0), CellSet::side(1, 1.0));
  }
  if (text.rfind("d0=", 0) == 0) {
    try {
      return CurveFamilySpec::diam_at_least(std::stod(text.substr(3)));
    } catch (const std::logic_error&) {
      throw SpecError("bad d0 value '" + text + "'");
    }
  }
  std::string doc = text.front() == '{' ? text : read_file(text);
  try {
    return family_from_json(Json::parse(doc));
  } catch (const nlohmann::json::exception& e) {
    throw SpecError("malformed family: " + std::string(e.what()));
  }
}

std::vector<int> parse_levels(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::logic_error&) {
      throw SpecError("bad level list '" + text + "'");
    }
  }
  if (out.empty()) throw SpecError("empty level list");
  return out;
}

unsigned effective_workers(unsigned flag_value, bool flag_given) {
  if (flag_given) return std::max(1u, flag_value);
  if (const char* env = std::getenv("MODLAB_WORKERS")) {
    int n = std::atoi(env);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, flag_value);
}

Json document(const std::string& command, const Json& config) {
  return Json{{"modlab_schema", kSchemaVersion}, {"command", command}, {"config", config}};
}

struct Common {
  std::string out;
  unsigned workers = 1;
  CLI::Option* workers_opt = nullptr;
};

void add_common(CLI::App* sub, Settings& s, Common& c) {
  s.add("out", c.out, "output path (default stdout)", false);
  c.workers_opt = s.add("workers", c.workers, "worker threads", false);
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"combinatorial modulus toolkit"};
  app.require_subcommand(1);

  // build
  auto* build = app.add_subcommand("build", "write a graph approximation");
  Settings build_s(build);
  Common build_c;
  std::string space = "square";
  int level = 1;
  double inflation = 0.0;
  bool validate = false;
  build_s.add("space", space, "square, carpet or sponge");
  build_s.add("level", level, "subdivision level k");
  build_s.add("inflation", inflation, "inflate cells by this factor in (1,3]");
  build_s.flag("validate", validate, "check the approximation axioms");
  add_common(build, build_s, build_c);

  // modulus
  auto* mod = app.add_subcommand("modulus", "bound Mod_p of a curve family");
  Settings mod_s(mod);
  Common mod_c;
  std::string m_space = "square", m_graph, m_family;
  int m_level = 2;
  double m_p = 2.0, m_tol = 1e-6;
  long m_calls = 100000;
  std::size_t m_cuts = 16;
  bool m_nosym = false;
  mod_s.add("space", m_space, "square, carpet or sponge");
  mod_s.add("level", m_level, "subdivision level k");
  mod_s.add("graph", m_graph, "approximation JSON file instead of space and level");
  mod_s.add("family", m_family, "left_right, top_bottom, d0=<x>, inline JSON or a file");
  mod_s.add("p", m_p, "exponent in [1,4]");
  mod_s.add("tol", m_tol, "relative duality gap");
  mod_s.add("max-oracle-calls", m_calls, "oracle call budget");
  mod_s.add("cuts", m_cuts, "violated curves added per oracle call");
  mod_s.flag("no-symmetry", m_nosym, "ignore symmetries of the space");
  add_common(mod, mod_s, mod_c);

  // series
  auto* ser = app.add_subcommand("series", "moduli across levels with fitted constants");
  Settings ser_s(ser);
  Common ser_c;
  std::string s_space = "carpet", s_family, s_csv;
  int s_kmin = 2, s_kmax = 4;
  double s_p = 2.0, s_tol = 1e-3;
  bool s_warm = false;
  ser_s.add("space", s_space, "square, carpet or sponge");
  ser_s.add("family", s_family, "scale-free family");
  ser_s.add("p", s_p, "exponent");
  ser_s.add("kmin", s_kmin, "first level");
  ser_s.add("kmax", s_kmax, "last level");
  ser_s.add("tol", s_tol, "relative duality gap per level");
  ser_s.flag("warm-start", s_warm, "seed each level with the previous curves");
  ser_s.add("csv", s_csv, "CSV output path", false);
  add_common(ser, ser_s, ser_c);

  // qdim
  auto* qd = app.add_subcommand("qdim", "bracket the critical exponent");
  Settings qd_s(qd);
  Common qd_c;
  std::string q_space = "square", q_family, q_csv;
  int q_kmax = 4;
  double q_plo = 1.5, q_phi = 2.5, q_ptol = 0.1, q_tol = 1e-4;
  qd_s.add("space", q_space, "square, carpet or sponge");
  qd_s.add("family", q_family, "scale-free family");
  qd_s.add("kmax", q_kmax, "finest level");
  qd_s.add("plo", q_plo, "lower end of the p bracket");
  qd_s.add("phi", q_phi, "upper end of the p bracket");
  qd_s.add("ptol", q_ptol, "bracket width target");
  qd_s.add("tol", q_tol, "relative duality gap per solve");
  qd_s.add("csv", q_csv, "CSV output path", false);
  add_common(qd, qd_s, qd_c);

  // clp
  auto* clp = app.add_subcommand("clp", "modulus against relative distance");
  Settings clp_s(clp);
  Common clp_c;
  std::string c_space = "square", c_pairs, c_levels = "2,3,4", c_csv;
  double c_p = 2.0, c_tol = 1e-4;
  clp_s.add("space", c_space, "square, carpet or sponge");
  clp_s.add("p", c_p, "exponent");
  clp_s.add("levels", c_levels, "comma separated levels");
  clp_s.add("pairs", c_pairs, "JSON file with an array of {a, b} cell sets");
  clp_s.add("tol", c_tol, "relative duality gap per solve");
  clp_s.add("csv", c_csv, "CSV output path", false);
  add_common(clp, clp_s, clp_c);

  // check
  auto* chk = app.add_subcommand("check", "run the acceptance suite");
  Settings chk_s(chk);
  Common chk_c;
  std::string k_suite = "acceptance", k_only;
  std::uint64_t k_seed = 7;
  chk_s.add("suite", k_suite, "suite name");
  chk_s.add("seed", k_seed, "random seed");
  chk_s.add("only", k_only, "comma separated criterion ids");
  add_common(chk, chk_s, chk_c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (build->parsed()) {
      build_s.resolve();
      GraphApproximation g = build_space(parse_space_tag(space), level);
      if (inflation != 0.0) g = build_inflated_cover(g, inflation);
      Json cfg = build_s.echo();
      if (validate) {
        ValidationReport rep = validate_approximation(g);
        Json doc = document("build", cfg);
        doc["cells"] = g.size();
        doc["kappa"] = g.kappa();
        doc["validation"] = to_json(rep);
        if (!build_c.out.empty()) write_text(build_c.out, approximation_json(g));
        std::cout << doc.dump(2) << '\n';
        return rep.passed ? 0 : 2;
      }
      std::string text = approximation_json(g);
      std::string head = "{\"modlab_schema\":" + std::to_string(kSchemaVersion) + ",";
      text.insert(head.size(), "\"config\":" + cfg.dump() + ",");
      write_text(build_c.out, text);
      return 0;
    }

    if (mod->parsed()) {
      mod_s.resolve();
      SolverOptions so;
      so.workers = effective_workers(mod_c.workers, mod_c.workers_opt->count() > 0);
      so.max_oracle_calls = m_calls;
      so.cuts_per_round = m_cuts;
      so.use_symmetry = !m_nosym;
      CurveFamilySpec spec = parse_family(m_family);
      GraphApproximation g = m_graph.empty() ? build_space(parse_space_tag(m_space), m_level)
                                             : approximation_from_json(read_file(m_graph));
      ModulusSolution sol = modulus(g, spec, m_p, m_tol, so);
      Json cfg = mod_s.echo();
      cfg["family"] = to_json(spec);
      Json doc = document("modulus", cfg);
      doc["result"] = to_json(sol);
      write_text(mod_c.out, doc.dump(2) + "\n");
      return sol.status == SolveStatus::iteration_cap ? 1 : 0;
    }

    if (ser->parsed()) {
      ser_s.resolve();
      AnalysisOptions ao;
      ao.solver.workers = effective_workers(ser_c.workers, ser_c.workers_opt->count() > 0);
      ao.warm_start = s_warm;
      CurveFamilySpec spec = parse_family(s_family);
      ScaleSeries s = scale_series(parse_space_tag(s_space), spec, s_p, s_kmin, s_kmax, s_tol, ao);
      Json cfg = ser_s.echo();
      cfg["family"] = to_json(spec);
      Json doc = document("series", cfg);
      doc["result"] = to_json(s);
      write_text(ser_c.out, doc.dump(2) + "\n");
      if (!s_csv.empty()) write_text(s_csv, series_csv(s));
      bool capped = std::any_of(s.entries.begin(), s.entries.end(),
                                [](const SeriesEntry& e) { return e.status == SolveStatus::iteration_cap; });
      return capped ? 1 : 0;
    }

    if (qd->parsed()) {
      qd_s.resolve();
      AnalysisOptions ao;
      ao.solver.workers = effective_workers(qd_c.workers, qd_c.workers_opt->count() > 0);
      CurveFamilySpec spec = parse_family(q_family);
      QmEstimate q = estimate_qm(parse_space_tag(q_space), spec, q_kmax, q_plo, q_phi, q_ptol, q_tol, ao);
      Json cfg = qd_s.echo();
      cfg["family"] = to_json(spec);
      Json doc = document("qdim", cfg);
      doc["result"] = to_json(q);
      write_text(qd_c.out, doc.dump(2) + "\n");
      if (!q_csv.empty()) write_text(q_csv, qm_csv(q));
      return q.inconclusive ? 1 : 0;
    }

    if (clp->parsed()) {
      clp_s.resolve();
      AnalysisOptions ao;
      ao.solver.workers = effective_workers(clp_c.workers, clp_c.workers_opt->count() > 0);
      std::vector<SetPair> pairs;
      if (!c_pairs.empty()) {
        Json arr;
        try {
          arr = Json::parse(read_file(c_pairs));
        } catch (const nlohmann::json::exception& e) {
          throw SpecError("malformed pair file: " + std::string(e.what()));
        }
        int id = 0;
        for (const auto& item : arr) {
          pairs.push_back({id++, cell_set_from_json(item.at("a")), cell_set_from_json(item.at("b"))});
        }
      } else {
        // Congruent boxes of side 1/9 on a horizontal line at relative distance delta.
        const double w = 1.0 / 9.0;
        int id = 0;
        for (double delta : {0.5, 1.0, 2.0, 4.0}) {
          double gap = delta * w * std::sqrt(2.0);
          Box a{{0.5 - gap / 2 - w, 0.5 - w / 2, 0}, {0.5 - gap / 2, 0.5 + w / 2, 1}};
          Box b{{0.5 + gap / 2, 0.5 - w / 2, 0}, {0.5 + gap / 2 + w, 0.5 + w / 2, 1}};
          pairs.push_back({id++, CellSet::from_box(a), CellSet::from_box(b)});
        }
      }
      ClpProfile prof = clp_profile(parse_space_tag(c_space), c_p, pairs, parse_levels(c_levels), c_tol, ao);
      Json cfg = clp_s.echo();
      Json doc = document("clp", cfg);
      doc["result"] = to_json(prof);
      write_text(clp_c.out, doc.dump(2) + "\n");
      if (!c_csv.empty()) write_text(c_csv, clp_csv(prof));
      return 0;
    }

    if (chk->parsed()) {
      chk_s.resolve();
      if (k_suite != "acceptance") throw SpecError("unknown suite '" + k_suite + "'");
      AcceptanceOptions ao;
      ao.seed = k_seed;
      ao.workers = effective_workers(chk_c.workers, chk_c.workers_opt->count() > 0);
      ao.log = &std::cerr;
      if (!k_only.empty()) ao.only = parse_levels(k_only);
      auto results = run_acceptance(ao);
      bool all = std::all_of(results.begin(), results.end(), [](const CriterionResult& r) { return r.passed; });
      std::string table = acceptance_table(results);
      if (chk_c.out.empty()) {
        std::cout << table << std::flush;
      } else {
        Json doc = document("check", chk_s.echo());
        Json rows = Json::array();
        for (const auto& r : results) {
          rows.push_back({{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
        }
        doc["criteria"] = rows;
        doc["passed"] = all;
        write_text(chk_c.out, doc.dump(2) + "\n");
        std::cout << table << std::flush;
      }
      return all ? 0 : 1;
    }
  } catch (const IoFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace modlab
