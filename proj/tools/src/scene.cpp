#include "geostate/scene.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

namespace geostate::scene {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& message) {
  throw Error(ErrorCode::SceneError, where + ": " + message);
}

const json& field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(where, std::string("missing field '") + key + "'");
  return *it;
}

std::string string_field(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_string()) fail(where, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::string optional_string(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return {};
  if (!it->is_string()) fail(where, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

// A number, or an expression string over the scene parameters.
double number(const json& v, const expr::Bindings& params, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return expr::eval(expr::parse(v.get<std::string>()), params);
  fail(where, "expected a number or an expression string");
}

std::vector<double> numbers(const json& v, const expr::Bindings& params, const std::string& where) {
  if (!v.is_array()) fail(where, "expected a list of numbers");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(number(e, params, where));
  return out;
}

Box box_from(const json& v, const expr::Bindings& params, const std::string& where) {
  if (!v.is_array()) fail(where, "a box is a list of [lo, hi] pairs");
  Box b;
  for (const auto& pair : v) {
    const auto ends = numbers(pair, params, where);
    if (ends.size() != 2 || !(ends[0] <= ends[1])) fail(where, "each box axis must be [lo, hi] with lo <= hi");
    b.axes.push_back(Interval{ends[0], ends[1]});
  }
  return b;
}

std::vector<expr::Expr> expressions(const json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected a list of expression strings");
  std::vector<expr::Expr> out;
  for (const auto& e : v) {
    if (!e.is_string()) fail(where, "expected an expression string");
    out.push_back(expr::parse(e.get<std::string>()));
  }
  return out;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

expr::Bindings resolve_parameters(const json& source, const std::map<std::string, double>& overrides) {
  expr::Bindings out;
  std::map<std::string, json> pending;
  if (auto it = source.find("parameters"); it != source.end()) {
    if (!it->is_object()) fail("parameters", "must be an object");
    for (const auto& [name, value] : it->items()) pending.emplace(name, value);
  }
  for (const auto& [name, value] : overrides) {
    pending.erase(name);
    out[name] = value;
  }
  // Parameters may refer to each other; resolve until no progress is made.
  while (!pending.empty()) {
    bool progress = false;
    for (auto it = pending.begin(); it != pending.end();) {
      try {
        out[it->first] = number(it->second, out, "parameter '" + it->first + "'");
        it = pending.erase(it);
        progress = true;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::UnboundIdentifier) throw;
        ++it;
      }
    }
    if (!progress) fail("parameters", "unresolvable reference in '" + pending.begin()->first + "'");
  }
  return out;
}

// Affine parametrisation from "point" and "tangent" (a list of vectors).
Submanifold affine_from(const std::string& name, const json& spec, int n, const expr::Bindings& params,
                        const std::string& where, json& normalized) {
  const auto point = numbers(field(spec, "point", where), params, where + ".point");
  if (static_cast<int>(point.size()) != n) fail(where, "point must have ambient_dim entries");
  Matrix t(n, 0);
  json tangent_out = json::array();
  if (auto it = spec.find("tangent"); it != spec.end()) {
    if (!it->is_array()) fail(where, "tangent must be a list of vectors");
    t.resize(n, static_cast<Eigen::Index>(it->size()));
    Eigen::Index c = 0;
    for (const auto& vec : *it) {
      const auto v = numbers(vec, params, where + ".tangent");
      if (static_cast<int>(v.size()) != n) fail(where, "tangent vectors must have ambient_dim entries");
      t.col(c++) = to_vector(v);
      tangent_out.push_back(vec);
    }
  }
  std::optional<Box> domain;
  if (auto it = spec.find("domain"); it != spec.end()) domain = box_from(*it, params, where + ".domain");
  normalized["point"] = spec["point"];
  normalized["tangent"] = tangent_out;
  if (domain) normalized["domain"] = spec["domain"];
  return Submanifold::affine(name, to_vector(point), t, domain);
}

Submanifold chart_from(const std::string& name, const json& spec, int n, const expr::Bindings& params,
                       const std::string& where, json& normalized) {
  const json& map = field(spec, "map", where);
  const Box domain = box_from(field(spec, "domain", where), params, where + ".domain");
  normalized["map"] = map;
  normalized["domain"] = spec["domain"];
  return Submanifold::chart(name, n, expressions(map, where + ".map"), domain, params);
}

Submanifold parametrisation_from(const std::string& name, const json& spec, int n, const expr::Bindings& params,
                                 const std::string& where, json& normalized) {
  if (spec.contains("map")) return chart_from(name, spec, n, params, where, normalized);
  if (spec.contains("point")) return affine_from(name, spec, n, params, where, normalized);
  fail(where, "parametrisation needs either 'map' and 'domain' or 'point' and 'tangent'");
}

std::set<std::string> known_keys(std::initializer_list<const char*> keys) { return {keys.begin(), keys.end()}; }

void reject_unknown(const json& obj, const std::set<std::string>& keys, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!keys.contains(key)) fail(where, "unknown field '" + key + "'");
  }
}

}  // namespace

std::string_view to_string(RequestOp op) {
  switch (op) {
    case RequestOp::Check: return "check";
    case RequestOp::Pair: return "pair";
    case RequestOp::Product: return "product";
    case RequestOp::Inner: return "inner";
    case RequestOp::Oracle: return "oracle";
    case RequestOp::Sweep: return "sweep";
  }
  return "?";
}

std::optional<RequestOp> request_op_from_name(std::string_view name) {
  for (RequestOp op : {RequestOp::Check, RequestOp::Pair, RequestOp::Product, RequestOp::Inner, RequestOp::Oracle,
                       RequestOp::Sweep}) {
    if (to_string(op) == name) return op;
  }
  return std::nullopt;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(std::ostream& out, const Table& table) {
  for (std::size_t i = 0; i < table.header.size(); ++i) out << (i ? "," : "") << table.header[i];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
}

Scene Scene::from_text(std::string_view text, const std::map<std::string, double>& overrides) {
  json parsed;
  try {
    parsed = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SyntaxError, std::string("scene is not valid JSON: ") + e.what());
  }
  return from_json(parsed, overrides);
}

Scene Scene::from_file(const std::string& path, const std::map<std::string, double>& overrides) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::SceneError, "cannot open scene file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str(), overrides);
}

Scene Scene::from_json(const json& source, const std::map<std::string, double>& overrides) {
  if (!source.is_object()) fail("scene", "top level must be an object");
  reject_unknown(source, known_keys({"ambient_dim", "parameters", "submanifolds", "states", "tests", "requests"}),
                 "scene");
  Scene s;
  s.source_ = source;
  s.overrides_ = overrides;
  s.parameters_ = resolve_parameters(source, overrides);
  const expr::Bindings& params = s.parameters_;

  const json& dim = field(source, "ambient_dim", "scene");
  s.ambient_dim_ = static_cast<int>(number(dim, params, "ambient_dim"));
  if (s.ambient_dim_ < 1 || s.ambient_dim_ > Ambient::max_dim) fail("ambient_dim", "must be in 1..10");
  const int n = s.ambient_dim_;

  json& norm = s.normalized_;
  norm["ambient_dim"] = dim;
  norm["parameters"] = source.value("parameters", json::object());
  for (const auto& [name, value] : overrides) norm["parameters"][name] = value;

  // Submanifolds, in order; "intersection" entries refer to earlier ones.
  norm["submanifolds"] = json::array();
  for (const auto& spec : source.value("submanifolds", json::array())) {
    const std::string name = string_field(spec, "name", "submanifold");
    const std::string where = "submanifold '" + name + "'";
    if (s.submanifolds_.contains(name)) fail(where, "duplicate name");
    const std::string kind = string_field(spec, "kind", where);
    json out{{"name", name}, {"kind", kind}};
    std::optional<Submanifold> core;
    if (kind == "affine") {
      reject_unknown(spec, known_keys({"name", "kind", "point", "tangent", "domain", "implicit"}), where);
      core = affine_from(name, spec, n, params, where, out);
    } else if (kind == "point") {
      reject_unknown(spec, known_keys({"name", "kind", "point"}), where);
      const auto p = numbers(field(spec, "point", where), params, where + ".point");
      if (static_cast<int>(p.size()) != n) fail(where, "point must have ambient_dim entries");
      out["point"] = spec["point"];
      core = Submanifold::point(name, to_vector(p));
    } else if (kind == "ambient") {
      reject_unknown(spec, known_keys({"name", "kind", "domain"}), where);
      std::optional<Box> domain;
      if (auto it = spec.find("domain"); it != spec.end()) {
        domain = box_from(*it, params, where + ".domain");
        out["domain"] = *it;
      }
      core = Submanifold::ambient(name, n, domain);
    } else if (kind == "chart") {
      reject_unknown(spec, known_keys({"name", "kind", "map", "domain", "implicit"}), where);
      core = chart_from(name, spec, n, params, where, out);
    } else if (kind == "implicit") {
      reject_unknown(spec, known_keys({"name", "kind", "implicit", "param"}), where);
      json param_out = json::object();
      core = parametrisation_from(name, field(spec, "param", where), n, params, where + ".param", param_out);
      out["param"] = param_out;
      if (!spec.contains("implicit")) fail(where, "implicit cores need an 'implicit' defining map");
    } else if (kind == "intersection") {
      reject_unknown(spec, known_keys({"name", "kind", "of", "domain"}), where);
      const json& of = field(spec, "of", where);
      if (!of.is_array() || of.size() != 2 || !of[0].is_string() || !of[1].is_string()) {
        fail(where, "'of' must name two submanifolds");
      }
      const auto& c = s.submanifold(of[0].get<std::string>());
      const auto& d = s.submanifold(of[1].get<std::string>());
      const IntersectionResult r = intersect(c, d);
      if (!r.core) fail(where, "intersection is not a single core (use a point list request instead)");
      core = r.core->renamed(name);
      out["of"] = of;
      if (auto it = spec.find("domain"); it != spec.end()) {
        const Box domain = box_from(*it, params, where + ".domain");
        core = core->with_domain(domain);
        out["domain"] = *it;
      }
    } else {
      fail(where, "unknown kind '" + kind + "'");
    }
    if (auto it = spec.find("implicit"); it != spec.end()) {
      core = core->with_implicit(expressions(*it, where + ".implicit"), params);
      out["implicit"] = *it;
    }
    s.submanifolds_.emplace(name, *core);
    s.submanifold_order_.push_back(name);
    norm["submanifolds"].push_back(out);
  }

  norm["states"] = json::array();
  for (const auto& spec : source.value("states", json::array())) {
    const std::string name = string_field(spec, "name", "state");
    const std::string where = "state '" + name + "'";
    reject_unknown(spec, known_keys({"name", "core", "alpha", "coeff", "coeff_im", "h", "conormal", "support"}),
                   where);
    if (s.states_.contains(name)) fail(where, "duplicate name");
    const std::string core_name = string_field(spec, "core", where);
    const Submanifold& core = s.submanifold(core_name);
    json out{{"name", name}, {"core", core_name}};

    ConormalSpec conormal;
    const json conormal_spec = spec.value("conormal", json("orthonormal"));
    if (conormal_spec.is_string() && conormal_spec.get<std::string>() == "orthonormal") {
      conormal.convention = ConormalConvention::Orthonormal;
    } else if (conormal_spec.is_string() && conormal_spec.get<std::string>() == "implicit") {
      conormal.convention = ConormalConvention::ImplicitGradient;
    } else if (conormal_spec.is_array()) {
      conormal.convention = ConormalConvention::Declared;
      for (const auto& row : conormal_spec) conormal.rows.push_back(expressions(row, where + ".conormal"));
    } else {
      fail(where, "conormal must be \"orthonormal\", \"implicit\" or a list of covector rows");
    }
    out["conormal"] = conormal_spec;

    std::optional<Box> support;
    if (auto it = spec.find("support"); it != spec.end()) {
      support = box_from(*it, params, where + ".support");
      out["support"] = *it;
    }

    if (spec.contains("h")) {
      if (spec.contains("coeff") || spec.contains("coeff_im")) fail(where, "give either 'h' or 'coeff', not both");
      if (spec.contains("alpha") && number(spec["alpha"], params, where + ".alpha") != 0.5) {
        fail(where, "states given by a conormal half-density 'h' have alpha = 0.5");
      }
      const std::string h = string_field(spec, "h", where);
      out["h"] = h;
      out["alpha"] = 0.5;
      s.states_.emplace(name, zero_section_state(core, expr::parse(h), conormal, support, params));
    } else {
      const double alpha = number(field(spec, "alpha", where), params, where + ".alpha");
      const std::string re = string_field(spec, "coeff", where);
      const std::string im = optional_string(spec, "coeff_im", where);
      out["alpha"] = spec["alpha"];
      out["coeff"] = re;
      if (!im.empty()) out["coeff_im"] = im;
      s.states_.emplace(name, make_state(core, alpha, expr::ComplexExpr::parse(re, im), conormal, support, params));
    }
    norm["states"].push_back(out);
  }

  norm["tests"] = json::array();
  for (const auto& spec : source.value("tests", json::array())) {
    const std::string name = string_field(spec, "name", "test");
    const std::string where = "test '" + name + "'";
    reject_unknown(spec, known_keys({"name", "alpha", "coeff", "coeff_im", "support"}), where);
    if (s.tests_.contains(name)) fail(where, "duplicate name");
    const double alpha = number(field(spec, "alpha", where), params, where + ".alpha");
    const std::string re = string_field(spec, "coeff", where);
    const std::string im = optional_string(spec, "coeff_im", where);
    json out{{"name", name}, {"alpha", spec["alpha"]}, {"coeff", re}};
    if (!im.empty()) out["coeff_im"] = im;
    std::optional<Region> support;
    if (auto it = spec.find("support"); it != spec.end()) {
      const Box b = box_from(*it, params, where + ".support");
      if (b.dim() != n) fail(where, "support box must have ambient_dim axes");
      support = Region::axis_aligned(b);
      out["support"] = *it;
    }
    s.tests_.emplace(name, AmbientDensity(n, alpha, expr::ComplexExpr::parse(re, im), support, params));
    norm["tests"].push_back(out);
  }

  norm["requests"] = json::array();
  int index = 0;
  for (const auto& spec : source.value("requests", json::array())) {
    ++index;
    Request r;
    const std::string op_name = string_field(spec, "op", "request " + std::to_string(index));
    const auto op = request_op_from_name(op_name);
    if (!op) fail("request " + std::to_string(index), "unknown op '" + op_name + "'");
    r.op = *op;
    r.name = spec.contains("name") ? string_field(spec, "name", "request") : op_name + std::to_string(index);
    const std::string where = "request '" + r.name + "'";
    reject_unknown(spec, known_keys({"name", "op", "left", "right", "state", "test", "intersection", "grid", "eps",
                                     "parameter", "from", "to", "steps", "request"}),
                   where);
    r.left = optional_string(spec, "left", where);
    r.right = optional_string(spec, "right", where);
    r.state = optional_string(spec, "state", where);
    r.test = optional_string(spec, "test", where);
    r.intersection = optional_string(spec, "intersection", where);
    json out{{"name", r.name}, {"op", op_name}};
    for (const char* key : {"left", "right", "state", "test", "intersection"}) {
      if (spec.contains(key)) out[key] = spec[key];
    }
    if (!r.intersection.empty()) s.submanifold(r.intersection);

    const bool two_states = !r.left.empty() || !r.right.empty();
    const bool state_test = !r.state.empty() || !r.test.empty();
    auto need_pair = [&] {
      if (r.left.empty() || r.right.empty()) fail(where, "needs 'left' and 'right' states");
      const auto& a = s.state(r.left);
      const auto& b = s.state(r.right);
      return std::pair(&a, &b);
    };
    auto need_state_test = [&] {
      if (r.state.empty() || r.test.empty()) fail(where, "needs 'state' and 'test'");
      return std::pair(&s.state(r.state), &s.test(r.test));
    };
    switch (r.op) {
      case RequestOp::Check:
        if (two_states) {
          // check works on submanifolds; left/right name cores (or states on them)
          for (const std::string* nm : {&r.left, &r.right}) {
            if (nm->empty()) fail(where, "needs both 'left' and 'right'");
            if (!s.submanifolds_.contains(*nm) && !s.states_.contains(*nm)) fail(where, "unknown name '" + *nm + "'");
          }
        }
        break;
      case RequestOp::Pair: {
        auto [st, t] = need_state_test();
        if (!degrees_complementary(st->degree(), t->degree())) {
          throw Error(ErrorCode::DegreeMismatch, where + ": state and test degrees must sum to 1");
        }
        break;
      }
      case RequestOp::Product:
        need_pair();
        break;
      case RequestOp::Inner: {
        auto [a, b] = need_pair();
        if (!degrees_complementary(a->degree(), b->degree())) {
          throw Error(ErrorCode::DegreeMismatch, where + ": inner product needs degrees alpha and 1 - alpha");
        }
        break;
      }
      case RequestOp::Oracle: {
        if (state_test) {
          auto [st, t] = need_state_test();
          if (!degrees_complementary(st->degree(), t->degree())) {
            throw Error(ErrorCode::DegreeMismatch, where + ": state and test degrees must sum to 1");
          }
        } else {
          auto [a, b] = need_pair();
          if (!degrees_complementary(a->degree(), b->degree())) {
            throw Error(ErrorCode::DegreeMismatch, where + ": oracle needs degrees alpha and 1 - alpha");
          }
        }
        break;
      }
      case RequestOp::Sweep:
        break;
    }
    if (auto it = spec.find("grid"); it != spec.end()) {
      r.grid = static_cast<int>(number(*it, params, where + ".grid"));
      if (r.grid < 1) fail(where, "grid must be positive");
      out["grid"] = *it;
    }
    if (auto it = spec.find("eps"); it != spec.end()) {
      r.eps = numbers(*it, params, where + ".eps");
      out["eps"] = *it;
    }
    if (r.op == RequestOp::Sweep) {
      r.parameter = string_field(spec, "parameter", where);
      if (!params.contains(r.parameter)) fail(where, "unknown parameter '" + r.parameter + "'");
      r.from = number(field(spec, "from", where), params, where + ".from");
      r.to = number(field(spec, "to", where), params, where + ".to");
      r.steps = static_cast<int>(number(field(spec, "steps", where), params, where + ".steps"));
      if (r.steps < 1) fail(where, "steps must be positive");
      r.target = string_field(spec, "request", where);
      out["parameter"] = r.parameter;
      out["from"] = spec["from"];
      out["to"] = spec["to"];
      out["steps"] = spec["steps"];
      out["request"] = r.target;
    }
    for (const auto& existing : s.requests_) {
      if (existing.name == r.name) fail(where, "duplicate name");
    }
    s.requests_.push_back(std::move(r));
    norm["requests"].push_back(out);
  }
  for (const auto& r : s.requests_) {
    if (r.op != RequestOp::Sweep) continue;
    const Request& target = s.request(r.target);
    if (target.op != RequestOp::Inner && target.op != RequestOp::Pair) {
      fail("request '" + r.name + "'", "sweeps repeat an inner or pair request");
    }
  }
  return s;
}

const Submanifold& Scene::submanifold(const std::string& name) const {
  auto it = submanifolds_.find(name);
  if (it == submanifolds_.end()) fail("scene", "unknown submanifold '" + name + "'");
  return it->second;
}

const GeometricState& Scene::state(const std::string& name) const {
  auto it = states_.find(name);
  if (it == states_.end()) fail("scene", "unknown state '" + name + "'");
  return it->second;
}

const AmbientDensity& Scene::test(const std::string& name) const {
  auto it = tests_.find(name);
  if (it == tests_.end()) fail("scene", "unknown test '" + name + "'");
  return it->second;
}

const Request& Scene::request(const std::string& name) const {
  for (const auto& r : requests_) {
    if (r.name == name) return r;
  }
  fail("scene", "unknown request '" + name + "'");
}

}  // namespace geostate::scene
