#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <cstdint>
#include <string_view>

#include <nlohmann/json.hpp>

#include "geostate/density.hpp"
#include "geostate/geometry.hpp"
#include "geostate/oracle.hpp"
#include "geostate/product.hpp"
#include "geostate/quadrature.hpp"
#include "geostate/states.hpp"

namespace geostate::scene {

using nlohmann::json;

enum class RequestOp { Check, Pair, Product, Inner, Oracle, Sweep };

std::string_view to_string(RequestOp op);
std::optional<RequestOp> request_op_from_name(std::string_view name);

/// One entry of the scene's `requests` list, after validation. Which
/// fields are set depends on `op`.
struct Request {
  std::string name;
  RequestOp op = RequestOp::Check;
  std::string left;
  std::string right;
  std::string state;
  std::string test;
  std::string intersection;  // optional submanifold name for E
  int grid = 11;
  std::vector<double> eps;
  // sweep
  std::string parameter;
  double from = 0.0;
  double to = 0.0;
  int steps = 0;
  std::string target;  // name of the request a sweep repeats
};

/// A loaded scene: the normalized JSON tree and the objects built from it.
///
/// Numeric fields may be given as expression strings over the scene
/// parameters. Normalization keeps those strings (so sweeps still see the
/// dependence on parameters), applies parameter overrides and fills in
/// defaults and request names; `normalized()` re-loads to an
/// identical scene.
class Scene {
 public:
  static Scene from_json(const json& source, const std::map<std::string, double>& overrides = {});
  static Scene from_text(std::string_view text, const std::map<std::string, double>& overrides = {});
  static Scene from_file(const std::string& path, const std::map<std::string, double>& overrides = {});

  int ambient_dim() const { return ambient_dim_; }
  const expr::Bindings& parameters() const { return parameters_; }
  const json& normalized() const { return normalized_; }
  const json& source() const { return source_; }
  const std::map<std::string, double>& overrides() const { return overrides_; }

  const Submanifold& submanifold(const std::string& name) const;
  const GeometricState& state(const std::string& name) const;
  const AmbientDensity& test(const std::string& name) const;
  const std::vector<Request>& requests() const { return requests_; }
  const Request& request(const std::string& name) const;

  const std::vector<std::string>& submanifold_names() const { return submanifold_order_; }

 private:
  json source_;
  std::map<std::string, double> overrides_;
  json normalized_;
  int ambient_dim_ = 0;
  expr::Bindings parameters_;
  std::map<std::string, Submanifold> submanifolds_;
  std::vector<std::string> submanifold_order_;
  std::map<std::string, GeometricState> states_;
  std::map<std::string, AmbientDensity> tests_;
  std::vector<Request> requests_;
};

struct RunOptions {
  QuadratureOptions quadrature;
  std::optional<std::vector<double>> eps_list;
  std::uint64_t seed = 0;
  int trials = 0;
};

/// Tabular output of one request.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Result of running one request: human-readable summary lines, an
/// optional CSV table, and the exit status the request implies (0 or the
/// code of its error class).
struct Outcome {
  std::string request;
  std::vector<std::string> summary;
  std::optional<Table> table;
  int status = 0;
};

/// Runs one request of the scene. Library errors propagate as exceptions.
Outcome run_request(const Scene& scene, const Request& request, const RunOptions& options);

/// `.17g` formatting used for every floating-point field in outputs.
std::string format_double(double v);

void write_csv(std::ostream& out, const Table& table);

}  // namespace geostate::scene
