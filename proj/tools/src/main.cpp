#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "geostate/scene.hpp"

namespace gs = geostate::scene;

namespace {

struct Arguments {
  std::string scene_path;
  std::string request;
  int quad_order = 32;
  double quad_tol = 1e-8;
  std::uint64_t seed = 0;
  int trials = 0;
  std::string eps_list;
  std::string out;
  std::string dump;
  std::vector<std::string> sets;
};

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw geostate::Error(geostate::ErrorCode::SyntaxError, "bad number '" + item + "' in --eps-list");
    }
  }
  return out;
}

std::map<std::string, double> parse_sets(const std::vector<std::string>& sets) {
  std::map<std::string, double> out;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw geostate::Error(geostate::ErrorCode::SyntaxError, "--set expects name=value");
    out[s.substr(0, eq)] = geostate::expr::eval(geostate::expr::parse(s.substr(eq + 1)), {});
  }
  return out;
}

int run(gs::RequestOp op, const Arguments& args) {
  const gs::Scene scene = gs::Scene::from_file(args.scene_path, parse_sets(args.sets));

  if (!args.dump.empty()) {
    const std::string text = scene.normalized().dump(2) + "\n";
    if (args.dump == "-") {
      std::cout << text;
      return 0;
    }
    std::ofstream(args.dump) << text;
  }

  gs::RunOptions options;
  options.quadrature.order = args.quad_order;
  options.quadrature.rel_tol = args.quad_tol;
  options.seed = args.seed;
  options.trials = args.trials;
  if (!args.eps_list.empty()) options.eps_list = parse_list(args.eps_list);

  std::vector<gs::Request> selected;
  for (const auto& r : scene.requests()) {
    if (r.op == op && (args.request.empty() || r.name == args.request)) selected.push_back(r);
  }
  if (selected.empty()) {
    if (!args.request.empty()) {
      throw geostate::Error(geostate::ErrorCode::SceneError, "no " + std::string(gs::to_string(op)) + " request named '" +
                                                                 args.request + "'");
    }
    if (op != gs::RequestOp::Check) {
      throw geostate::Error(geostate::ErrorCode::SceneError,
                            "scene has no " + std::string(gs::to_string(op)) + " requests");
    }
    selected.push_back(gs::Request{.name = "validate"});
  }

  // Tables go to --out, or to stdout for the table-shaped commands; summaries
  // go to stderr whenever stdout carries CSV.
  const bool csv_on_stdout = args.out.empty() && (op == gs::RequestOp::Product || op == gs::RequestOp::Oracle ||
                                                  op == gs::RequestOp::Sweep);
  std::ofstream file;
  if (!args.out.empty()) {
    file.open(args.out);
    if (!file) throw geostate::Error(geostate::ErrorCode::SceneError, "cannot write '" + args.out + "'");
  }
  std::ostream& summary = csv_on_stdout ? std::cerr : std::cout;
  std::ostream* tables = file.is_open() ? static_cast<std::ostream*>(&file) : csv_on_stdout ? &std::cout : nullptr;

  int status = 0;
  for (const auto& r : selected) {
    const gs::Outcome o = gs::run_request(scene, r, options);
    const std::string prefix = selected.size() > 1 ? r.name + ": " : "";
    for (const auto& line : o.summary) summary << (csv_on_stdout ? "# " : "") << prefix << line << '\n';
    if (tables && o.table) {
      if (selected.size() > 1) *tables << "# request: " << r.name << '\n';
      gs::write_csv(*tables, *o.table);
    }
    status = std::max(status, o.status);
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geometric states: pairings, transverse products and inner products"};
  app.require_subcommand(1);
  Arguments args;
  std::optional<gs::RequestOp> chosen;

  const std::vector<std::pair<gs::RequestOp, std::string>> commands{
      {gs::RequestOp::Check, "validate submanifolds and test transversality"},
      {gs::RequestOp::Pair, "pair a state with a test density"},
      {gs::RequestOp::Product, "tabulate the transverse product coefficient on the intersection"},
      {gs::RequestOp::Inner, "inner product of two states of complementary degree"},
      {gs::RequestOp::Oracle, "compare with the mollified tube integrals"},
      {gs::RequestOp::Sweep, "repeat a request over a range of a scene parameter"},
  };
  for (const auto& [op, help] : commands) {
    CLI::App* sub = app.add_subcommand(std::string(gs::to_string(op)), help);
    sub->add_option("scene", args.scene_path, "scene file (JSON)")->required();
    sub->add_option("--request", args.request, "run only the named request");
    sub->add_option("--quad-order", args.quad_order, "Gauss-Legendre points per axis")->check(CLI::Range(2, 256));
    sub->add_option("--quad-tol", args.quad_tol, "relative quadrature tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--seed", args.seed, "seed for randomised checks");
    sub->add_option("--trials", args.trials, "random frame choices per point (check)")->check(CLI::NonNegativeNumber);
    sub->add_option("--eps-list", args.eps_list, "comma-separated mollifier widths (oracle)");
    sub->add_option("--out", args.out, "write CSV tables to this file");
    sub->add_option("--dump-normalized", args.dump, "write the normalized scene JSON to a file ('-' for stdout)");
    sub->add_option("--set", args.sets, "override a scene parameter, name=value");
    sub->callback([&chosen, op = op] { chosen = op; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    return run(*chosen, args);
  } catch (const geostate::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return geostate::exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
