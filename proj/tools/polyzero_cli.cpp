#include <atomic>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "polyzero/character.hpp"
#include "polyzero/ensemble.hpp"
#include "polyzero/errors.hpp"
#include "polyzero/moment.hpp"
#include "polyzero/polytope.hpp"
#include "polyzero/szego.hpp"
#include "polyzero/version.hpp"
#include "polyzero/zerocurrent.hpp"

namespace {

using nlohmann::json;
using namespace polyzero;

int default_threads() {
  if (const char* env = std::getenv("POLYZERO_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1 && n <= 64) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hw, 1u, 8u));
}

struct Options {
  std::string command;
  std::string config_path;
  std::string polytope_path;
  double rho_min = -2.0;
  double rho_max = 2.0;
  long long steps = 21;
  long long N = 10;
  std::vector<long long> N_list;
  std::uint64_t seed = 0;
  long long samples = 100;
  std::string out_path;
  int threads = default_threads();
  int facet_index = 0;
  int resolution = 16;
  int order = 12;
  long long seg_a = 0;
  long long seg_b = 1;
  std::vector<double> w_re;
  std::vector<double> w_im;
  json tolerances = json::object();
};

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

/// Per-command configuration schema: which top-level keys are accepted,
/// both in --config files and in the echoed header.
const std::vector<std::string>& allowed_keys(const std::string& command) {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"polytope info", {"command", "polytope_path", "out_path", "threads"}},
      {"polytope ehrhart", {"command", "polytope_path", "out_path", "threads"}},
      {"bp grid",
       {"command", "polytope_path", "grid", "tolerances", "out_path",
        "threads"}},
      {"region grid",
       {"command", "polytope_path", "grid", "tolerances", "out_path",
        "threads"}},
      {"szego converge",
       {"command", "polytope_path", "grid", "N_list", "tolerances", "out_path",
        "threads"}},
      {"szego mass-grid",
       {"command", "polytope_path", "grid", "N", "tolerances", "out_path",
        "threads"}},
      {"character table",
       {"command", "polytope_path", "N_list", "w_re", "w_im", "out_path",
        "threads"}},
      {"character todd1d",
       {"command", "a", "b", "N", "w_re", "w_im", "order", "out_path"}},
      {"psi grid",
       {"command", "polytope_path", "grid", "tolerances", "out_path",
        "threads"}},
      {"psi rank-map",
       {"command", "polytope_path", "grid", "tolerances", "out_path",
        "threads"}},
      {"psi bk-check",
       {"command", "polytope_path", "resolution", "out_path"}},
      {"ensemble m1",
       {"command", "polytope_path", "N", "samples", "seed", "out_path"}},
      {"ensemble tentacles",
       {"command", "polytope_path", "facet_index", "N", "samples", "seed",
        "out_path"}},
  };
  const auto it = table.find(command);
  if (it == table.end()) throw ConfigError("unknown command: " + command);
  return it->second;
}

bool key_allowed(const std::string& command, const std::string& key) {
  const auto& keys = allowed_keys(command);
  return std::find(keys.begin(), keys.end(), key) != keys.end();
}

void apply_config_file(Options& opts, const std::set<std::string>& cli_set) {
  std::ifstream in(opts.config_path);
  if (!in) throw ConfigError("cannot open config file " + opts.config_path);
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    if (!key_allowed(opts.command, key)) {
      throw ConfigError("unknown config field \"" + key + "\" for command " +
                        opts.command);
    }
    (void)value;
  }
  try {
    if (cfg.contains("command") &&
        cfg["command"].get<std::string>() != opts.command) {
      throw ConfigError("config command \"" +
                        cfg["command"].get<std::string>() +
                        "\" does not match invoked command " + opts.command);
    }
    const auto want = [&](const char* key) {
      return cfg.contains(key) && !cli_set.count(key);
    };
    if (want("polytope_path")) opts.polytope_path = cfg["polytope_path"];
    if (cfg.contains("grid")) {
      const json& g = cfg["grid"];
      if (!g.is_object()) throw ConfigError("grid must be an object");
      for (const auto& [key, value] : g.items()) {
        if (key != "rho_min" && key != "rho_max" && key != "steps") {
          throw ConfigError("unknown grid field \"" + key + "\"");
        }
        (void)value;
      }
      if (g.contains("rho_min") && !cli_set.count("rho_min")) {
        opts.rho_min = g["rho_min"];
      }
      if (g.contains("rho_max") && !cli_set.count("rho_max")) {
        opts.rho_max = g["rho_max"];
      }
      if (g.contains("steps") && !cli_set.count("steps")) {
        opts.steps = g["steps"];
      }
    }
    if (want("N")) opts.N = cfg["N"];
    if (want("N_list")) {
      opts.N_list = cfg["N_list"].get<std::vector<long long>>();
    }
    if (want("seed")) opts.seed = cfg["seed"];
    if (want("samples")) opts.samples = cfg["samples"];
    if (want("out_path")) opts.out_path = cfg["out_path"];
    if (want("threads")) opts.threads = cfg["threads"];
    if (want("facet_index")) opts.facet_index = cfg["facet_index"];
    if (want("resolution")) opts.resolution = cfg["resolution"];
    if (want("order")) opts.order = cfg["order"];
    if (want("a")) opts.seg_a = cfg["a"];
    if (want("b")) opts.seg_b = cfg["b"];
    if (want("w_re")) opts.w_re = cfg["w_re"].get<std::vector<double>>();
    if (want("w_im")) opts.w_im = cfg["w_im"].get<std::vector<double>>();
    if (cfg.contains("tolerances")) {
      const json& t = cfg["tolerances"];
      if (!t.is_object()) throw ConfigError("tolerances must be an object");
      for (const auto& [key, value] : t.items()) {
        if (key != "kkt_tol" && key != "transition_rtol" &&
            key != "face_tol" && key != "fd_step" && key != "rank_threshold") {
          throw ConfigError("unknown tolerance \"" + key + "\"");
        }
        if (!value.is_number()) {
          throw ConfigError("tolerance \"" + key + "\" must be numeric");
        }
        if (!opts.tolerances.contains(key)) opts.tolerances[key] = value;
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config type error: ") + e.what());
  }
}

json effective_config(const Options& opts) {
  json cfg = json::object();
  cfg["command"] = opts.command;
  for (const auto& key : allowed_keys(opts.command)) {
    if (key == "command") continue;
    if (key == "polytope_path") cfg["polytope_path"] = opts.polytope_path;
    if (key == "grid") {
      cfg["grid"] = {{"rho_min", opts.rho_min},
                     {"rho_max", opts.rho_max},
                     {"steps", opts.steps}};
    }
    if (key == "N") cfg["N"] = opts.N;
    if (key == "N_list") cfg["N_list"] = opts.N_list;
    if (key == "seed") cfg["seed"] = opts.seed;
    if (key == "samples") cfg["samples"] = opts.samples;
    if (key == "out_path") cfg["out_path"] = opts.out_path;
    if (key == "threads") cfg["threads"] = opts.threads;
    if (key == "facet_index") cfg["facet_index"] = opts.facet_index;
    if (key == "resolution") cfg["resolution"] = opts.resolution;
    if (key == "order") cfg["order"] = opts.order;
    if (key == "a") cfg["a"] = opts.seg_a;
    if (key == "b") cfg["b"] = opts.seg_b;
    if (key == "w_re") cfg["w_re"] = opts.w_re;
    if (key == "w_im") cfg["w_im"] = opts.w_im;
    if (key == "tolerances") cfg["tolerances"] = opts.tolerances;
  }
  return cfg;
}

SolveOptions solve_options(const Options& opts) {
  SolveOptions so;
  if (opts.tolerances.contains("kkt_tol")) {
    so.kkt_tol = opts.tolerances["kkt_tol"];
  }
  if (opts.tolerances.contains("transition_rtol")) {
    so.transition_rtol = opts.tolerances["transition_rtol"];
  }
  if (opts.tolerances.contains("face_tol")) {
    so.face_tol = opts.tolerances["face_tol"];
  }
  return so;
}

double fd_step_of(const Options& opts) {
  return opts.tolerances.contains("fd_step")
             ? opts.tolerances["fd_step"].get<double>()
             : 1e-3;
}

double rank_threshold_of(const Options& opts) {
  return opts.tolerances.contains("rank_threshold")
             ? opts.tolerances["rank_threshold"].get<double>()
             : 1e-4;
}

void write_output(const Options& opts, const std::string& text) {
  if (opts.out_path.empty() || opts.out_path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(opts.out_path);
  if (!out) throw ConfigError("cannot open output file " + opts.out_path);
  out << text;
}

std::string header(const Options& opts) {
  std::ostringstream os;
  os << "# polyzero " << kVersion << "\n";
  os << "# config " << effective_config(opts).dump() << "\n";
  return os.str();
}

const char* region_name(Region r) {
  switch (r) {
    case Region::Allowed:
      return "allowed";
    case Region::Forbidden:
      return "forbidden";
    default:
      return "transition";
  }
}

/// All grid points in lex order: each axis runs the same closed interval
/// [rho_min, rho_max] with `steps` samples.
std::vector<TorusPoint> make_grid(const Options& opts, int m) {
  if (opts.steps < 1) throw ConfigError("steps must be positive");
  if (opts.rho_max < opts.rho_min) {
    throw ConfigError("rho_max must be at least rho_min");
  }
  double total = 1;
  for (int j = 0; j < m; ++j) total *= static_cast<double>(opts.steps);
  if (total > 2e6) throw ConfigError("grid too large; lower steps");
  std::vector<double> axis(opts.steps);
  for (long long i = 0; i < opts.steps; ++i) {
    axis[i] = opts.steps == 1
                  ? opts.rho_min
                  : opts.rho_min + (opts.rho_max - opts.rho_min) *
                                       static_cast<double>(i) /
                                       static_cast<double>(opts.steps - 1);
  }
  std::vector<TorusPoint> grid;
  grid.reserve(static_cast<std::size_t>(total));
  std::vector<long long> idx(m, 0);
  for (;;) {
    TorusPoint z;
    z.rho.resize(m);
    z.theta.assign(m, 0.0);
    for (int j = 0; j < m; ++j) z.rho[j] = axis[idx[j]];
    grid.push_back(std::move(z));
    int j = m - 1;
    while (j >= 0 && ++idx[j] == opts.steps) idx[j--] = 0;
    if (j < 0) break;
  }
  return grid;
}

struct NumericFailure {
  std::string point;
  std::string message;
};

/// Runs fn(i) for i in [0, n) on a worker pool; results must be written to
/// index i of a preallocated buffer so output order is thread-independent.
void parallel_for(long long n, int threads,
                  const std::function<void(long long)>& fn) {
  threads = std::clamp(threads, 1, 64);
  if (threads == 1 || n < 4) {
    for (long long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long long> next{0};
  std::mutex fail_mutex;
  std::exception_ptr first_failure;
  auto worker = [&] {
    for (;;) {
      const long long i = next.fetch_add(1);
      if (i >= n) return;
      {
        std::lock_guard<std::mutex> lock(fail_mutex);
        if (first_failure) return;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(fail_mutex);
        if (!first_failure) first_failure = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_failure) std::rethrow_exception(first_failure);
}

std::string point_string(const TorusPoint& z) {
  std::string s = "rho=(";
  for (std::size_t j = 0; j < z.rho.size(); ++j) {
    if (j) s += ", ";
    s += fmt(z.rho[j]);
  }
  return s + ")";
}

/// Wraps a per-point computation so a numeric failure names the point.
template <typename Fn>
void grid_map(const std::vector<TorusPoint>& grid, int threads,
              std::vector<std::string>& rows, Fn fn) {
  rows.resize(grid.size());
  std::mutex fail_mutex;
  bool failed = false;
  NumericFailure failure;
  try {
    parallel_for(static_cast<long long>(grid.size()), threads,
                 [&](long long i) {
                   try {
                     rows[static_cast<std::size_t>(i)] =
                         fn(grid[static_cast<std::size_t>(i)]);
                   } catch (const std::exception& e) {
                     std::lock_guard<std::mutex> lock(fail_mutex);
                     if (!failed) {
                       failed = true;
                       failure = {
                           point_string(grid[static_cast<std::size_t>(i)]),
                           e.what()};
                     }
                     throw;
                   }
                 });
  } catch (...) {
    if (failed) {
      throw SolveError("numeric failure at " + failure.point + ": " +
                       failure.message);
    }
    throw;
  }
}

LatticePolytope load_polytope(const Options& opts) {
  if (opts.polytope_path.empty()) {
    throw ConfigError("a polytope file is required (--polytope)");
  }
  try {
    return LatticePolytope::load(opts.polytope_path);
  } catch (const InvalidPolytopeError& e) {
    throw ConfigError(std::string("polytope file invalid: ") + e.what());
  }
}

void axis_columns(std::ostringstream& os, const char* prefix, int m) {
  for (int j = 1; j <= m; ++j) os << "," << prefix << "_" << j;
}

int run_polytope_info(const Options& opts) {
  auto P = load_polytope(opts);
  json out;
  out["version"] = kVersion;
  out["config"] = effective_config(opts);
  out["m"] = P.ambient_dim();
  out["p"] = P.degree_bound();
  out["vertices"] = json::array();
  for (const auto& v : P.vertices()) out["vertices"].push_back(v);
  out["halfspaces"] = json::array();
  for (const auto& h : P.halfspaces()) {
    out["halfspaces"].push_back({{"u", h.u}, {"lambda", h.lambda}});
  }
  out["equations"] = json::array();
  for (const auto& e : P.equations()) {
    out["equations"].push_back({{"w", e.w}, {"c", e.c}});
  }
  std::map<int, int> faces_by_dim;
  for (const auto& f : P.faces()) ++faces_by_dim[f.dim];
  out["face_counts_by_dim"] = json::object();
  for (const auto& [dim, count] : faces_by_dim) {
    out["face_counts_by_dim"][std::to_string(dim)] = count;
  }
  const Rational vol = P.volume_exact();
  out["volume"] = {{"str", vol.str()}, {"value", vol.to_double()}};
  out["lattice_points"] = P.count_lattice_points(1);
  write_output(opts, out.dump(2) + "\n");
  return 0;
}

int run_polytope_ehrhart(const Options& opts) {
  auto P = load_polytope(opts);
  const EhrhartPolynomial ehrhart = P.ehrhart_fit();
  std::ostringstream os;
  os << header(opts) << "k,power_of_N,coefficient,value\n";
  const int n = static_cast<int>(ehrhart.coeffs.size()) - 1;
  for (int k = 0; k <= n; ++k) {
    os << k << "," << (n - k) << "," << ehrhart.coeffs[k].str() << ","
       << fmt(ehrhart.coeffs[k].to_double()) << "\n";
  }
  write_output(opts, os.str());
  return 0;
}

int run_bp_grid(const Options& opts) {
  auto P = load_polytope(opts);
  const int m = P.ambient_dim();
  const SolveOptions so = solve_options(opts);
  const auto grid = make_grid(opts, m);
  std::ostringstream os;
  os << header(opts) << "rho_1";
  for (int j = 2; j <= m; ++j) os << ",rho_" << j;
  axis_columns(os, "mu", m);
  os << ",region,face_id,b";
  axis_columns(os, "q", m);
  axis_columns(os, "tau", m);
  os << ",kkt_residual\n";
  std::vector<std::string> rows;
  grid_map(grid, opts.threads, rows, [&](const TorusPoint& z) {
    const RegionInfo info = classify_region(P, z, so);
    const auto mu = moment_map(z);
    std::ostringstream row;
    for (int j = 0; j < m; ++j) row << (j ? "," : "") << fmt(z.rho[j]);
    for (int j = 0; j < m; ++j) row << "," << fmt(mu[j]);
    row << "," << region_name(info.region) << "," << info.face_id << ","
        << fmt(info.data.b);
    for (int j = 0; j < m; ++j) row << "," << fmt(info.data.q[j]);
    for (int j = 0; j < m; ++j) row << "," << fmt(info.data.tau[j]);
    row << "," << fmt(info.data.residual) << "\n";
    return row.str();
  });
  for (const auto& r : rows) os << r;
  write_output(opts, os.str());
  return 0;
}

int run_region_grid(const Options& opts) {
  auto P = load_polytope(opts);
  const int m = P.ambient_dim();
  const SolveOptions so = solve_options(opts);
  const auto grid = make_grid(opts, m);
  std::ostringstream os;
  os << header(opts) << "rho_1";
  for (int j = 2; j <= m; ++j) os << ",rho_" << j;
  os << ",region,face_id\n";
  std::vector<std::string> rows;
  grid_map(grid, opts.threads, rows, [&](const TorusPoint& z) {
    const RegionInfo info = classify_region(P, z, so);
    std::ostringstream row;
    for (int j = 0; j < m; ++j) row << (j ? "," : "") << fmt(z.rho[j]);
    row << "," << region_name(info.region) << "," << info.face_id << "\n";
    return row.str();
  });
  for (const auto& r : rows) os << r;
  write_output(opts, os.str());
  return 0;
}

int run_szego_converge(const Options& opts) {
  auto P = load_polytope(opts);
  const int m = P.ambient_dim();
  if (opts.N_list.empty()) {
    throw ConfigError("szego converge needs a nonempty N_list");
  }
  for (long long N : opts.N_list) {
    if (N < 1) throw ConfigError("levels in N_list must be positive");
  }
  const auto grid = make_grid(opts, m);
  std::ostringstream os;
  os << header(opts) << "N,rho_1";
  for (int j = 2; j <= m; ++j) os << ",rho_" << j;
  os << ",u_N,u_inf,residual\n";
  for (long long N : opts.N_list) {
    std::vector<std::string> rows;
    grid_map(grid, opts.threads, rows, [&](const TorusPoint& z) {
      const SzegoEval eval = szego_eval(P, N, z);
      std::ostringstream row;
      row << N;
      for (int j = 0; j < m; ++j) row << "," << fmt(z.rho[j]);
      row << "," << fmt(eval.u_N) << "," << fmt(eval.u_inf) << ","
          << fmt(eval.residual) << "\n";
      return row.str();
    });
    for (const auto& r : rows) os << r;
  }
  write_output(opts, os.str());
  return 0;
}

int run_szego_mass_grid(const Options& opts) {
  auto P = load_polytope(opts);
  const int m = P.ambient_dim();
  if (opts.N < 1) throw ConfigError("N must be positive");
  const auto grid = make_grid(opts, m);
  std::ostringstream os;
  os << header(opts) << "rho_1";
  for (int j = 2; j <= m; ++j) os << ",rho_" << j;
  os << ",log_pi,log_count,mass,u_N,u_inf\n";
  std::vector<std::string> rows;
  grid_map(grid, opts.threads, rows, [&](const TorusPoint& z) {
    const SzegoEval eval = szego_eval(P, opts.N, z);
    std::ostringstream row;
    for (int j = 0; j < m; ++j) row << (j ? "," : "") << fmt(z.rho[j]);
    row << "," << fmt(eval.log_pi) << "," << fmt(eval.log_count) << ","
        << fmt(eval.mass) << "," << fmt(eval.u_N) << "," << fmt(eval.u_inf)
        << "\n";
    return row.str();
  });
  for (const auto& r : rows) os << r;
  write_output(opts, os.str());
  return 0;
}

int run_character_table(const Options& opts) {
  auto P = load_polytope(opts);
  const int m = P.ambient_dim();
  if (opts.N_list.empty()) {
    throw ConfigError("character table needs a nonempty N_list");
  }
  std::vector<double> w_re = opts.w_re;
  std::vector<double> w_im = opts.w_im;
  if (w_re.empty()) w_re.assign(m, 0.0);
  if (w_im.empty()) w_im.assign(m, 0.0);
  if (static_cast<int>(w_re.size()) != m ||
      static_cast<int>(w_im.size()) != m) {
    throw ConfigError("weight length must match the polytope dimension");
  }
  std::vector<std::complex<double>> w(m);
  for (int j = 0; j < m; ++j) w[j] = {w_re[j], w_im[j]};
  std::ostringstream os;
  os << header(opts) << "N";
  axis_columns(os, "w_re", m);
  axis_columns(os, "w_im", m);
  os << ",value_re,value_im,log_mag,phase\n";
  for (long long N : opts.N_list) {
    const CharacterEval eval = character_exact(P, N, w);
    os << N;
    for (int j = 0; j < m; ++j) os << "," << fmt(w_re[j]);
    for (int j = 0; j < m; ++j) os << "," << fmt(w_im[j]);
    os << "," << fmt(eval.value.real()) << "," << fmt(eval.value.imag())
       << "," << fmt(eval.log_mag) << "," << fmt(eval.phase) << "\n";
  }
  write_output(opts, os.str());
  return 0;
}

int run_character_todd1d(const Options& opts) {
  const std::complex<double> w{opts.w_re.empty() ? 0.0 : opts.w_re[0],
                               opts.w_im.empty() ? 0.0 : opts.w_im[0]};
  if (opts.w_re.size() > 1 || opts.w_im.size() > 1) {
    throw ConfigError("todd1d takes a scalar weight");
  }
  const double span =
      static_cast<double>(std::max(std::llabs(opts.seg_a * opts.N),
                                   std::llabs(opts.seg_b * opts.N)));
  if (std::abs(w.real()) * span > 600.0) {
    throw ConfigError("weight too large: the reference sum would overflow");
  }
  const std::complex<double> value =
      character_1d_todd(opts.seg_a, opts.seg_b, opts.N, w, opts.order);
  std::complex<double> reference = 0.0;
  for (long long k = opts.seg_a * opts.N; k <= opts.seg_b * opts.N; ++k) {
    reference += std::exp(w * static_cast<double>(k));
  }
  std::ostringstream os;
  os << header(opts)
     << "a,b,N,w_re,w_im,order,value_re,value_im,reference_re,reference_im,"
        "abs_error\n";
  os << opts.seg_a << "," << opts.seg_b << "," << opts.N << ","
     << fmt(w.real()) << "," << fmt(w.imag()) << "," << opts.order << ","
     << fmt(value.real()) << "," << fmt(value.imag()) << ","
     << fmt(reference.real()) << "," << fmt(reference.imag()) << ","
     << fmt(std::abs(value - reference)) << "\n";
  write_output(opts, os.str());
  return 0;
}

int run_psi_grid(const Options& opts) {
  auto P = load_polytope(opts);
  const int m = P.ambient_dim();
  const double step = fd_step_of(opts);
  const double rank_rel = rank_threshold_of(opts);
  const auto grid = make_grid(opts, m);
  std::ostringstream os;
  os << header(opts) << "rho_1";
  for (int j = 2; j <= m; ++j) os << ",rho_" << j;
  os << ",region,face_id,rank";
  axis_columns(os, "eig", m);
  for (int j = 1; j <= m; ++j) {
    for (int k = j; k <= m; ++k) os << ",M_" << j << k;
  }
  os << "\n";
  std::vector<std::string> rows;
  grid_map(grid, opts.threads, rows, [&](const TorusPoint& z) {
    PsiDensity d = psi_density(P, z, step);
    const auto reference = allowed_reference_matrix(P, z);
    double ref_max = 0.0;
    for (const auto& row : reference) {
      for (double v : row) ref_max = std::max(ref_max, std::abs(v));
    }
    int rank = 0;
    for (double lam : d.eigenvalues) {
      if (lam > rank_rel * std::max(ref_max, 1e-300)) ++rank;
    }
    std::ostringstream row;
    for (int j = 0; j < m; ++j) row << (j ? "," : "") << fmt(z.rho[j]);
    row << "," << region_name(d.region) << "," << d.face_id << "," << rank;
    for (int j = 0; j < m; ++j) row << "," << fmt(d.eigenvalues[j]);
    for (int j = 0; j < m; ++j) {
      for (int k = j; k < m; ++k) row << "," << fmt(d.matrix[j][k]);
    }
    row << "\n";
    return row.str();
  });
  for (const auto& r : rows) os << r;
  write_output(opts, os.str());
  return 0;
}

int run_psi_rank_map(const Options& opts) {
  auto P = load_polytope(opts);
  const int m = P.ambient_dim();
  const double step = fd_step_of(opts);
  const double rank_rel = rank_threshold_of(opts);
  const auto grid = make_grid(opts, m);
  std::ostringstream os;
  os << header(opts) << "rho_1";
  for (int j = 2; j <= m; ++j) os << ",rho_" << j;
  os << ",region,face_id,rank\n";
  std::vector<std::string> rows;
  grid_map(grid, opts.threads, rows, [&](const TorusPoint& z) {
    const PsiDensity d = psi_density(P, z, step);
    const int rank = psi_rank(P, z, step, rank_rel);
    std::ostringstream row;
    for (int j = 0; j < m; ++j) row << (j ? "," : "") << fmt(z.rho[j]);
    row << "," << region_name(d.region) << "," << d.face_id << "," << rank
        << "\n";
    return row.str();
  });
  for (const auto& r : rows) os << r;
  write_output(opts, os.str());
  return 0;
}

int run_psi_bk_check(const Options& opts) {
  auto P = load_polytope(opts);
  if (opts.resolution < 2) throw ConfigError("resolution must be at least 2");
  const BkVolume bk = bk_volume_check(P, opts.resolution);
  const double exact = bk.exact.to_double();
  std::ostringstream os;
  os << header(opts)
     << "m,p,resolution,numeric,exact,exact_value,abs_error,rel_error\n";
  os << P.ambient_dim() << "," << P.degree_bound() << "," << opts.resolution
     << "," << fmt(bk.numeric) << "," << bk.exact.str() << "," << fmt(exact)
     << "," << fmt(std::abs(bk.numeric - exact)) << ","
     << fmt(std::abs(bk.numeric - exact) / std::max(std::abs(exact), 1e-300))
     << "\n";
  write_output(opts, os.str());
  return 0;
}

int run_ensemble_m1(const Options& opts) {
  auto P = load_polytope(opts);
  if (P.ambient_dim() != 1) {
    throw ConfigError("ensemble m1 needs a one-dimensional polytope");
  }
  if (opts.N < 1) throw ConfigError("N must be positive");
  if (opts.samples < 1) throw ConfigError("samples must be positive");
  const EnsembleStats stats =
      empirical_zero_stats(P, opts.N, opts.samples, opts.seed);
  std::ostringstream os;
  os << header(opts);
  os << "# allowed_fraction " << fmt(stats.allowed_fraction) << "\n";
  os << "# se_allowed_fraction " << fmt(stats.se_allowed_fraction) << "\n";
  os << "# total_roots " << stats.total_roots << "\n";
  os << "# resampled " << stats.resampled << "\n";
  os << "# distribution_error "
     << fmt(histogram_distribution_error(stats.histogram)) << "\n";
  os << "bin_center,empirical_density,predicted_density\n";
  for (std::size_t b = 0; b < stats.histogram.empirical.size(); ++b) {
    const double center = (static_cast<double>(b) + 0.5) *
                          stats.histogram.bin_width;
    os << fmt(center) << "," << fmt(stats.histogram.empirical[b]) << ","
       << fmt(stats.histogram.predicted[b]) << "\n";
  }
  write_output(opts, os.str());
  return 0;
}

int run_ensemble_tentacles(const Options& opts) {
  auto P = load_polytope(opts);
  if (opts.N < 1) throw ConfigError("N must be positive");
  if (opts.samples < 1) throw ConfigError("samples must be positive");
  const double fraction = tentacle_allowed_fraction(
      P, opts.facet_index, opts.N, opts.samples, opts.seed);
  std::ostringstream os;
  os << header(opts) << "facet_index,N,samples,allowed_fraction\n";
  os << opts.facet_index << "," << opts.N << "," << opts.samples << ","
     << fmt(fraction) << "\n";
  write_output(opts, os.str());
  return 0;
}

int dispatch(const Options& opts) {
  if (opts.command == "polytope info") return run_polytope_info(opts);
  if (opts.command == "polytope ehrhart") return run_polytope_ehrhart(opts);
  if (opts.command == "bp grid") return run_bp_grid(opts);
  if (opts.command == "region grid") return run_region_grid(opts);
  if (opts.command == "szego converge") return run_szego_converge(opts);
  if (opts.command == "szego mass-grid") return run_szego_mass_grid(opts);
  if (opts.command == "character table") return run_character_table(opts);
  if (opts.command == "character todd1d") return run_character_todd1d(opts);
  if (opts.command == "psi grid") return run_psi_grid(opts);
  if (opts.command == "psi rank-map") return run_psi_rank_map(opts);
  if (opts.command == "psi bk-check") return run_psi_bk_check(opts);
  if (opts.command == "ensemble m1") return run_ensemble_m1(opts);
  if (opts.command == "ensemble tentacles") return run_ensemble_tentacles(opts);
  throw ConfigError("unknown command: " + opts.command);
}

}  // namespace

int main(int argc, char** argv) {
  Options opts;
  std::set<std::string> cli_set;

  CLI::App app{"Toric polytope zero-current toolkit"};
  app.require_subcommand(1);

  // Registers the shared flags on a leaf subcommand and records which ones
  // the command line set explicitly, so config files never override them.
  auto add_common = [&](CLI::App* cmd, const std::string& name) {
    cmd->add_option("--config", opts.config_path,
                    "JSON experiment config; explicit flags win");
    cmd->add_option("--polytope", opts.polytope_path, "polytope JSON file")
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", opts.out_path, "output path (default stdout)");
    cmd->add_option("--threads", opts.threads,
                    "worker threads (env POLYZERO_THREADS)");
    cmd->callback([&opts, &cli_set, cmd, name] {
      opts.command = name;
      for (const auto* o : cmd->get_options()) {
        if (o->count() == 0) continue;
        const std::string n = o->get_name();
        if (n == "--polytope") cli_set.insert("polytope_path");
        if (n == "--out") cli_set.insert("out_path");
        if (n == "--threads") cli_set.insert("threads");
        if (n == "--rho-min") cli_set.insert("rho_min");
        if (n == "--rho-max") cli_set.insert("rho_max");
        if (n == "--steps") cli_set.insert("steps");
        if (n == "--N") cli_set.insert("N");
        if (n == "--N-list") cli_set.insert("N_list");
        if (n == "--seed") cli_set.insert("seed");
        if (n == "--samples") cli_set.insert("samples");
        if (n == "--facet") cli_set.insert("facet_index");
        if (n == "--resolution") cli_set.insert("resolution");
        if (n == "--order") cli_set.insert("order");
        if (n == "--a") cli_set.insert("a");
        if (n == "--b") cli_set.insert("b");
        if (n == "--w-re") cli_set.insert("w_re");
        if (n == "--w-im") cli_set.insert("w_im");
      }
    });
  };
  auto add_grid = [&](CLI::App* cmd) {
    cmd->add_option("--rho-min", opts.rho_min, "grid lower bound per axis");
    cmd->add_option("--rho-max", opts.rho_max, "grid upper bound per axis");
    cmd->add_option("--steps", opts.steps, "grid samples per axis");
  };
  auto add_tolerances = [&](CLI::App* cmd) {
    cmd->add_option_function<std::vector<std::string>>(
        "--tol",
        [&opts](const std::vector<std::string>& entries) {
          for (const auto& entry : entries) {
            const auto eq = entry.find('=');
            if (eq == std::string::npos) {
              throw CLI::ValidationError("--tol expects name=value");
            }
            opts.tolerances[entry.substr(0, eq)] =
                std::atof(entry.substr(eq + 1).c_str());
          }
        },
        "tolerance override name=value (repeatable)");
  };

  auto* polytope = app.add_subcommand("polytope", "polytope geometry queries");
  polytope->require_subcommand(1);
  add_common(polytope->add_subcommand("info", "vertex and face description"),
             "polytope info");
  add_common(
      polytope->add_subcommand("ehrhart", "exact lattice-count polynomial"),
      "polytope ehrhart");

  auto* bp = app.add_subcommand("bp", "decay exponent of the zero current");
  bp->require_subcommand(1);
  {
    auto* cmd = bp->add_subcommand("grid", "decay data on a log-radius grid");
    add_grid(cmd);
    add_tolerances(cmd);
    add_common(cmd, "bp grid");
  }

  auto* region = app.add_subcommand("region", "allowed-forbidden decomposition");
  region->require_subcommand(1);
  {
    auto* cmd = region->add_subcommand("grid", "region map on a grid");
    add_grid(cmd);
    add_tolerances(cmd);
    add_common(cmd, "region grid");
  }

  auto* szego = app.add_subcommand("szego", "kernel mass and potentials");
  szego->require_subcommand(1);
  {
    auto* cmd = szego->add_subcommand("converge", "potential residuals over N");
    add_grid(cmd);
    add_tolerances(cmd);
    cmd->add_option("--N-list", opts.N_list, "levels to evaluate")
        ->delimiter(',');
    add_common(cmd, "szego converge");
  }
  {
    auto* cmd = szego->add_subcommand("mass-grid", "expected mass surface");
    add_grid(cmd);
    add_tolerances(cmd);
    cmd->add_option("--N", opts.N, "level");
    add_common(cmd, "szego mass-grid");
  }

  auto* character = app.add_subcommand("character", "torus character sums");
  character->require_subcommand(1);
  {
    auto* cmd = character->add_subcommand("table", "character values over N");
    cmd->add_option("--N-list", opts.N_list, "levels to evaluate")
        ->delimiter(',');
    cmd->add_option("--w-re", opts.w_re, "weight real parts")->delimiter(',');
    cmd->add_option("--w-im", opts.w_im, "weight imaginary parts")
        ->delimiter(',');
    add_common(cmd, "character table");
  }
  {
    auto* cmd = character->add_subcommand(
        "todd1d", "corrected segment sum against the exact one");
    cmd->add_option("--a", opts.seg_a, "segment lower endpoint");
    cmd->add_option("--b", opts.seg_b, "segment upper endpoint");
    cmd->add_option("--N", opts.N, "level");
    cmd->add_option("--w-re", opts.w_re, "weight real part")->delimiter(',');
    cmd->add_option("--w-im", opts.w_im, "weight imaginary part")
        ->delimiter(',');
    cmd->add_option("--order", opts.order, "highest retained series degree");
    add_common(cmd, "character todd1d");
  }

  auto* psi = app.add_subcommand("psi", "zero-current density");
  psi->require_subcommand(1);
  {
    auto* cmd = psi->add_subcommand("grid", "density matrices on a grid");
    add_grid(cmd);
    add_tolerances(cmd);
    add_common(cmd, "psi grid");
  }
  {
    auto* cmd = psi->add_subcommand("rank-map", "density rank on a grid");
    add_grid(cmd);
    add_tolerances(cmd);
    add_common(cmd, "psi rank-map");
  }
  {
    auto* cmd = psi->add_subcommand("bk-check",
                                    "total density mass against the exact "
                                    "lattice volume");
    cmd->add_option("--resolution", opts.resolution, "base grid resolution");
    add_common(cmd, "psi bk-check");
  }

  auto* ensemble = app.add_subcommand("ensemble", "random section statistics");
  ensemble->require_subcommand(1);
  {
    auto* cmd = ensemble->add_subcommand("m1", "univariate zero ensemble");
    cmd->add_option("--N", opts.N, "level");
    cmd->add_option("--samples", opts.samples, "number of draws");
    cmd->add_option("--seed", opts.seed, "base seed");
    add_common(cmd, "ensemble m1");
  }
  {
    auto* cmd = ensemble->add_subcommand("tentacles",
                                         "induced facet ensemble statistics");
    cmd->add_option("--facet", opts.facet_index,
                    "facet index: 0 is the diagonal, j >= 1 is {x_j = 0}");
    cmd->add_option("--N", opts.N, "level");
    cmd->add_option("--samples", opts.samples, "number of draws");
    cmd->add_option("--seed", opts.seed, "base seed");
    add_common(cmd, "ensemble tentacles");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (!opts.config_path.empty()) apply_config_file(opts, cli_set);
    return dispatch(opts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidPolytopeError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
