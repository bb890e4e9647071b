#include "polyzero/szego.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>

#include "polyzero/errors.hpp"

namespace polyzero {

namespace {

constexpr long long kSimplexGuard = 10000000;
constexpr long long kMaterializeLimit = 200000;

struct CacheEntry {
  long long count = 0;
  std::shared_ptr<const std::vector<LatticeVector>> points;  // may be null
};

std::shared_mutex g_cache_mu;
std::map<std::string, CacheEntry> g_cache;

std::string cache_key(const LatticePolytope& P, long long N) {
  return P.to_json() + "#" + std::to_string(N);
}

// #(N p Sigma) = prod_{j=1}^m (Np + j) / j, exact.
long long ambient_simplex_count(int m, long long Np) {
  __int128 c = 1;
  for (int j = 1; j <= m; ++j) c = c * (Np + j) / j;
  if (c > (__int128)4 * kSimplexGuard) return 4 * kSimplexGuard;
  return static_cast<long long>(c);
}

void check_guard(const LatticePolytope& P, long long N) {
  if (ambient_simplex_count(P.ambient_dim(), N * P.degree_bound()) >
      kSimplexGuard)
    throw EnumerationLimitError(
        "kernel enumeration: ambient simplex count exceeds 10^7");
}

CacheEntry get_entry(const LatticePolytope& P, long long N) {
  const std::string key = cache_key(P, N);
  {
    std::shared_lock lk(g_cache_mu);
    auto it = g_cache.find(key);
    if (it != g_cache.end()) return it->second;
  }
  CacheEntry e;
  if (ambient_simplex_count(P.ambient_dim(), N * P.degree_bound()) <=
      kMaterializeLimit) {
    auto pts = std::make_shared<std::vector<LatticeVector>>(P.lattice_points(N));
    e.count = static_cast<long long>(pts->size());
    e.points = pts;
  } else {
    e.count = P.count_lattice_points(N);
  }
  std::unique_lock lk(g_cache_mu);
  g_cache.emplace(key, e);
  return e;
}

// Streaming log-sum-exp accumulator.
struct LogSum {
  double peak = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  void add(double t) {
    if (t <= peak) {
      sum += std::exp(t - peak);
    } else {
      sum = sum * std::exp(peak - t) + 1.0;
      peak = t;
    }
  }
  double value() const {
    if (!std::isfinite(peak)) return peak;
    return peak + std::log(sum);
  }
};

}  // namespace

double log_szego_diag(const LatticePolytope& P, long long N,
                      const TorusPoint& z) {
  const int m = P.ambient_dim();
  if (z.dim() != m) throw DomainError("kernel: point dimension mismatch");
  if (N < 1) throw DomainError("kernel: level must be positive");
  check_guard(P, N);
  const long long Np = N * P.degree_bound();
  const double L = log1p_norm2(z.rho);
  const double lg_np = std::lgamma(static_cast<double>(Np) + 1.0);

  LogSum acc;
  auto term = [&](const LatticeVector& a) {
    long long asum = 0;
    double t = lg_np - static_cast<double>(Np) * L;
    for (int j = 0; j < m; ++j) {
      const long long aj = a[static_cast<size_t>(j)];
      asum += aj;
      t -= std::lgamma(static_cast<double>(aj) + 1.0);
      t += 2.0 * static_cast<double>(aj) * z.rho[static_cast<size_t>(j)];
    }
    t -= std::lgamma(static_cast<double>(Np - asum) + 1.0);
    acc.add(t);
  };
  auto e = get_entry(P, N);
  if (e.points) {
    for (const auto& a : *e.points) term(a);
  } else {
    P.for_each_lattice_point(N, term);
  }

  double pre = 0.0;
  for (int j = 1; j <= m; ++j)
    pre += std::log(static_cast<double>(Np + j));
  return pre + acc.value();
}

double log_point_count(const LatticePolytope& P, long long N) {
  check_guard(P, N);
  return std::log(static_cast<double>(get_entry(P, N).count));
}

double mass_density(const LatticePolytope& P, long long N,
                    const TorusPoint& z) {
  return std::exp(log_szego_diag(P, N, z) - log_point_count(P, N));
}

SzegoEval szego_eval(const LatticePolytope& P, long long N,
                     const TorusPoint& z) {
  SzegoEval ev;
  ev.N = N;
  ev.log_pi = log_szego_diag(P, N, z);
  ev.log_count = log_point_count(P, N);
  ev.mass = std::exp(ev.log_pi - ev.log_count);
  const double p = static_cast<double>(P.degree_bound());
  const double L = log1p_norm2(z.rho);
  ev.u_N = (ev.log_pi - ev.log_count) / static_cast<double>(N) + p * L;
  ev.u_inf = p * L - solve_normal_data(P, z).b;
  ev.residual = ev.u_N - ev.u_inf;
  return ev;
}

std::vector<SzegoEval> convergence_profile(const LatticePolytope& P,
                                           const std::vector<long long>& Ns,
                                           const TorusPoint& z) {
  std::vector<SzegoEval> out;
  out.reserve(Ns.size());
  for (long long N : Ns) out.push_back(szego_eval(P, N, z));
  return out;
}

void clear_szego_cache() {
  std::unique_lock lk(g_cache_mu);
  g_cache.clear();
}

}  // namespace polyzero
