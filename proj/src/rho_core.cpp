#include "rhosel/rho_core.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace rhosel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// psi(sqrt(r'/r)) from the two log densities, with the zero-density rules.
double pair_term(double l, double l_prime) {
  const bool z = (l == -kInf), zp = (l_prime == -kInf);
  if (z && zp) return 0.0;
  if (z) return 1.0;
  if (zp) return -1.0;
  return std::tanh(0.25 * (l_prime - l));
}

// Run fn(i) over [0, n) on the requested number of threads. Each index is
// touched exactly once, so results are thread-count independent as long as fn
// writes only to slot i.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const int k = std::max(1, threads);
  if (k == 1 || n < 2048) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    constexpr std::size_t chunk = 256;
    while (true) {
      const std::size_t begin = next.fetch_add(chunk);
      if (begin >= n) break;
      const std::size_t end = std::min(n, begin + chunk);
      for (std::size_t i = begin; i < end; ++i) fn(i);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(k));
  for (int t = 0; t < k; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace

double psi(double x) {
  if (std::isnan(x) || x < 0.0) throw domain_error("psi: x must be in [0, +inf]");
  if (x == kInf) return 1.0;
  return (x - 1.0) / (x + 1.0);
}

double blocked_kahan_sum(const Eigen::Ref<const Eigen::VectorXd>& v) {
  constexpr Eigen::Index block = 1024;
  double total = 0.0, total_c = 0.0;
  for (Eigen::Index b = 0; b < v.size(); b += block) {
    const Eigen::Index end = std::min(v.size(), b + block);
    double s = 0.0, c = 0.0;
    for (Eigen::Index i = b; i < end; ++i) {
      const double y = v(i) - c;
      const double t = s + y;
      c = (t - s) - y;
      s = t;
    }
    const double y = s - total_c;
    const double t = total + y;
    total_c = (t - total) - y;
    total = t;
  }
  return total;
}

double blocked_kahan_sum(const std::vector<double>& v) {
  return blocked_kahan_sum(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
}

double t_statistic_logdens(const Eigen::Ref<const Eigen::VectorXd>& l,
                           const Eigen::Ref<const Eigen::VectorXd>& l_prime) {
  if (l.size() != l_prime.size()) throw domain_error("t_statistic: log-density length mismatch");
  Eigen::VectorXd terms(l.size());
  for (Eigen::Index i = 0; i < l.size(); ++i) terms(i) = pair_term(l(i), l_prime(i));
  return blocked_kahan_sum(terms);
}

Eigen::MatrixXd log_density_matrix(const Dataset& data, const std::vector<Candidate>& cands,
                                   const LawContext& ctx, int threads) {
  const Eigen::Index n = data.n();
  const std::size_t K = cands.size();
  Eigen::MatrixXd L(n, static_cast<Eigen::Index>(K));
  std::atomic<bool> failed{false};
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
    if (failed.load(std::memory_order_relaxed)) return;
    const auto row = data.W.row(static_cast<Eigen::Index>(i)).transpose();
    for (std::size_t k = 0; k < K; ++k) {
      const double gamma = cands[k].eval(row);
      if (std::isnan(gamma)) {
        failed.store(true, std::memory_order_relaxed);
        return;
      }
      L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          log_density(ctx, gamma, data.Y(static_cast<Eigen::Index>(i)));
    }
  });
  if (failed.load()) throw numeric_error("log_density_matrix: candidate evaluated to NaN");
  return L;
}

double t_statistic(const Dataset& data, const Candidate& gamma, const Candidate& gamma_prime,
                   const LawContext& ctx, int threads) {
  const Eigen::Index n = data.n();
  Eigen::VectorXd terms(n);
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t ii) {
    const auto i = static_cast<Eigen::Index>(ii);
    const auto row = data.W.row(i).transpose();
    const double l = log_density(ctx, gamma.eval(row), data.Y(i));
    const double lp = log_density(ctx, gamma_prime.eval(row), data.Y(i));
    terms(i) = pair_term(l, lp);
  });
  return blocked_kahan_sum(terms);
}

double dim_term(double V, double n) {
  if (!(V >= 1.0)) throw domain_error("dim_term: V must be >= 1");
  if (!(n >= 1.0)) throw domain_error("dim_term: n must be >= 1");
  const double logplus = std::max(0.0, std::log(n / V));
  return 1.0e3 * V * (9.11 + logplus);
}

double penalty(const Candidate& cand, const CandidatePool& pool, double n, double scale) {
  if (cand.owners.empty()) throw domain_error("penalty: candidate has no owning model");
  double best = kInf;
  for (std::size_t m : cand.owners) {
    if (m >= pool.models.size()) throw domain_error("penalty: owner index out of range");
    const auto& entry = pool.models[m];
    best = std::min(best, dim_term(entry.V, n) + 4.7 * entry.Delta);
  }
  return scale * 100.0 * best;
}

namespace {

// T for every ordered candidate pair from the shared log-density matrix,
// using antisymmetry: T(j,k) = -T(k,j), T(j,j) = 0.
Eigen::MatrixXd t_matrix(const Eigen::MatrixXd& L, int threads) {
  const auto K = L.cols();
  const auto n = L.rows();
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(K, K);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  pairs.reserve(static_cast<std::size_t>(K) * (K - 1) / 2);
  for (Eigen::Index j = 0; j < K; ++j)
    for (Eigen::Index k = j + 1; k < K; ++k) pairs.emplace_back(j, k);
  parallel_for(pairs.size(), threads, [&](std::size_t idx) {
    const auto [j, k] = pairs[idx];
    Eigen::VectorXd terms(n);
    for (Eigen::Index i = 0; i < n; ++i) terms(i) = pair_term(L(i, j), L(i, k));
    const double t = blocked_kahan_sum(terms);
    T(j, k) = t;
    T(k, j) = -t;
  });
  return T;
}

}  // namespace

double upsilon(const Dataset& data, const Candidate& gamma, const CandidatePool& pool,
               const LawContext& ctx, const SelectionOptions& opt) {
  double best = -kInf;
  for (const auto& other : pool.candidates) {
    const double t = t_statistic(data, gamma, other, ctx, opt.threads);
    best = std::max(best, t - penalty(other, pool, static_cast<double>(data.n()), opt.penalty_scale));
  }
  return best + penalty(gamma, pool, static_cast<double>(data.n()), opt.penalty_scale);
}

SelectionReport select(const Dataset& data, const CandidatePool& pool, const LawContext& ctx,
                       const SelectionOptions& opt) {
  if (pool.candidates.empty()) throw domain_error("select: empty candidate pool");
  const double n = static_cast<double>(data.n());
  const auto K = static_cast<Eigen::Index>(pool.candidates.size());

  const Eigen::MatrixXd L = log_density_matrix(data, pool.candidates, ctx, opt.threads);
  const Eigen::MatrixXd T = t_matrix(L, opt.threads);

  std::vector<double> pens(static_cast<std::size_t>(K));
  for (Eigen::Index k = 0; k < K; ++k)
    pens[static_cast<std::size_t>(k)] = penalty(pool.candidates[static_cast<std::size_t>(k)], pool, n, opt.penalty_scale);

  std::vector<double> ups(static_cast<std::size_t>(K));
  for (Eigen::Index j = 0; j < K; ++j) {
    double best = -kInf;
    for (Eigen::Index k = 0; k < K; ++k)
      best = std::max(best, T(j, k) - pens[static_cast<std::size_t>(k)]);
    ups[static_cast<std::size_t>(j)] = best + pens[static_cast<std::size_t>(j)];
  }

  const double low = *std::min_element(ups.begin(), ups.end());
  std::size_t chosen = 0;
  for (std::size_t j = 0; j < ups.size(); ++j) {
    if (ups[j] <= low + opt.slack) {
      chosen = j;
      break;
    }
  }

  SelectionReport rep;
  rep.chosen_index = chosen;
  rep.chosen_id = pool.candidates[chosen].id;
  rep.slack = opt.slack;
  rep.penalty_scale = opt.penalty_scale;
  rep.upsilon = std::move(ups);
  rep.penalties = std::move(pens);
  rep.certificates = bound_certificate(pool, n, opt.xi);
  return rep;
}

std::vector<ModelCertificate> bound_certificate(const CandidatePool& pool, double n, double xi) {
  std::vector<ModelCertificate> out;
  out.reserve(pool.models.size());
  for (const auto& m : pool.models) {
    ModelCertificate cert;
    cert.model_id = m.id;
    cert.V = m.V;
    cert.Delta = m.Delta;
    cert.Xi = dim_term(m.V, n) / 4.7 + m.Delta;
    cert.bound_term = kRiskC2 * (cert.Xi + 1.49 + xi);
    out.push_back(std::move(cert));
  }
  return out;
}

}  // namespace rhosel
