#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "lbp/cli.hpp"
#include "lbp/error.hpp"
#include "lbp/flemingviot.hpp"
#include "lbp/kernels.hpp"
#include "lbp/special.hpp"
#include "lbp/verify.hpp"

#ifndef LBP_GOLDEN_DIR
#define LBP_GOLDEN_DIR "data/golden"
#endif

namespace lbp::cli {
namespace {

namespace fs = std::filesystem;

// A check returns an empty string on success, otherwise the failure detail.
using Check = std::function<std::string()>;

std::string near(double got, double want, double rel_tol) {
  const double err = std::abs(got - want);
  if (err <= rel_tol * std::max(std::abs(want), 1e-300)) return {};
  return fmt::format("got {:.17g}, want {:.17g} (rel err {:.3g} > {:.3g})", got, want, err / std::abs(want), rel_tol);
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path, const std::vector<std::string>& header) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) cols.push_back(tok);
    if (first) {
      if (cols != header) throw std::runtime_error(path.filename().string() + ": unexpected header");
      first = false;
      continue;
    }
    if (cols.size() != header.size()) throw std::runtime_error(path.filename().string() + ": malformed row '" + line + "'");
    rows.push_back(std::move(cols));
  }
  if (rows.empty()) throw std::runtime_error(path.filename().string() + ": no rows");
  return rows;
}

std::string check_golden_rates(const fs::path& dir) {
  const auto rows = read_csv(dir / "beta_rates.csv", {"family", "alpha", "scale", "n", "k", "rate"});
  for (const auto& r : rows) {
    const double alpha = std::stod(r[1]);
    const double scale = std::stod(r[2]);
    const LambdaMeasure lambda = r[0] == "uniform" ? LambdaMeasure::uniform(scale) : LambdaMeasure::beta(alpha, scale);
    const int n = std::stoi(r[3]);
    const int k = std::stoi(r[4]);
    if (auto e = near(merge_rate(n, k, lambda), std::stod(r[5]), 1e-8); !e.empty()) {
      return fmt::format("{} n={} k={}: {}", lambda.describe(), n, k, e);
    }
  }
  return {};
}

std::map<std::string, double> library_constants() {
  std::map<std::string, double> v;
  const OffspringLaw z15 = OffspringLaw::zeta(1.5);
  const OffspringLaw z1 = OffspringLaw::zeta(1.0);
  v["zeta_2p5"] = special::zeta(2.5);
  v["zeta1p5_p0"] = *z15.p0_tail();
  v["zeta1p5_mean"] = z15.moments().mean.value;
  v["zeta1_p0"] = *z1.p0_tail();
  v["zeta1_p1"] = z1.probability(1);
  double head = 0.0;
  for (std::uint64_t k = 1; k <= 100; ++k) head += z1.probability(k);
  v["zeta1_tail_gt100"] = 1.0 - head;
  v["zeta1_pgf_0p9"] = z1.pgf(0.9);
  v["zeta1p5_pgf_0p5"] = z15.pgf(0.5);

  ModelParams p;
  p.b = 1.0;
  p.d = 1.0;
  p.c = 1.0;
  p.K = 500.0;
  p.law = std::make_shared<const OffspringLaw>(z15);
  p.regime = Regime::stable(1.5);
  const RegimeScaling s = regime_scaling(p);
  const LambdaMeasure lambda = lambda_from_model(p, s);
  v["stable_b1_n_star"] = s.n_star;
  v["stable_b1_scale"] = std::get<BetaScaled>(lambda.variant()).scale;
  v["stable_b1_total_mass"] = lambda.total_mass();

  const TruncatedLambda tr = TruncatedLambda::make(LambdaMeasure::beta(1.5, 1.0), 1e-3);
  v["beta1p5_jump_rate_eps1e-3"] = tr.jump_rate;
  v["beta1p5_small_mass_eps1e-3"] = tr.diffusion_rate;

  const LambdaMeasure uni = LambdaMeasure::uniform(6.0 / (std::numbers::pi * std::numbers::pi));
  const auto dist = block_count_distribution(3, uni, 0.5);
  for (int j = 1; j <= 3; ++j) v[fmt::format("uniform_n3_t0p5_p{}", j)] = dist[j - 1];
  v["uniform_n3_t0p5_dual_x0p5"] = dual_moment(uni, 0.5, 3, 0.5);
  v["neveu_heterozygosity_t1"] = heterozygosity_theory(uni, 0.5, 1.0);
  v["kingman4_heterozygosity_t0p25"] = heterozygosity_theory(LambdaMeasure::kingman(4.0), 0.5, 0.25);
  return v;
}

std::string check_golden_constants(const fs::path& dir) {
  const auto rows = read_csv(dir / "constants.csv", {"name", "value", "rel_tol"});
  const auto lib = library_constants();
  std::set<std::string> seen;
  for (const auto& r : rows) {
    const auto it = lib.find(r[0]);
    if (it == lib.end()) return "unknown constant '" + r[0] + "'";
    seen.insert(r[0]);
    if (auto e = near(it->second, std::stod(r[1]), std::stod(r[2])); !e.empty()) return r[0] + ": " + e;
  }
  for (const auto& [name, value] : lib) {
    if (!seen.count(name)) return "constant '" + name + "' missing from golden file";
  }
  return {};
}

std::string check_kernels() {
  const kernels::KernelSet* simd = kernels::avx2_kernels();
  if (simd == nullptr) return {};
  const kernels::KernelSet& ref = kernels::scalar_kernels();
  Rng rng(7);
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 64u, 1001u}) {
    std::vector<double> x(n), z(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = i % 13 == 0 ? 0.0 : i % 17 == 0 ? 1.0 : rng.uniform();
      z[i] = rng.normal();
    }
    auto xa = x, xb = x;
    ref.wf_step(xa.data(), z.data(), 0.01, n);
    simd->wf_step(xb.data(), z.data(), 0.01, n);
    if (xa != xb) return fmt::format("wf_step differs at n={}", n);
    std::vector<double> sa(12, 0.0), qa(12, 0.0), sb(12, 0.0), qb(12, 0.0);
    ref.power_sums(x.data(), n, 12, sa.data(), qa.data());
    simd->power_sums(x.data(), n, 12, sb.data(), qb.data());
    if (sa != sb || qa != qb) return fmt::format("power_sums differs at n={}", n);
    if (ref.weighted_power_sum(x.data(), n, 0.9, 1) != simd->weighted_power_sum(x.data(), n, 0.9, 1)) {
      return fmt::format("weighted_power_sum differs at n={}", n);
    }
  }
  return {};
}

std::vector<std::pair<std::string, Check>> checks(const fs::path& golden) {
  std::vector<std::pair<std::string, Check>> c;
  c.emplace_back("golden_beta_rates", [golden] { return check_golden_rates(golden); });
  c.emplace_back("golden_constants", [golden] { return check_golden_constants(golden); });
  c.emplace_back("kernel_equivalence", check_kernels);
  c.emplace_back("kingman_rates", [] {
    const auto l = LambdaMeasure::kingman(2.5);
    for (int n = 2; n <= 10; ++n) {
      if (merge_rate(n, 2, l) != 2.5) return fmt::format("lambda_{{{},2}} != mass", n);
      for (int k = 3; k <= n; ++k) {
        if (merge_rate(n, k, l) != 0.0) return fmt::format("lambda_{{{},{}}} != 0", n, k);
      }
    }
    return std::string();
  });
  c.emplace_back("uniform_rate_3_2", [] { return near(merge_rate(3, 2, LambdaMeasure::uniform(3.0)), 1.5, 1e-14); });
  c.emplace_back("beta_rate_4_3", [] {
    return near(merge_rate(4, 3, LambdaMeasure::beta(1.5, 1.0)), std::numbers::pi / 16.0, 1e-13);
  });
  c.emplace_back("rate_consistency", [] {
    for (const auto& l : {LambdaMeasure::beta(1.2, 1.0), LambdaMeasure::beta(1.8, 2.0), LambdaMeasure::uniform(1.0)}) {
      for (int n = 2; n < 20; ++n) {
        for (int k = 2; k <= n; ++k) {
          const double rhs = merge_rate(n + 1, k, l) + merge_rate(n + 1, k + 1, l);
          if (auto e = near(merge_rate(n, k, l), rhs, 1e-10); !e.empty()) return l.describe() + ": " + e;
        }
      }
    }
    return std::string();
  });
  c.emplace_back("block_distribution_normalized", [] {
    for (const auto& l : {LambdaMeasure::kingman(1.0), LambdaMeasure::beta(1.5, 1.0), LambdaMeasure::uniform(1.0)}) {
      const auto p = block_count_distribution(10, l, 0.3);
      double sum = 0.0;
      for (double q : p) {
        if (q < 0.0) return l.describe() + ": negative probability";
        sum += q;
      }
      if (auto e = near(sum, 1.0, 1e-12); !e.empty()) return l.describe() + ": " + e;
    }
    return std::string();
  });
  c.emplace_back("dual_kingman_n2", [] {
    const double t = 0.7, x = 0.3, lam = 2.0;
    const double want = x * x * std::exp(-lam * t) + x * (1.0 - std::exp(-lam * t));
    return near(dual_moment(LambdaMeasure::kingman(lam), t, 2, x), want, 1e-12);
  });
  c.emplace_back("dual_at_time_zero", [] {
    return near(dual_moment(LambdaMeasure::beta(1.5, 1.0), 0.0, 5, 0.4), std::pow(0.4, 5), 1e-14);
  });
  c.emplace_back("heterozygosity_at_time_zero", [] {
    return near(heterozygosity_theory(LambdaMeasure::uniform(1.0), 0.3, 0.0), 0.21, 1e-15);
  });
  c.emplace_back("compare_boundary", [] {
    const auto a = compare(MonteCarloEstimate{0.5, 0.01, 100}, 0.5);
    const auto b = compare(MonteCarloEstimate{0.53, 0.01, 100}, 0.5);
    const auto h = compare(MonteCarloEstimate{0.6, 0.0, 100}, 0.5);
    if (!(a.pass && a.z_score == 0.0)) return std::string("z=0 case");
    if (!b.pass || std::abs(b.z_score - 3.0) > 1e-9) return std::string("z=3 boundary case");
    if (h.pass || !h.hard_fail) return std::string("zero-SE case");
    return std::string();
  });
  c.emplace_back("lfv_fixes_one", [] {
    Rng rng(3);
    const auto path = simulate_lfv(LambdaMeasure::beta(1.5, 1.0), 1.0, 0.2, 1e-2, 1e-3, rng);
    for (const auto& r : path.records) {
      if (r.x != 1.0) return fmt::format("x={} at t={}", r.x, r.scaled_time);
    }
    return std::string();
  });
  c.emplace_back("seed_streams_distinct", [] {
    std::set<std::pair<std::uint64_t, std::uint64_t>> seen;
    for (std::uint64_t i = 0; i < 10000; ++i) {
      Rng r = derive_stream(42, i);
      const std::uint64_t a = r();
      const std::uint64_t b = r();
      if (!seen.emplace(a, b).second) return fmt::format("collision at index {}", i);
    }
    return std::string();
  });
  c.emplace_back("simulate_deterministic", [] {
    ModelParams p;
    p.b = 2.0;
    p.d = 1.0;
    p.c = 1.0;
    p.K = 50.0;
    const double one[1] = {1.0};
    p.law = std::make_shared<const OffspringLaw>(OffspringLaw::explicit_pmf(one));
    p.regime = Regime::finite_variance();
    const double fr[2] = {0.5, 0.5};
    const auto init = equilibrium_state(regime_scaling(p), fr);
    const double obs[3] = {0.1, 0.2, 0.5};
    std::ostringstream a, b;
    for (auto* os : {&a, &b}) {
      Rng rng = derive_stream(9, 0);
      write_trajectory_csv(*os, simulate(p, init, 0.5, obs, rng), false, true);
    }
    return a.str() == b.str() ? std::string() : std::string("outputs differ");
  });
  return c;
}

}  // namespace

int cmd_selftest(const Options& opt, std::ostream& log) {
  const fs::path golden = opt.golden_dir.empty() ? fs::path(LBP_GOLDEN_DIR) : opt.golden_dir;
  const auto start = std::chrono::steady_clock::now();
  std::size_t failed = 0;
  const auto list = checks(golden);
  for (const auto& [name, fn] : list) {
    std::string detail;
    try {
      detail = fn();
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    if (detail.empty()) {
      log << "PASS " << name << '\n';
    } else {
      log << "FAIL " << name << ": " << detail << '\n';
      ++failed;
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  log << fmt::format("selftest: {}/{} passed in {:.2f} s (kernels: {})\n", list.size() - failed, list.size(), secs,
                     kernels::active().name);
  return failed == 0 ? kExitOk : kExitCheckFailed;
}

}  // namespace lbp::cli
