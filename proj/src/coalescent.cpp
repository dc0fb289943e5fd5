#include "lbp/coalescent.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lbp/error.hpp"
#include "lbp/special.hpp"

namespace lbp {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

LambdaMeasure::LambdaMeasure(Variant v) : v_(v) {
  total_mass_ = std::visit(Overloaded{
                               [](const PointMassAtZero& p) {
                                 if (!(p.mass > 0.0)) throw InvalidParameter("Kingman mass must be positive");
                                 return p.mass;
                               },
                               [](const BetaScaled& p) {
                                 if (!(p.alpha > 1.0 && p.alpha < 2.0)) {
                                   throw InvalidParameter("Beta Lambda needs alpha in (1, 2)");
                                 }
                                 if (!(p.scale > 0.0)) throw InvalidParameter("Beta Lambda scale must be positive");
                                 return p.scale * special::beta(2.0 - p.alpha, p.alpha);
                               },
                               [](const UniformScaled& p) {
                                 if (!(p.scale > 0.0)) throw InvalidParameter("uniform Lambda scale must be positive");
                                 return p.scale;
                               },
                           },
                           v_);
}

std::string LambdaMeasure::describe() const {
  return std::visit(Overloaded{
                        [](const PointMassAtZero& p) { return "kingman:" + fmt(p.mass); },
                        [](const BetaScaled& p) { return "beta:" + fmt(p.alpha) + ":" + fmt(p.scale); },
                        [](const UniformScaled& p) { return "uniform:" + fmt(p.scale); },
                    },
                    v_);
}

LambdaMeasure parse_lambda(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ':')) parts.push_back(tok);
  auto num = [&](std::size_t i) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(parts.at(i), &used);
    } catch (const std::exception&) {
      throw InvalidParameter("Lambda '" + text + "': bad number");
    }
    if (used != parts[i].size()) throw InvalidParameter("Lambda '" + text + "': bad number");
    return v;
  };
  if (parts.size() == 2 && parts[0] == "kingman") return LambdaMeasure::kingman(num(1));
  if (parts.size() == 2 && parts[0] == "uniform") return LambdaMeasure::uniform(num(1));
  if (parts.size() == 3 && parts[0] == "beta") return LambdaMeasure::beta(num(1), num(2));
  throw InvalidParameter("Lambda '" + text + "': expected kingman:<m>, uniform:<s> or beta:<alpha>:<s>");
}

LambdaMeasure lambda_from_model(const ModelParams& params, const RegimeScaling& scaling) {
  params.validate();
  switch (params.regime.kind) {
    case RegimeKind::FiniteVariance:
      return LambdaMeasure::kingman(1.0 / *scaling.effective_size);
    case RegimeKind::Stable: {
      const double a = params.regime.alpha;
      const double p0 = *params.law->p0_tail();
      return LambdaMeasure::beta(a, params.b * p0 * a / std::pow(scaling.n_star, a - 1.0));
    }
    case RegimeKind::Neveu:
      return LambdaMeasure::uniform(params.b * *params.law->p0_tail());
  }
  throw InvalidParameter("lambda_from_model: unknown regime");
}

double merge_rate(int n, int k, const LambdaMeasure& lambda) {
  if (n < 2 || k < 2 || k > n) throw InvalidParameter("merge_rate: need 2 <= k <= n");
  return std::visit(Overloaded{
                        [&](const PointMassAtZero& p) { return k == 2 ? p.mass : 0.0; },
                        [&](const BetaScaled& p) { return p.scale * special::beta(k - p.alpha, n - k + p.alpha); },
                        [&](const UniformScaled& p) { return p.scale * special::beta(k - 1.0, n - k + 1.0); },
                    },
                    lambda.variant());
}

Eigen::MatrixXd block_generator(int n, const LambdaMeasure& lambda) {
  if (n < 1) throw InvalidParameter("block_generator: n must be >= 1");
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  for (int j = 2; j <= n; ++j) {
    double out = 0.0;
    for (int k = 2; k <= j; ++k) {
      const double rate = binomial(j, k) * merge_rate(j, k, lambda);
      q(j - 1, j - k) += rate;
      out += rate;
    }
    q(j - 1, j - 1) = -out;
  }
  return q;
}

std::vector<double> block_count_distribution(int n, const LambdaMeasure& lambda, double t) {
  if (n < 1) throw InvalidParameter("block_count_distribution: n must be >= 1");
  if (n > kMaxDenseBlocks) throw UnsupportedSize("block_count_distribution: n exceeds 64");
  if (!(t >= 0.0)) throw InvalidParameter("block_count_distribution: t must be >= 0");
  std::vector<double> p(n, 0.0);
  if (t == 0.0) {
    p[n - 1] = 1.0;
    return p;
  }
  const Eigen::MatrixXd scaled = block_generator(n, lambda) * t;
  const Eigen::MatrixXd e = scaled.exp();
  for (int j = 0; j < n; ++j) p[j] = std::max(0.0, e(n - 1, j));
  return p;
}

BlockCountingChain::BlockCountingChain(int n, const LambdaMeasure& lambda)
    : n_(n), exit_rate_(n + 1, 0.0), cumulative_(n + 1) {
  if (n < 1) throw InvalidParameter("block counting chain: n must be >= 1");
  for (int j = 2; j <= n; ++j) {
    auto& cum = cumulative_[j];
    cum.resize(j - 1);
    double acc = 0.0;
    for (int k = 2; k <= j; ++k) {
      acc += binomial(j, k) * merge_rate(j, k, lambda);
      cum[k - 2] = acc;
    }
    exit_rate_[j] = acc;
    for (double& c : cum) c /= acc;
    cum.back() = 1.0;
  }
}

int BlockCountingChain::draw_merger(int j, Rng& rng) const {
  const auto& cum = cumulative_[j];
  const double u = rng.uniform();
  const auto it = std::upper_bound(cum.begin(), cum.end(), u);
  return static_cast<int>(it - cum.begin()) + 2;
}

int BlockCountingChain::simulate_final(double horizon, Rng& rng) const {
  int j = n_;
  double t = 0.0;
  while (j > 1) {
    t += rng.exponential(exit_rate_[j]);
    if (t > horizon) break;
    j -= draw_merger(j, rng) - 1;
  }
  return j;
}

std::vector<BlockCountingChain::Jump> BlockCountingChain::simulate_path(double horizon, Rng& rng) const {
  std::vector<Jump> path{{0.0, n_}};
  int j = n_;
  double t = 0.0;
  while (j > 1) {
    t += rng.exponential(exit_rate_[j]);
    if (t > horizon) break;
    j -= draw_merger(j, rng) - 1;
    path.push_back({t, j});
  }
  return path;
}

std::vector<BlockCountingChain::Jump> simulate_block_count(int n, const LambdaMeasure& lambda, double horizon,
                                                           Rng& rng) {
  return BlockCountingChain(n, lambda).simulate_path(horizon, rng);
}

bool Partition::valid() const {
  std::vector<int> seen(static_cast<std::size_t>(n) + 1, 0);
  for (const auto& block : blocks) {
    if (block.empty()) return false;
    for (int label : block) {
      if (label < 1 || label > n || seen[label]++) return false;
    }
  }
  return std::all_of(seen.begin() + 1, seen.end(), [](int s) { return s == 1; });
}

Partition simulate_partition(int n, const LambdaMeasure& lambda, double horizon, Rng& rng) {
  const BlockCountingChain chain(n, lambda);
  Partition part;
  part.n = n;
  for (int i = 1; i <= n; ++i) part.blocks.push_back({i});
  double t = 0.0;
  while (part.blocks.size() > 1) {
    const int j = static_cast<int>(part.blocks.size());
    t += rng.exponential(chain.exit_rate(j));
    if (t > horizon) break;
    const int k = chain.draw_merger(j, rng);
    // Partial Fisher-Yates: move a uniform k-subset of blocks to the back.
    for (int i = 0; i < k; ++i) {
      const auto pick = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(j - i)));
      std::swap(part.blocks[pick], part.blocks[j - 1 - i]);
    }
    auto& target = part.blocks[j - k];
    for (int i = j - k + 1; i < j; ++i) {
      target.insert(target.end(), part.blocks[i].begin(), part.blocks[i].end());
    }
    part.blocks.resize(j - k + 1);
    std::sort(target.begin(), target.end());
  }
  return part;
}

}  // namespace lbp
