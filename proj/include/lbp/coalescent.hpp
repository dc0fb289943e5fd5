#pragma once

#include <Eigen/Dense>
#include <string>
#include <variant>
#include <vector>

#include "lbp/dynamics.hpp"
#include "lbp/random.hpp"

namespace lbp {

/// Lambda = mass * delta_0 (Kingman).
struct PointMassAtZero {
  double mass = 1.0;
};

/// Lambda(du) = scale * (1-u)^(alpha-1) u^(1-alpha) du on (0, 1), alpha in (1, 2).
struct BetaScaled {
  double alpha = 1.5;
  double scale = 1.0;
};

/// Lambda(du) = scale * du on (0, 1) (Bolthausen-Sznitman).
struct UniformScaled {
  double scale = 1.0;
};

/// Finite measure on [0, 1] driving a Lambda-coalescent, restricted to the
/// closed-form families that appear as limits of the particle system.
class LambdaMeasure {
 public:
  using Variant = std::variant<PointMassAtZero, BetaScaled, UniformScaled>;

  explicit LambdaMeasure(Variant v);

  static LambdaMeasure kingman(double mass) { return LambdaMeasure(PointMassAtZero{mass}); }
  static LambdaMeasure beta(double alpha, double scale) { return LambdaMeasure(BetaScaled{alpha, scale}); }
  static LambdaMeasure uniform(double scale) { return LambdaMeasure(UniformScaled{scale}); }

  const Variant& variant() const { return v_; }
  double total_mass() const { return total_mass_; }
  bool has_atom_at_zero() const { return std::holds_alternative<PointMassAtZero>(v_); }

  /// "kingman:<mass>", "beta:<alpha>:<scale>" or "uniform:<scale>".
  std::string describe() const;

 private:
  Variant v_;
  double total_mass_ = 0.0;
};

LambdaMeasure parse_lambda(const std::string& text);

/// Limit Lambda for the given model: Kingman(1/N_e), Beta(alpha, b p0 alpha / n*^(alpha-1))
/// or Uniform(b p0), according to the regime.
LambdaMeasure lambda_from_model(const ModelParams& params, const RegimeScaling& scaling);

/// lambda_{n,k} = int u^(k-2) (1-u)^(n-k) Lambda(du), 2 <= k <= n.
double merge_rate(int n, int k, const LambdaMeasure& lambda);

/// Generator of the block-counting chain on {1..n}; row/column j-1 is state j.
Eigen::MatrixXd block_generator(int n, const LambdaMeasure& lambda);

inline constexpr int kMaxDenseBlocks = 64;

/// P(|pi_t| = j), j = 1..n (index j-1), starting from n blocks.
std::vector<double> block_count_distribution(int n, const LambdaMeasure& lambda, double t);

/// Precomputed jump tables of the block-counting chain.
class BlockCountingChain {
 public:
  struct Jump {
    double time;
    int blocks;
  };

  BlockCountingChain(int n, const LambdaMeasure& lambda);

  int sample_size() const { return n_; }

  /// Number of blocks at time `horizon`.
  int simulate_final(double horizon, Rng& rng) const;

  /// Path starting with (0, n), one entry per merger before `horizon`.
  std::vector<Jump> simulate_path(double horizon, Rng& rng) const;

  /// Draws the number k of blocks merging out of j (>= 2).
  int draw_merger(int j, Rng& rng) const;
  double exit_rate(int j) const { return exit_rate_[j]; }

 private:
  int n_;
  std::vector<double> exit_rate_;
  std::vector<std::vector<double>> cumulative_;  // [j][k-2], normalized
};

std::vector<BlockCountingChain::Jump> simulate_block_count(int n, const LambdaMeasure& lambda, double horizon,
                                                           Rng& rng);

struct Partition {
  int n = 0;
  std::vector<std::vector<int>> blocks;  // labels 1..n

  /// Disjoint nonempty blocks covering {1..n}.
  bool valid() const;
};

/// Lambda-coalescent partition at `horizon`, started from singletons.
Partition simulate_partition(int n, const LambdaMeasure& lambda, double horizon, Rng& rng);

}  // namespace lbp
