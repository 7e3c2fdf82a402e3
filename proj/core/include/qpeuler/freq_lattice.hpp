#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

namespace qpeuler {

/// Lattice index m in Z^M (length M).
using ModeIndex = std::vector<std::int32_t>;

/// Linear map Omega : R^n -> R^M of full rank n (M >= n >= 1).
/// Carries the Fourier exponents Lambda_m = 2*pi*Omega^T m (radians per unit
/// length); injectivity of m -> Lambda_m is the non-resonance condition.
class FrequencyMatrix {
public:
  /// omega is M x n; throws ConfigError on shape or rank deficiency
  /// (smallest singular value <= 1e-12 times the largest).
  explicit FrequencyMatrix(Eigen::MatrixXd omega);

  /// The (n+1) x n matrix [I_n; omega_unit^T]. Requires |omega_unit| = 1
  /// within 1e-12. Non-resonant iff (omega_1,...,omega_n,1) is linearly
  /// independent over the integers; never resonant detection here, see
  /// check_nonresonance for the truncated empirical test.
  static FrequencyMatrix canonical(int n, const Eigen::VectorXd& omega_unit);

  int n() const { return static_cast<int>(omega_.cols()); }
  int M() const { return static_cast<int>(omega_.rows()); }
  const Eigen::MatrixXd& matrix() const { return omega_; }

  /// Lambda_m = 2*pi*Omega^T m.
  Eigen::VectorXd lambda(const ModeIndex& m) const;

  /// Membership test for the translation lattice {gamma : Omega*gamma in Z^M}:
  /// every component of Omega*gamma within tol of an integer.
  bool lattice_translation(const Eigen::VectorXd& gamma, double tol = 1e-12) const;

private:
  Eigen::MatrixXd omega_;  // M x n
};

/// Symmetric truncation box { m in Z^M : |m|_inf <= K } with per-mode data.
/// Modes are enumerated lexicographically (first component most significant,
/// each component ascending from -K to K); the enumeration position is the
/// mode's "ordinal". The box is closed under m -> -m and the ordinal of -m is
/// size()-1-ordinal(m).
class ModeSet {
public:
  /// Throws ConfigError if (2K+1)^M exceeds budget or K < 0.
  static std::shared_ptr<const ModeSet> build(FrequencyMatrix omega, int K,
                                              std::int64_t budget = 10'000'000);

  const FrequencyMatrix& omega() const { return omega_; }
  int K() const { return K_; }
  int n() const { return omega_.n(); }
  int M() const { return omega_.M(); }
  std::int64_t size() const { return size_; }

  /// Ordinal of m, or -1 if any |m_j| > K or m has the wrong length.
  std::int64_t ordinal(const ModeIndex& m) const;
  ModeIndex mode(std::int64_t ordinal) const;
  std::int64_t negated(std::int64_t ordinal) const { return size_ - 1 - ordinal; }
  std::int64_t zero_ordinal() const { return (size_ - 1) / 2; }

  double lambda_component(std::int64_t ordinal, int k) const {
    return lambda_soa_[static_cast<std::size_t>(k)][static_cast<std::size_t>(ordinal)];
  }
  Eigen::VectorXd lambda(std::int64_t ordinal) const;
  double lambda_norm_sq(std::int64_t ordinal) const {
    return lambda_sq_[static_cast<std::size_t>(ordinal)];
  }
  /// |m|^2 (lattice Euclidean norm squared).
  double mode_norm_sq(std::int64_t ordinal) const;
  /// m in I_bullet, i.e. |Lambda_m| <= 1 (inclusive; ties to bullet).
  bool bullet(std::int64_t ordinal) const {
    return bullet_[static_cast<std::size_t>(ordinal)] != 0;
  }
  std::int64_t bullet_count() const { return bullet_count_; }
  double max_lambda_norm() const { return max_lambda_norm_; }

  /// Raw per-mode arrays for kernels: component k of Lambda over all ordinals.
  const std::vector<double>& lambda_array(int k) const {
    return lambda_soa_[static_cast<std::size_t>(k)];
  }
  const std::vector<double>& lambda_sq_array() const { return lambda_sq_; }
  const std::vector<std::uint8_t>& bullet_array() const { return bullet_; }

  /// Identity token for per-ModeSet caches (unique per built instance).
  std::uint64_t id() const { return id_; }

private:
  ModeSet(FrequencyMatrix omega, int K);

  FrequencyMatrix omega_;
  int K_;
  std::int64_t size_;
  std::vector<std::int64_t> strides_;        // (2K+1)^{M-1-j}
  std::vector<std::vector<double>> lambda_soa_;  // n arrays of length size_
  std::vector<double> lambda_sq_;
  std::vector<std::uint8_t> bullet_;
  std::int64_t bullet_count_ = 0;
  double max_lambda_norm_ = 0.0;
  std::uint64_t id_;
};

struct NonresonanceReport {
  bool ok = true;
  /// Min over distinct mode pairs of |Lambda_{m'} - Lambda_{m''}|; +inf when
  /// the box has a single mode.
  double min_separation = 0.0;
  ModeIndex worst_a, worst_b;  // a minimizing pair (empty when none exists)
};

/// Truncated non-resonance check: no two distinct modes in ms may have
/// exponents closer than tol. Necessary, not sufficient, for (NC) -- exact
/// irrationality is not machine-decidable on floats. Runs on the difference
/// lattice |d|_inf <= 2K (Lambda_{m'} - Lambda_{m''} = Lambda_{m'-m''}), so it
/// is O((4K+1)^M) rather than O(size^2).
NonresonanceReport check_nonresonance(const ModeSet& ms, double tol = 1e-9);

}  // namespace qpeuler
