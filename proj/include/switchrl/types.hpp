#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace switchrl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Tolerance for checking that probability rows sum to one.
inline constexpr double kRowSumTol = 1e-12;

/// Tolerance below which two policy rows count as identical for indicator costs.
inline constexpr double kRowEqualTol = 1e-12;

/// Tolerance for transport-plan marginal checks.
inline constexpr double kMarginalTol = 1e-9;

/// Deterministic random stream. All sampling goes through explicit
/// instances of this class so that identical seeds reproduce runs bit
/// for bit (mt19937_64 output is fully specified by the standard).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform draw in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    /// Inverse-CDF draw from an unnormalized nonnegative weight vector.
    template <typename Derived>
    int sample(const Eigen::DenseBase<Derived>& weights) {
        const double total = weights.sum();
        double u = uniform01() * total;
        const auto n = weights.size();
        for (Eigen::Index i = 0; i + 1 < n; ++i) {
            u -= weights(i);
            if (u < 0.0) return static_cast<int>(i);
        }
        return static_cast<int>(n - 1);
    }

    std::uint64_t raw() { return gen_(); }

    /// Derived seed for a child stream (splitmix64 of seed ^ stream id).
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t z = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace switchrl
