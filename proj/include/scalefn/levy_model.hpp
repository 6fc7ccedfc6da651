#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>

#include "scalefn/grid.hpp"
#include "scalefn/grid_calculus.hpp"

namespace scalefn {

// Jump families. Every measure is the reflected one, living on (0, inf).

struct NoJumps {};

/// nu(dy) = y^{-1-alpha} / Gamma(-alpha) dy, alpha in (1, 2), so that the
/// compensated part of psi is exactly beta^alpha.
struct StableJumps {
    double alpha = 1.5;
};

/// nu = rate * law.
struct CompoundPoissonJumps {
    double rate = 1.0;
    MixedDistribution law;
};

/// nu(dy) = scale * e^{-theta y} y^{-1-alpha} dy, alpha in (0, 1) or (1, 2).
struct TemperedStableJumps {
    double alpha = 0.5;
    double theta = 1.0;
    double scale = 1.0;
};

/// nu-bar given on a grid (zero beyond its x_max). Must have exponent > -1,
/// so the jumps have bounded variation.
struct TabulatedTailJumps {
    GridFunction tail;
};

/// nu-bar as a callable; nu-bar-bar is optional and otherwise integrated
/// numerically. `tail_exponent` declares nu-bar ~ x^s near 0 (s > -2).
struct CustomJumps {
    std::function<double(double)> tail;
    std::function<double(double)> integrated_tail;
    double tail_exponent = 0.0;
};

using JumpMeasure = std::variant<NoJumps, StableJumps, CompoundPoissonJumps, TemperedStableJumps,
                                 TabulatedTailJumps, CustomJumps>;

enum class DriftConvention { C, CPrime, CDoublePrime };
enum class Regime { Gaussian, BoundedVariation, UnboundedVariationNoGaussian };

std::string_view regime_name(Regime r) noexcept;

struct DriftConstants {
    std::optional<double> c, c_prime, c_double_prime;
};

/// Pieces of the measure split at z (see truncate_measure).
struct MeasureTruncation {
    GridFunction small_integrated_tail;  // int_x^z (nu-bar(y) - nu-bar(z)) dy, 0 for x >= z
    MixedDistribution large_jumps;       // nu restricted to [z, inf), on the working grid
    double c_double_prime_z = 0.0;       // c - int_[1,z) y nu(dy)
    double mass = 0.0;                   // nu([z, inf))
};

/// Spectrally negative Levy process (drift, Gaussian coefficient, jumps).
///
/// psi(beta) = c beta + sigma2 beta^2 + int (e^{-beta y} - 1 + beta y 1{y<1}) nu(dy).
/// The drift is stored in the convention it was declared in and converted on
/// demand. Instances are immutable and safe to share across threads.
class LevyModel {
public:
    LevyModel(double drift, DriftConvention convention, double sigma2, JumpMeasure jumps);

    static LevyModel brownian(double c, double sigma2) {
        return LevyModel(c, DriftConvention::C, sigma2, NoJumps{});
    }
    /// Pure stable model with psi(beta) = c'' beta + beta^alpha.
    static LevyModel stable(double alpha, double c_double_prime = 0.0) {
        return LevyModel(c_double_prime, DriftConvention::CDoublePrime, 0.0, StableJumps{alpha});
    }

    double psi(double beta) const;
    double psi_derivative(double beta) const;
    /// Largest root of psi(beta) = q.
    double phi(double q) const;

    double tail(double x) const;
    double integrated_tail(double x) const;
    /// int_lo^hi nu-bar(y) dy.
    double tail_integral(double lo, double hi) const;

    Regime classify() const;
    DriftConstants drift_constants() const;
    /// c' and c''; throw NonConvergentIntegral when the moment diverges.
    double c_prime() const;
    double c_double_prime() const;
    double c() const { return c_; }

    double sigma2() const noexcept { return sigma2_; }
    const JumpMeasure& jumps() const noexcept { return jumps_; }
    DriftConvention convention() const noexcept { return convention_; }
    double declared_drift() const noexcept { return drift_; }

    /// int_(0,1) y nu(dy) and int_[1,inf) y nu(dy); +inf when divergent.
    double small_jump_moment() const;
    double large_jump_moment() const;
    bool has_bounded_variation() const;
    bool has_finite_mean() const;
    /// ||nu||, +inf for infinite activity.
    double total_mass() const;

    /// nu-bar on the grid with its origin exponent (bounded-variation models).
    GridFunction tail_on(const Grid& grid) const;
    /// nu-bar-bar on the grid with its origin exponent (finite mean).
    GridFunction integrated_tail_on(const Grid& grid) const;
    /// Origin exponent of nu-bar-bar (0 when bounded).
    double integrated_tail_exponent() const;

    MeasureTruncation truncate_measure(double z, const Grid& grid) const;

    /// Esscher transform: psi_phi(beta) = psi(beta + phi) - psi(phi).
    LevyModel tilted(double phi) const;

    /// Stable alpha if the jumps are pure stable.
    std::optional<double> stable_index() const;

    /// Short human-readable description used in output metadata.
    std::string fingerprint() const;

private:
    double drift_ = 0.0;
    DriftConvention convention_ = DriftConvention::C;
    double sigma2_ = 0.0;
    JumpMeasure jumps_;
    double c_ = 0.0;  // raw triplet drift
    double small_moment_ = 0.0, large_moment_ = 0.0;
    struct MeasureTable;
    std::shared_ptr<const MeasureTable> table_;  // prefix sums for tabulated families
};

}  // namespace scalefn
