#pragma once

#include <optional>
#include <vector>

#include "scalefn/grid.hpp"

namespace scalefn {

struct Atom {
    double location = 0.0;
    double mass = 0.0;
};

/// Finite measure on [0, inf): point masses plus an optional density.
/// Atoms are kept sorted with strictly increasing locations; coincident
/// locations passed to the constructor are merged.
class MixedDistribution {
public:
    MixedDistribution() = default;
    explicit MixedDistribution(std::vector<Atom> atoms,
                               std::optional<GridFunction> density = std::nullopt);

    static MixedDistribution dirac(double location, double mass = 1.0);

    const std::vector<Atom>& atoms() const noexcept { return atoms_; }
    const std::optional<GridFunction>& density() const noexcept { return density_; }

    double atom_mass() const noexcept;
    double density_mass() const;
    double total_mass() const { return atom_mass() + density_mass(); }
    bool empty() const noexcept { return atoms_.empty() && !density_; }

    MixedDistribution scaled(double c) const;

private:
    std::vector<Atom> atoms_;
    std::optional<GridFunction> density_;
};

/// f * g by product integration on the half grid; exact when both regular
/// factors are constant. The result is written with exponent s_f + s_g + 1
/// unless that exceeds 8, in which case part of the power is folded into the
/// regular factor to keep intermediate numbers in range.
GridFunction convolve(const GridFunction& f, const GridFunction& g);

/// Sum over atoms of mass * f(. - location) plus f * density.
GridFunction convolve_mixed(const GridFunction& f, const MixedDistribution& d);

/// a * b as a measure: atom pairs stay atoms (dropped beyond `x_max`), every
/// other pairing lands in the density on `grid`.
MixedDistribution convolve_measures(const MixedDistribution& a, const MixedDistribution& b,
                                    const Grid& grid);

/// 1 * f, exponent s_f + 1.
GridFunction primitive(const GridFunction& f);

/// Product rule on x^s * r with central differences for r' and one-sided
/// second-order stencils at both ends. Throws when s - 1 <= -1 and s != 0.
GridFunction derivative(const GridFunction& f);

GridFunction frac_integral(const GridFunction& f, double mu);
GridFunction frac_derivative(const GridFunction& f, double mu);

/// Integral of |f| over [0, x]; x defaults to the end of the grid.
double l1_norm(const GridFunction& f, std::optional<double> x = std::nullopt);
/// Signed integral of f over [0, x].
double integral(const GridFunction& f, std::optional<double> x = std::nullopt);
double sup_norm(const GridFunction& f);

/// int_0^{x_max} e^{-beta x} f(x) dx with x^s e^{-beta x} integrated per cell
/// (closed form for s = 0 and in the first cell, 8-point Gauss elsewhere).
double laplace_transform(const GridFunction& f, double beta);

/// Exact integral of x^s * r_j over each cell.
std::vector<double> cell_integrals(const GridFunction& f);

}  // namespace scalefn
