#pragma once

// The winner-takes-all operator family. Each operator phi(i, j) weights how
// strongly unit j is pulled toward pattern i once the winner r_i is known:
//
//   Hard (k-means)  [j == r]
//   Som             exp(-d(j, r)^2 / 2 sr^2)
//   Stm             exp(-d(j, r)^2 / 2 sr^2) * exp(-d(j, t)^2 / 2 st^2)
//   Lvq             [j == r] * (j == t_unit ? +1 : -1)
//
// Distances d are Euclidean distances between lattice coordinates.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "stm/grid.hpp"

namespace stm {

enum class Algorithm : std::uint8_t { KMeans = 0, Som = 1, Stm = 2, Lvq = 3 };

std::string_view to_string(Algorithm algo);
/// Accepts "kmeans", "som", "stm", "lvq"; throws ConfigError otherwise.
Algorithm parse_algorithm(std::string_view name);

/// Operator selector with its current radii (lattice units).
struct WtaKind {
    Algorithm algorithm = Algorithm::KMeans;
    double sigma_r = 1.0;  // used by Som and Stm
    double sigma_t = 1.0;  // used by Stm

    static WtaKind hard() { return {Algorithm::KMeans, 1.0, 1.0}; }
    static WtaKind som(double sigma) { return {Algorithm::Som, sigma, 1.0}; }
    static WtaKind stm(double sigma_r, double sigma_t) { return {Algorithm::Stm, sigma_r, sigma_t}; }
    static WtaKind lvq() { return {Algorithm::Lvq, 1.0, 1.0}; }

    bool needs_anchors() const noexcept {
        return algorithm == Algorithm::Stm || algorithm == Algorithm::Lvq;
    }

    /// Throws DomainError when a radius in use is not strictly positive.
    void validate() const;

    friend bool operator==(const WtaKind&, const WtaKind&) = default;
};

/// Index of the prototype nearest to `x`; ties go to the lowest index.
std::size_t find_winner(std::span<const double> x, const Codebook& cb);

/// Same as find_winner, also reporting the squared distance to every prototype.
std::size_t find_winner(std::span<const double> x, const Codebook& cb, std::span<double> sq_dists);

double phi_hard(std::size_t j, std::size_t r) noexcept;
double phi_som(std::size_t j, std::size_t r, double sigma, const GridTopology& topo);
double phi_stm(std::size_t j, std::size_t r, std::span<const double> anchor, double sigma_r,
               double sigma_t, const GridTopology& topo);
double phi_lvq(std::size_t j, std::size_t r, std::size_t anchor_unit) noexcept;

/// Label target of one pattern, resolved once per dataset.
struct PatternTarget {
    std::span<const double> anchor;  // latent coordinate (Stm)
    std::size_t anchor_unit = 0;     // nearest unit to the anchor (Lvq)
};

/// Fills out[j] = phi(j, winner) for all units. `target` is required for Stm and Lvq.
void evaluate_phi(const WtaKind& kind, std::size_t winner, const PatternTarget* target,
                  const Codebook& cb, std::span<double> out);

}  // namespace stm
