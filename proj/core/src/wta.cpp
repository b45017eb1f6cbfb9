#include "stm/wta.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace stm {

std::string_view to_string(Algorithm algo) {
    switch (algo) {
        case Algorithm::KMeans: return "kmeans";
        case Algorithm::Som: return "som";
        case Algorithm::Stm: return "stm";
        case Algorithm::Lvq: return "lvq";
    }
    return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
    if (name == "kmeans") return Algorithm::KMeans;
    if (name == "som") return Algorithm::Som;
    if (name == "stm") return Algorithm::Stm;
    if (name == "lvq") return Algorithm::Lvq;
    throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

void WtaKind::validate() const {
    if ((algorithm == Algorithm::Som || algorithm == Algorithm::Stm) && !(sigma_r > 0.0)) {
        throw DomainError("neighbourhood radius must be positive");
    }
    if (algorithm == Algorithm::Stm && !(sigma_t > 0.0)) {
        throw DomainError("label radius must be positive");
    }
}

std::size_t find_winner(std::span<const double> x, const Codebook& cb, std::span<double> sq_dists) {
    if (x.size() != cb.input_dim()) throw DomainError("find_winner: pattern dimension mismatch");
    for (double v : x) {
        if (!std::isfinite(v)) throw DomainError("find_winner: non-finite input");
    }
    const bool keep = !sq_dists.empty();
    if (keep && sq_dists.size() != cb.unit_count()) {
        throw DomainError("find_winner: distance buffer has the wrong size");
    }

    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cb.unit_count(); ++j) {
        const auto w = cb.prototype(j);
        double d = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double diff = x[k] - w[k];
            d += diff * diff;
        }
        if (keep) sq_dists[j] = d;
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best;
}

std::size_t find_winner(std::span<const double> x, const Codebook& cb) {
    return find_winner(x, cb, {});
}

double phi_hard(std::size_t j, std::size_t r) noexcept { return j == r ? 1.0 : 0.0; }

double phi_som(std::size_t j, std::size_t r, double sigma, const GridTopology& topo) {
    if (!(sigma > 0.0)) throw DomainError("phi_som: sigma must be positive");
    const double d2 = squared_grid_distance(topo.unit_coord(j), topo.unit_coord(r));
    return std::exp(-d2 / (2.0 * sigma * sigma));
}

double phi_stm(std::size_t j, std::size_t r, std::span<const double> anchor, double sigma_r,
               double sigma_t, const GridTopology& topo) {
    if (!(sigma_r > 0.0) || !(sigma_t > 0.0)) throw DomainError("phi_stm: radii must be positive");
    if (anchor.size() != topo.rank()) throw DomainError("phi_stm: anchor dimensionality mismatch");
    const auto cj = topo.unit_coord(j);
    const double dr2 = squared_grid_distance(cj, topo.unit_coord(r));
    const double dt2 = squared_grid_distance(cj, anchor);
    return std::exp(-dr2 / (2.0 * sigma_r * sigma_r)) * std::exp(-dt2 / (2.0 * sigma_t * sigma_t));
}

double phi_lvq(std::size_t j, std::size_t r, std::size_t anchor_unit) noexcept {
    if (j != r) return 0.0;
    return j == anchor_unit ? 1.0 : -1.0;
}

void evaluate_phi(const WtaKind& kind, std::size_t winner, const PatternTarget* target,
                  const Codebook& cb, std::span<double> out) {
    const auto k_units = cb.unit_count();
    if (out.size() != k_units) throw DomainError("evaluate_phi: output has the wrong size");
    if (kind.needs_anchors() && target == nullptr) {
        throw ConfigError("evaluate_phi: operator requires a label target");
    }

    switch (kind.algorithm) {
        case Algorithm::KMeans:
            for (std::size_t j = 0; j < k_units; ++j) out[j] = phi_hard(j, winner);
            return;
        case Algorithm::Lvq:
            for (std::size_t j = 0; j < k_units; ++j) out[j] = phi_lvq(j, winner, target->anchor_unit);
            return;
        case Algorithm::Som:
        case Algorithm::Stm:
            break;
    }

    // Gaussian operators, evaluated with the codebook's cached unit coordinates.
    const auto& coords = cb.unit_coords();
    const auto cr = coords.row(winner);
    const double two_r2 = 2.0 * kind.sigma_r * kind.sigma_r;
    if (kind.algorithm == Algorithm::Som) {
        for (std::size_t j = 0; j < k_units; ++j) {
            out[j] = std::exp(-squared_grid_distance(coords.row(j), cr) / two_r2);
        }
        return;
    }
    if (target->anchor.size() != cb.topology().rank()) {
        throw DomainError("evaluate_phi: anchor dimensionality mismatch");
    }
    const double two_t2 = 2.0 * kind.sigma_t * kind.sigma_t;
    for (std::size_t j = 0; j < k_units; ++j) {
        const auto cj = coords.row(j);
        out[j] = std::exp(-squared_grid_distance(cj, cr) / two_r2) *
                 std::exp(-squared_grid_distance(cj, target->anchor) / two_t2);
    }
}

}  // namespace stm
