#pragma once

// Latent lattice and the data containers shared by every WTA algorithm.
//
// Latent coordinates are measured in lattice units: neighbouring units sit
// at distance 1. 2D grids are laid out row-major, so unit j of an R x C grid
// lives at (j / C, j % C).

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stm/matrix.hpp"

namespace stm {

/// A point in the latent (mapping) space.
using Coord = std::vector<double>;

class GridTopology {
public:
    /// `dims` must hold one or two positive extents.
    explicit GridTopology(std::vector<std::size_t> dims);

    static GridTopology line(std::size_t units) { return GridTopology({units}); }
    static GridTopology grid(std::size_t rows, std::size_t cols) { return GridTopology({rows, cols}); }

    const std::vector<std::size_t>& dims() const noexcept { return dims_; }
    std::size_t rank() const noexcept { return dims_.size(); }
    std::size_t unit_count() const noexcept { return unit_count_; }
    std::size_t max_extent() const noexcept;

    Coord unit_coord(std::size_t j) const;

    /// Inverse of unit_coord; `coord` must be an exact lattice point.
    std::size_t unit_index(std::span<const double> coord) const;

    /// Unit whose coordinate is nearest to `coord` (rounded, then clamped to the grid).
    std::size_t nearest_unit(std::span<const double> coord) const;

    /// True when `coord` lies in the closed box [0, dim-1] on every axis.
    bool contains(std::span<const double> coord) const;

    friend bool operator==(const GridTopology&, const GridTopology&) = default;

private:
    std::vector<std::size_t> dims_;
    std::size_t unit_count_ = 0;
};

Coord unit_coord(std::size_t j, const GridTopology& topo);

double squared_grid_distance(std::span<const double> a, std::span<const double> b);
double grid_distance(std::span<const double> a, std::span<const double> b);

/// K x M prototype matrix bound to the lattice it lives on.
class Codebook {
public:
    Codebook(GridTopology topology, Matrix weights);

    const GridTopology& topology() const noexcept { return topology_; }
    const Matrix& weights() const noexcept { return weights_; }
    Matrix& weights() noexcept { return weights_; }

    std::size_t unit_count() const noexcept { return weights_.rows(); }
    std::size_t input_dim() const noexcept { return weights_.cols(); }
    std::span<const double> prototype(std::size_t j) const noexcept { return weights_.row(j); }
    std::span<double> prototype(std::size_t j) noexcept { return weights_.row(j); }

    /// Precomputed unit coordinates, row j = unit_coord(j).
    const Matrix& unit_coords() const noexcept { return coords_; }

    friend bool operator==(const Codebook& a, const Codebook& b) {
        return a.topology_ == b.topology_ && a.weights_ == b.weights_;
    }

private:
    GridTopology topology_;
    Matrix weights_;
    Matrix coords_;
};

using Label = std::string;

/// N x M input patterns with optional per-row labels.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(Matrix patterns, std::optional<std::vector<Label>> labels = std::nullopt);

    const Matrix& patterns() const noexcept { return patterns_; }
    const std::optional<std::vector<Label>>& labels() const noexcept { return labels_; }
    bool labeled() const noexcept { return labels_.has_value(); }

    std::size_t size() const noexcept { return patterns_.rows(); }
    std::size_t input_dim() const noexcept { return patterns_.cols(); }
    bool empty() const noexcept { return patterns_.rows() == 0; }
    std::span<const double> pattern(std::size_t i) const noexcept { return patterns_.row(i); }

    /// Distinct labels in order of first appearance.
    std::vector<Label> distinct_labels() const;

private:
    Matrix patterns_;
    std::optional<std::vector<Label>> labels_;
};

/// Label identifier -> target point in latent space.
class LabelAnchors {
public:
    LabelAnchors() = default;

    /// Throws ConfigError on duplicates.
    void add(const Label& label, Coord coord);

    bool empty() const noexcept { return anchors_.empty(); }
    std::size_t size() const noexcept { return anchors_.size(); }
    bool contains(const Label& label) const { return anchors_.contains(label); }
    const Coord& at(const Label& label) const;
    const std::map<Label, Coord>& entries() const noexcept { return anchors_; }

    /// Checks arity and bounding-box containment against `topo`.
    void validate(const GridTopology& topo) const;

    /// Throws ConfigError naming the first label of `data` without an anchor.
    void require_coverage(const Dataset& data) const;

    friend bool operator==(const LabelAnchors&, const LabelAnchors&) = default;

private:
    std::map<Label, Coord> anchors_;
};

struct TrainingSchedule {
    double eta_init = 0.1;
    double sigma_r_init = 1.0;
    double sigma_t_init = 2.0;
    double tau = 25.0;
    std::size_t epochs = 100;
    double epsilon = 1e-4;
    std::size_t max_batch_iters = 500;
    std::uint64_t seed = 0;

    /// Defaults for a lattice: sigma_r_init is half the largest grid extent, tau = epochs / 4.
    static TrainingSchedule defaults_for(const GridTopology& topo, std::size_t epochs = 100);

    void validate() const;
};

/// Uniform draws inside the per-dimension [min, max] box of `data`.
Codebook init_codebook(const GridTopology& topo, const Dataset& data, std::uint64_t seed);

}  // namespace stm
