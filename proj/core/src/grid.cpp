#include "stm/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace stm {

GridTopology::GridTopology(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    if (dims_.empty() || dims_.size() > 2) {
        throw DomainError("GridTopology: only 1D and 2D lattices are supported");
    }
    unit_count_ = 1;
    for (auto d : dims_) {
        if (d == 0) throw DomainError("GridTopology: extents must be positive");
        unit_count_ *= d;
    }
}

std::size_t GridTopology::max_extent() const noexcept {
    return *std::max_element(dims_.begin(), dims_.end());
}

Coord GridTopology::unit_coord(std::size_t j) const {
    if (j >= unit_count_) {
        std::ostringstream msg;
        msg << "unit index " << j << " out of range [0, " << unit_count_ << ")";
        throw DomainError(msg.str());
    }
    if (rank() == 1) return {static_cast<double>(j)};
    const auto cols = dims_[1];
    return {static_cast<double>(j / cols), static_cast<double>(j % cols)};
}

std::size_t GridTopology::unit_index(std::span<const double> coord) const {
    if (coord.size() != rank()) throw DomainError("unit_index: coordinate arity mismatch");
    std::size_t index = 0;
    for (std::size_t axis = 0; axis < rank(); ++axis) {
        const double c = coord[axis];
        if (!(c >= 0.0) || c > static_cast<double>(dims_[axis] - 1) || std::floor(c) != c) {
            throw DomainError("unit_index: coordinate is not a lattice point");
        }
        index = index * dims_[axis] + static_cast<std::size_t>(c);
    }
    return index;
}

std::size_t GridTopology::nearest_unit(std::span<const double> coord) const {
    if (coord.size() != rank()) throw DomainError("nearest_unit: coordinate arity mismatch");
    std::size_t index = 0;
    for (std::size_t axis = 0; axis < rank(); ++axis) {
        if (!std::isfinite(coord[axis])) throw DomainError("nearest_unit: non-finite coordinate");
        const double hi = static_cast<double>(dims_[axis] - 1);
        const double c = std::clamp(std::round(coord[axis]), 0.0, hi);
        index = index * dims_[axis] + static_cast<std::size_t>(c);
    }
    return index;
}

bool GridTopology::contains(std::span<const double> coord) const {
    if (coord.size() != rank()) return false;
    for (std::size_t axis = 0; axis < rank(); ++axis) {
        if (!(coord[axis] >= 0.0 && coord[axis] <= static_cast<double>(dims_[axis] - 1))) {
            return false;
        }
    }
    return true;
}

Coord unit_coord(std::size_t j, const GridTopology& topo) { return topo.unit_coord(j); }

double squared_grid_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DomainError("grid_distance: dimensionality mismatch");
    double sum = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        sum += d * d;
    }
    return sum;
}

double grid_distance(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(squared_grid_distance(a, b));
}

// --- Codebook -------------------------------------------------------------

Codebook::Codebook(GridTopology topology, Matrix weights)
    : topology_(std::move(topology)), weights_(std::move(weights)) {
    if (weights_.rows() != topology_.unit_count()) {
        throw DomainError("Codebook: row count must equal the topology's unit count");
    }
    if (weights_.cols() == 0) throw DomainError("Codebook: input dimension must be positive");
    for (double v : weights_.data()) {
        if (!std::isfinite(v)) throw DomainError("Codebook: weights must be finite");
    }
    coords_ = Matrix(topology_.unit_count(), topology_.rank());
    for (std::size_t j = 0; j < topology_.unit_count(); ++j) {
        const auto c = topology_.unit_coord(j);
        std::copy(c.begin(), c.end(), coords_.row(j).begin());
    }
}

// --- Dataset --------------------------------------------------------------

Dataset::Dataset(Matrix patterns, std::optional<std::vector<Label>> labels)
    : patterns_(std::move(patterns)), labels_(std::move(labels)) {
    if (labels_ && labels_->size() != patterns_.rows()) {
        throw DomainError("Dataset: label count must equal pattern count");
    }
    for (double v : patterns_.data()) {
        if (!std::isfinite(v)) throw DomainError("Dataset: patterns must be finite");
    }
}

std::vector<Label> Dataset::distinct_labels() const {
    std::vector<Label> out;
    if (!labels_) return out;
    for (const auto& l : *labels_) {
        if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
    }
    return out;
}

// --- LabelAnchors ---------------------------------------------------------

void LabelAnchors::add(const Label& label, Coord coord) {
    if (!anchors_.emplace(label, std::move(coord)).second) {
        throw ConfigError("duplicate anchor for label '" + label + "'");
    }
}

const Coord& LabelAnchors::at(const Label& label) const {
    auto it = anchors_.find(label);
    if (it == anchors_.end()) throw ConfigError("no anchor for label '" + label + "'");
    return it->second;
}

void LabelAnchors::validate(const GridTopology& topo) const {
    for (const auto& [label, coord] : anchors_) {
        if (coord.size() != topo.rank()) {
            throw ConfigError("anchor '" + label + "' has the wrong number of coordinates");
        }
        if (!topo.contains(coord)) {
            throw ConfigError("anchor '" + label + "' lies outside the grid");
        }
    }
}

void LabelAnchors::require_coverage(const Dataset& data) const {
    if (!data.labeled()) throw ConfigError("dataset has no labels");
    for (const auto& l : data.distinct_labels()) {
        if (!contains(l)) throw ConfigError("no anchor for label '" + l + "'");
    }
}

// --- TrainingSchedule -----------------------------------------------------

TrainingSchedule TrainingSchedule::defaults_for(const GridTopology& topo, std::size_t epochs) {
    TrainingSchedule s;
    s.epochs = epochs;
    s.sigma_r_init = std::max(static_cast<double>(topo.max_extent()) / 2.0, 0.5);
    s.tau = epochs > 0 ? static_cast<double>(epochs) / 4.0 : 1.0;
    return s;
}

void TrainingSchedule::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) throw ConfigError(std::string("schedule: ") + name + " must be positive");
    };
    positive(eta_init, "eta");
    positive(sigma_r_init, "sigma-r");
    positive(sigma_t_init, "sigma-t");
    positive(tau, "tau");
    positive(epsilon, "epsilon");
    if (max_batch_iters == 0) throw ConfigError("schedule: max batch iterations must be positive");
}

// --- initialisation -------------------------------------------------------

Codebook init_codebook(const GridTopology& topo, const Dataset& data, std::uint64_t seed) {
    if (data.empty()) throw DomainError("init_codebook: empty dataset");
    const auto m = data.input_dim();
    std::vector<double> lo(m, std::numeric_limits<double>::infinity());
    std::vector<double> hi(m, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto x = data.pattern(i);
        for (std::size_t k = 0; k < m; ++k) {
            lo[k] = std::min(lo[k], x[k]);
            hi[k] = std::max(hi[k], x[k]);
        }
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Matrix w(topo.unit_count(), m);
    for (std::size_t j = 0; j < w.rows(); ++j) {
        for (std::size_t k = 0; k < m; ++k) {
            // lo + span * u keeps constant dimensions exactly at their value.
            w(j, k) = lo[k] + (hi[k] - lo[k]) * unit(rng);
        }
    }
    return Codebook(topo, std::move(w));
}

}  // namespace stm
