#pragma once

// Radial-basis generation of input patterns from continuous latent points.
//
//   u_j = 1 / (sigma * sqrt(2 pi)) * exp(-d(unit_coord(j), q)^2 / (2 sigma^2))
//   x   = W^T u
//
// With `normalize` set, u is rescaled to sum to one, so x is a convex
// combination of prototypes whose amplitude does not depend on sigma.

#include <span>
#include <vector>

#include "stm/grid.hpp"
#include "stm/parallel.hpp"

namespace stm {

struct LatentQuery {
    Coord point;
    double sigma = 1.0;
    bool normalize = true;
};

struct Activations {
    std::vector<double> values;
    bool outside_grid = false;  // query lies outside the lattice bounding box
};

struct GeneratedPattern {
    std::vector<double> values;
    bool outside_grid = false;
};

Activations activations(const LatentQuery& query, const Codebook& cb);

GeneratedPattern generate(const LatentQuery& query, const Codebook& cb);

/// Row p of the result is generate(queries[p], cb).values.
Matrix generate_batch(std::span<const LatentQuery> queries, const Codebook& cb, ExecOptions exec = {});

}  // namespace stm
