#include "stm/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace stm {

namespace {

void check_query(const LatentQuery& query, const Codebook& cb) {
    if (!(query.sigma > 0.0)) throw DomainError("generate: sigma must be positive");
    if (query.point.size() != cb.topology().rank()) {
        throw DomainError("generate: query dimensionality does not match the grid");
    }
    for (double c : query.point) {
        if (!std::isfinite(c)) throw DomainError("generate: non-finite query coordinate");
    }
}

}  // namespace

Activations activations(const LatentQuery& query, const Codebook& cb) {
    check_query(query, cb);
    const auto k = cb.unit_count();
    const auto& coords = cb.unit_coords();
    const double two_s2 = 2.0 * query.sigma * query.sigma;

    std::vector<double> d2(k);
    for (std::size_t j = 0; j < k; ++j) d2[j] = squared_grid_distance(coords.row(j), query.point);

    Activations out{std::vector<double>(k), !cb.topology().contains(query.point)};
    if (!query.normalize) {
        const double scale = 1.0 / (query.sigma * std::sqrt(2.0 * std::numbers::pi));
        for (std::size_t j = 0; j < k; ++j) out.values[j] = scale * std::exp(-d2[j] / two_s2);
        return out;
    }

    // Shift by the smallest distance before exponentiating; the prefactor cancels.
    const double d2_min = *std::min_element(d2.begin(), d2.end());
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        out.values[j] = std::exp(-(d2[j] - d2_min) / two_s2);
        total += out.values[j];
    }
    for (auto& u : out.values) u /= total;
    return out;
}

GeneratedPattern generate(const LatentQuery& query, const Codebook& cb) {
    auto act = activations(query, cb);
    GeneratedPattern out{std::vector<double>(cb.input_dim(), 0.0), act.outside_grid};
    for (std::size_t j = 0; j < cb.unit_count(); ++j) {
        const double u = act.values[j];
        if (u == 0.0) continue;
        const auto w = cb.prototype(j);
        for (std::size_t c = 0; c < w.size(); ++c) out.values[c] += u * w[c];
    }
    return out;
}

Matrix generate_batch(std::span<const LatentQuery> queries, const Codebook& cb, ExecOptions exec) {
    Matrix out(queries.size(), cb.input_dim());
    parallel_for(queries.size(), exec.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            const auto g = generate(queries[p], cb);
            std::copy(g.values.begin(), g.values.end(), out.row(p).begin());
        }
    });
    return out;
}

}  // namespace stm
