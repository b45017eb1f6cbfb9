#include "stm/trainers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>

namespace stm {

namespace {

void check_shapes(const Dataset& data, const Codebook& cb) {
    if (data.empty()) throw DomainError("dataset is empty");
    if (data.input_dim() != cb.input_dim()) {
        throw DomainError("dataset and codebook input dimensions differ");
    }
}

// Per-pattern label targets for the supervised operators.
struct Targets {
    std::vector<PatternTarget> rows;

    const PatternTarget* at(std::size_t i) const { return rows.empty() ? nullptr : &rows[i]; }
};

Targets resolve_targets(const Dataset& data, const Codebook& cb, const WtaKind& kind,
                        const LabelAnchors& anchors) {
    Targets t;
    if (!kind.needs_anchors()) return t;
    if (anchors.empty()) {
        throw ConfigError(std::string(to_string(kind.algorithm)) + " training requires label anchors");
    }
    anchors.validate(cb.topology());
    anchors.require_coverage(data);
    const auto& labels = *data.labels();
    t.rows.reserve(data.size());
    for (const auto& label : labels) {
        const auto& coord = anchors.at(label);
        t.rows.push_back({coord, cb.topology().nearest_unit(coord)});
    }
    return t;
}

double movement_between(const Matrix& before, const Matrix& after) {
    double total = 0.0;
    for (std::size_t j = 0; j < before.rows(); ++j) {
        total += grid_distance(before.row(j), after.row(j));
    }
    return total;
}

// Distances, winners and phi for every pattern; row-parallel, each row written by one worker.
struct PhiPass {
    Matrix sq_dists;
    Matrix phi;
};

PhiPass compute_phi_pass(const Dataset& data, const Codebook& cb, const WtaKind& kind,
                         const Targets& targets, ExecOptions exec) {
    const auto n = data.size();
    const auto k = cb.unit_count();
    PhiPass pass{Matrix(n, k), Matrix(n, k)};
    parallel_for(n, exec.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto r = find_winner(data.pattern(i), cb, pass.sq_dists.row(i));
            evaluate_phi(kind, r, targets.at(i), cb, pass.phi.row(i));
        }
    });
    return pass;
}

double energy_from_tables(const Matrix& sq_dists, const Matrix& phi) {
    double total = 0.0;
    for (std::size_t i = 0; i < phi.rows(); ++i) {
        const auto p = phi.row(i);
        const auto d = sq_dists.row(i);
        for (std::size_t j = 0; j < p.size(); ++j) total += p[j] * d[j];
    }
    return 0.5 * total;
}

double hard_energy(const Dataset& data, const Codebook& cb, ExecOptions exec) {
    const auto n = data.size();
    std::vector<double> best(n);
    parallel_for(n, exec.threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> d(cb.unit_count());
        for (std::size_t i = begin; i < end; ++i) best[i] = d[find_winner(data.pattern(i), cb, d)];
    });
    return 0.5 * std::accumulate(best.begin(), best.end(), 0.0);
}

}  // namespace

AnnealedParams anneal(double t, const TrainingSchedule& sched) {
    if (t < 0.0) throw DomainError("anneal: negative time");
    const double decay = std::exp(-t / sched.tau);
    return {sched.eta_init * decay, sched.sigma_r_init * decay, sched.sigma_t_init};
}

Matrix phi_table(const Dataset& data, const Codebook& cb, const WtaKind& kind,
                 const LabelAnchors& anchors, ExecOptions exec) {
    check_shapes(data, cb);
    kind.validate();
    const auto targets = resolve_targets(data, cb, kind, anchors);
    return compute_phi_pass(data, cb, kind, targets, exec).phi;
}

double energy(const Dataset& data, const Codebook& cb, const Matrix& phi) {
    check_shapes(data, cb);
    if (phi.rows() != data.size() || phi.cols() != cb.unit_count()) {
        throw DomainError("energy: phi table shape must be N x K");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto x = data.pattern(i);
        for (std::size_t j = 0; j < cb.unit_count(); ++j) {
            const double p = phi(i, j);
            if (p == 0.0) continue;
            total += p * squared_grid_distance(x, cb.prototype(j));
        }
    }
    return 0.5 * total;
}

BatchStepResult batch_step(const Dataset& data, const Codebook& cb, const WtaKind& kind,
                           const LabelAnchors& anchors, ExecOptions exec) {
    check_shapes(data, cb);
    kind.validate();
    if (kind.algorithm == Algorithm::Lvq) {
        throw ConfigError("lvq has no batch update; use online training");
    }
    const auto targets = resolve_targets(data, cb, kind, anchors);
    const auto pass = compute_phi_pass(data, cb, kind, targets, exec);

    const auto n = data.size();
    const auto k = cb.unit_count();
    const auto m = cb.input_dim();

    std::vector<double> mass(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = pass.phi.row(i);
        for (std::size_t j = 0; j < k; ++j) mass[j] += p[j];
    }

    // Each worker owns a slice of input dimensions and sums over patterns in index
    // order, so every accumulator sees the same sequence whatever the worker count.
    Matrix numer(k, m);
    parallel_for(m, exec.threads, [&](std::size_t c0, std::size_t c1) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto x = data.pattern(i);
            const auto p = pass.phi.row(i);
            for (std::size_t j = 0; j < k; ++j) {
                const double w = p[j];
                if (w == 0.0) continue;
                auto acc = numer.row(j);
                for (std::size_t c = c0; c < c1; ++c) acc[c] += w * x[c];
            }
        }
    });

    Matrix next = cb.weights();
    for (std::size_t j = 0; j < k; ++j) {
        if (mass[j] < kMinPhiMass) continue;
        auto row = next.row(j);
        const auto acc = numer.row(j);
        for (std::size_t c = 0; c < m; ++c) row[c] = acc[c] / mass[j];
    }

    BatchStepResult result{Codebook(cb.topology(), std::move(next)), 0.0,
                           energy_from_tables(pass.sq_dists, pass.phi)};
    result.movement = movement_between(cb.weights(), result.codebook.weights());
    return result;
}

void online_step(std::span<const double> x, Codebook& cb, const WtaKind& kind,
                 std::optional<std::span<const double>> anchor, double eta) {
    if (!(eta > 0.0)) throw DomainError("online_step: eta must be positive");
    kind.validate();
    PatternTarget target;
    const PatternTarget* tp = nullptr;
    if (kind.needs_anchors()) {
        if (!anchor) throw ConfigError("online_step: operator requires an anchor");
        if (anchor->size() != cb.topology().rank()) {
            throw DomainError("online_step: anchor dimensionality mismatch");
        }
        target = {*anchor, cb.topology().nearest_unit(*anchor)};
        tp = &target;
    }

    const auto r = find_winner(x, cb);
    std::vector<double> phi(cb.unit_count());
    evaluate_phi(kind, r, tp, cb, phi);
    for (std::size_t j = 0; j < cb.unit_count(); ++j) {
        if (phi[j] == 0.0) continue;
        const double rate = eta * phi[j];
        auto w = cb.prototype(j);
        for (std::size_t c = 0; c < w.size(); ++c) w[c] += rate * (x[c] - w[c]);
    }
}

TrainingResult train_batch(const Dataset& data, Codebook initial, Algorithm algo,
                           const LabelAnchors& anchors, const TrainingSchedule& sched,
                           ExecOptions exec) {
    sched.validate();
    check_shapes(data, initial);
    if (algo == Algorithm::Lvq) throw ConfigError("lvq has no batch update; use online training");

    TrainingResult out{std::move(initial), {}};
    for (std::size_t t = 0; t < sched.max_batch_iters; ++t) {
        const auto a = anneal(static_cast<double>(t), sched);
        const WtaKind kind{algo, a.sigma_r, a.sigma_t};
        auto step = batch_step(data, out.codebook, kind, anchors, exec);
        out.history.records.push_back({t, step.energy, step.movement, a.eta, a.sigma_r});
        out.codebook = std::move(step.codebook);
        if (step.movement < sched.epsilon) {
            out.history.converged = true;
            break;
        }
    }
    return out;
}

TrainingResult train_batch(const Dataset& data, const GridTopology& topo, Algorithm algo,
                           const LabelAnchors& anchors, const TrainingSchedule& sched,
                           ExecOptions exec) {
    return train_batch(data, init_codebook(topo, data, sched.seed), algo, anchors, sched, exec);
}

TrainingResult train_online(const Dataset& data, Codebook initial, Algorithm algo,
                            const LabelAnchors& anchors, const TrainingSchedule& sched,
                            ExecOptions exec) {
    sched.validate();
    check_shapes(data, initial);
    const WtaKind probe{algo, sched.sigma_r_init, sched.sigma_t_init};
    const auto targets = resolve_targets(data, initial, probe, anchors);

    // Separate stream from init_codebook, which consumes mt19937_64(seed) directly.
    std::seed_seq seq{static_cast<std::uint32_t>(sched.seed), static_cast<std::uint32_t>(sched.seed >> 32),
                      0x5eedu};
    std::mt19937_64 rng(seq);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainingResult out{std::move(initial), {}};
    for (std::size_t t = 0; t < sched.epochs; ++t) {
        const auto a = anneal(static_cast<double>(t), sched);
        const WtaKind kind{algo, a.sigma_r, a.sigma_t};
        const Matrix before = out.codebook.weights();

        std::shuffle(order.begin(), order.end(), rng);
        for (auto i : order) {
            std::optional<std::span<const double>> anchor;
            if (const auto* tp = targets.at(i)) anchor = tp->anchor;
            online_step(data.pattern(i), out.codebook, kind, anchor, a.eta);
        }

        double e = 0.0;
        if (algo == Algorithm::Lvq) {
            e = hard_energy(data, out.codebook, exec);
        } else {
            const auto pass = compute_phi_pass(data, out.codebook, kind, targets, exec);
            e = energy_from_tables(pass.sq_dists, pass.phi);
        }
        out.history.records.push_back(
            {t, e, movement_between(before, out.codebook.weights()), a.eta, a.sigma_r});
    }
    out.history.converged = true;
    return out;
}

TrainingResult train_online(const Dataset& data, const GridTopology& topo, Algorithm algo,
                            const LabelAnchors& anchors, const TrainingSchedule& sched,
                            ExecOptions exec) {
    return train_online(data, init_codebook(topo, data, sched.seed), algo, anchors, sched, exec);
}

std::vector<std::size_t> assign_winners(const Dataset& data, const Codebook& cb, ExecOptions exec) {
    check_shapes(data, cb);
    std::vector<std::size_t> winners(data.size());
    parallel_for(data.size(), exec.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) winners[i] = find_winner(data.pattern(i), cb);
    });
    return winners;
}

double quantization_error(const Dataset& data, const Codebook& cb, ExecOptions exec) {
    check_shapes(data, cb);
    std::vector<double> dist(data.size());
    parallel_for(data.size(), exec.threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> d(cb.unit_count());
        for (std::size_t i = begin; i < end; ++i) {
            dist[i] = std::sqrt(d[find_winner(data.pattern(i), cb, d)]);
        }
    });
    return std::accumulate(dist.begin(), dist.end(), 0.0) / static_cast<double>(data.size());
}

double anchor_consistency(const Dataset& data, const Codebook& cb, const LabelAnchors& anchors,
                          ExecOptions exec) {
    if (!data.labeled()) throw DomainError("anchor_consistency: dataset is unlabeled");
    check_shapes(data, cb);
    anchors.validate(cb.topology());
    anchors.require_coverage(data);

    const auto winners = assign_winners(data, cb, exec);
    const auto& labels = *data.labels();
    const auto& coords = cb.unit_coords();
    std::size_t hits = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto cw = coords.row(winners[i]);
        const double own = squared_grid_distance(cw, anchors.at(labels[i]));
        bool nearest = true;
        for (const auto& [label, coord] : anchors.entries()) {
            if (label == labels[i]) continue;
            if (squared_grid_distance(cw, coord) <= own) {
                nearest = false;
                break;
            }
        }
        if (nearest) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace stm
