#pragma once

// Batch and online training loops shared by every WTA operator.
//
// Batch training (k-means, SOM, STM) replaces each prototype with the
// phi-weighted mean of all patterns and repeats until the total prototype
// movement drops below epsilon. Online training (all four operators) applies
// w_j += eta * phi(i, j) * (x_i - w_j) pattern by pattern, for a fixed number
// of epochs over a freshly shuffled dataset. Both anneal eta and sigma_r as
// exp(-t / tau); sigma_t never decays.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "stm/grid.hpp"
#include "stm/parallel.hpp"
#include "stm/wta.hpp"

namespace stm {

/// Prototypes with less phi-mass than this keep their value in a batch step.
inline constexpr double kMinPhiMass = 1e-12;

struct HistoryRecord {
    std::size_t iteration = 0;
    double energy = 0.0;
    double movement = 0.0;  // sum_j ||w_j(after) - w_j(before)||
    double eta = 0.0;
    double sigma_r = 0.0;
};

struct TrainingHistory {
    std::vector<HistoryRecord> records;
    bool converged = false;
};

struct TrainingResult {
    Codebook codebook;
    TrainingHistory history;
};

struct AnnealedParams {
    double eta;
    double sigma_r;
    double sigma_t;
};

AnnealedParams anneal(double t, const TrainingSchedule& sched);

/// N x K table of phi(i, j) under `kind`, using the winners of `cb`.
Matrix phi_table(const Dataset& data, const Codebook& cb, const WtaKind& kind,
                 const LabelAnchors& anchors = {}, ExecOptions exec = {});

/// L = 1/2 sum_i sum_j phi(i, j) ||x_i - w_j||^2.
double energy(const Dataset& data, const Codebook& cb, const Matrix& phi);

struct BatchStepResult {
    Codebook codebook;
    double movement = 0.0;
    double energy = 0.0;  // energy of the incoming codebook under this step's phi
};

/// One weighted-mean update. LVQ has no batch form and is rejected with ConfigError.
BatchStepResult batch_step(const Dataset& data, const Codebook& cb, const WtaKind& kind,
                           const LabelAnchors& anchors = {}, ExecOptions exec = {});

/// In-place update of every prototype toward `x`. `anchor` is required for Stm and Lvq;
/// Lvq uses the unit nearest to it as the label's designated unit.
void online_step(std::span<const double> x, Codebook& cb, const WtaKind& kind,
                 std::optional<std::span<const double>> anchor, double eta);

TrainingResult train_batch(const Dataset& data, Codebook initial, Algorithm algo,
                           const LabelAnchors& anchors, const TrainingSchedule& sched,
                           ExecOptions exec = {});
/// Starts from init_codebook(topo, data, sched.seed).
TrainingResult train_batch(const Dataset& data, const GridTopology& topo, Algorithm algo,
                           const LabelAnchors& anchors, const TrainingSchedule& sched,
                           ExecOptions exec = {});

TrainingResult train_online(const Dataset& data, Codebook initial, Algorithm algo,
                            const LabelAnchors& anchors, const TrainingSchedule& sched,
                            ExecOptions exec = {});
TrainingResult train_online(const Dataset& data, const GridTopology& topo, Algorithm algo,
                            const LabelAnchors& anchors, const TrainingSchedule& sched,
                            ExecOptions exec = {});

/// Winner index of every pattern.
std::vector<std::size_t> assign_winners(const Dataset& data, const Codebook& cb, ExecOptions exec = {});

/// Mean distance from each pattern to its winning prototype.
double quantization_error(const Dataset& data, const Codebook& cb, ExecOptions exec = {});

/// Fraction of labeled patterns whose winner sits strictly nearer to the pattern's own
/// anchor than to every other anchor. Ties count as failures.
double anchor_consistency(const Dataset& data, const Codebook& cb, const LabelAnchors& anchors,
                          ExecOptions exec = {});

}  // namespace stm
