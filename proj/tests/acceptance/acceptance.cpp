// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   stm_acceptance [--only N]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "cli/cli.hpp"
#include "oracles.hpp"
#include "stm/stm.hpp"
#include "temp_dir.hpp"

using namespace stm;

namespace {

const std::filesystem::path kData = STM_TEST_DATA_DIR;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double budget_s;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

unsigned threads() { return std::max(1u, std::thread::hardware_concurrency()); }

Dataset uniform_rgb(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return Dataset(oracle::to_matrix(oracle::random_rows(n, 3, rng)));
}

Dataset labeled_rgb(std::size_t n, std::uint64_t seed) {
    const auto x = uniform_rgb(n, seed);
    std::vector<Label> labels;
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = x.pattern(i);
        labels.push_back(p[0] >= p[1] && p[0] >= p[2] ? "red" : (p[1] >= p[2] ? "green" : "blue"));
    }
    return Dataset(x.patterns(), labels);
}

// --- 1 ----------------------------------------------------------------------------

Outcome energy_descent() {
    std::mt19937_64 rng(1);
    double worst = -std::numeric_limits<double>::infinity();
    std::size_t iterations = 0;
    for (std::uint64_t inst = 0; inst < 20; ++inst) {
        const std::size_t n = 20 + rng() % 181, m = 1 + rng() % 10, k = 2 + rng() % 7;
        const Dataset data(oracle::to_matrix(oracle::random_rows(n, m, rng)));
        auto s = TrainingSchedule::defaults_for(GridTopology::line(k));
        s.seed = inst;
        s.epsilon = 1e-12;
        const auto res = train_batch(data, GridTopology::line(k), Algorithm::KMeans, {}, s);
        const auto& h = res.history.records;
        iterations += h.size();
        for (std::size_t t = 1; t < h.size(); ++t) worst = std::max(worst, h[t].energy - h[t - 1].energy);
        // The final codebook is also checked against the last recorded energy.
        const double last = energy(data, res.codebook, phi_table(data, res.codebook, WtaKind::hard()));
        worst = std::max(worst, last - h.back().energy);
    }
    return {worst <= 1e-9, fmt("20 instances, %zu iterations, largest energy increase %.3g", iterations, worst)};
}

// --- 2 ----------------------------------------------------------------------------

Outcome oracle_equivalence() {
    std::mt19937_64 rng(2);
    double worst = 0.0;
    std::size_t instances = 0, mismatched_iters = 0;
    for (std::size_t n = 1; n <= 8; ++n) {
        for (std::size_t k = 1; k <= 3; ++k) {
            for (std::size_t m = 1; m <= 2; ++m) {
                for (std::uint64_t rep = 0; rep < 8; ++rep, ++instances) {
                    const auto x = oracle::random_rows(n, m, rng);
                    const Dataset data(oracle::to_matrix(x));
                    const auto init = init_codebook(GridTopology::line(k), data, rep);
                    TrainingSchedule s;
                    s.epsilon = 1e-4;
                    const auto res = train_batch(data, init, Algorithm::KMeans, {}, s);

                    auto c = oracle::to_rows(init.weights());
                    std::size_t iters = 0;
                    for (;;) {
                        const auto next = oracle::lloyd_step(x, c);
                        double moved = 0.0;
                        for (std::size_t j = 0; j < k; ++j) moved += std::sqrt(oracle::sq_dist(next[j], c[j]));
                        c = next;
                        ++iters;
                        if (moved < s.epsilon || iters >= s.max_batch_iters) break;
                    }
                    if (iters != res.history.records.size()) ++mismatched_iters;
                    worst = std::max(worst, max_abs_diff(res.codebook.weights(), oracle::to_matrix(c)));
                }
            }
        }
    }
    return {worst <= 1e-12 && mismatched_iters == 0,
            fmt("%zu instances, max weight difference %.3g, iteration-count mismatches %zu", instances, worst,
                mismatched_iters)};
}

// --- 3 ----------------------------------------------------------------------------

// Compares two trainers iteration by iteration by rerunning them with growing caps.
template <class A, class B>
double trajectory_gap(A run_a, B run_b, std::size_t& iters) {
    const auto full = run_a(std::size_t{500});
    iters = full.history.records.size();
    double worst = 0.0;
    for (std::size_t t = 1; t <= iters; ++t) {
        worst = std::max(worst, max_abs_diff(run_a(t).codebook.weights(), run_b(t).codebook.weights()));
    }
    return worst;
}

Outcome degenerations() {
    const auto data = uniform_rgb(200, 3);
    const auto topo = GridTopology::grid(5, 5);

    auto base = TrainingSchedule::defaults_for(topo);
    base.seed = 3;
    std::size_t iters_a = 0;
    auto small = base;
    small.sigma_r_init = 1e-3;
    const double gap_a = trajectory_gap(
        [&](std::size_t cap) {
            auto s = small;
            s.max_batch_iters = cap;
            return train_batch(data, topo, Algorithm::Som, {}, s);
        },
        [&](std::size_t cap) {
            auto s = small;
            s.max_batch_iters = cap;
            return train_batch(data, topo, Algorithm::KMeans, {}, s);
        },
        iters_a);

    const auto labeled = labeled_rgb(300, 4);
    const auto topo_b = GridTopology::grid(6, 6);
    LabelAnchors anchors;
    anchors.add("red", {1, 1});
    anchors.add("green", {1, 4});
    anchors.add("blue", {4, 2.5});
    auto huge = TrainingSchedule::defaults_for(topo_b);
    huge.seed = 4;
    huge.sigma_t_init = 1e9;
    std::size_t iters_b = 0;
    const double gap_b = trajectory_gap(
        [&](std::size_t cap) {
            auto s = huge;
            s.max_batch_iters = cap;
            return train_batch(labeled, topo_b, Algorithm::Stm, anchors, s);
        },
        [&](std::size_t cap) {
            auto s = huge;
            s.max_batch_iters = cap;
            return train_batch(labeled, topo_b, Algorithm::Som, {}, s);
        },
        iters_b);

    return {gap_a <= 1e-9 && gap_b <= 1e-6,
            fmt("(a) SOM sigma_r=1e-3 vs k-means over %zu iterations: %.3g; "
                "(b) STM sigma_t=1e9 vs SOM over %zu iterations: %.3g",
                iters_a, gap_a, iters_b, gap_b)};
}

// --- 4 ----------------------------------------------------------------------------

struct OrderStats {
    double qe_init, qe_final, adjacent, random_pair;
};

OrderStats som_order(const GridTopology& topo, const Dataset& data, std::uint64_t seed) {
    auto s = TrainingSchedule::defaults_for(topo);
    s.seed = seed;
    const auto init = init_codebook(topo, data, seed);
    const auto res = train_batch(data, init, Algorithm::Som, {}, s, {threads()});
    const auto w = oracle::to_rows(res.codebook.weights());

    double adj = 0.0;
    std::size_t n_adj = 0;
    for (std::size_t a = 0; a < w.size(); ++a) {
        for (std::size_t b = a + 1; b < w.size(); ++b) {
            if (grid_distance(topo.unit_coord(a), topo.unit_coord(b)) == 1.0) {
                adj += std::sqrt(oracle::sq_dist(w[a], w[b]));
                ++n_adj;
            }
        }
    }
    double all = 0.0;
    std::size_t n_all = 0;
    for (std::size_t a = 0; a < w.size(); ++a)
        for (std::size_t b = a + 1; b < w.size(); ++b, ++n_all) all += std::sqrt(oracle::sq_dist(w[a], w[b]));
    return {quantization_error(data, init), quantization_error(data, res.codebook), adj / double(n_adj),
            all / double(n_all)};
}

Outcome topographic_order() {
    const auto data = uniform_rgb(1000, 42);
    const auto line = som_order(GridTopology::line(50), data, 42);
    const auto grid = som_order(GridTopology::grid(20, 20), data, 42);
    auto reduction = [](const OrderStats& s) { return 1.0 - s.qe_final / s.qe_init; };
    auto ratio = [](const OrderStats& s) { return s.adjacent / s.random_pair; };
    const bool qe_ok = reduction(line) >= 0.5 && reduction(grid) >= 0.5;
    const bool order_ok = ratio(line) < 0.5 && ratio(grid) < 0.5;
    return {qe_ok && order_ok,
            fmt("1D K=50: QE %.4f -> %.4f (%.1f%% reduction), adjacent/random %.3f; "
                "2D 20x20: QE %.4f -> %.4f (%.1f%% reduction), adjacent/random %.3f; "
                "(i) QE>=50%% %s, (ii) order %s",
                line.qe_init, line.qe_final, 100 * reduction(line), ratio(line), grid.qe_init, grid.qe_final,
                100 * reduction(grid), ratio(grid), qe_ok ? "ok" : "FAILED", order_ok ? "ok" : "FAILED")};
}

// --- 5 ----------------------------------------------------------------------------

Outcome rgb_anchors() {
    const auto data = labeled_rgb(1000, 5);
    const auto topo = GridTopology::grid(10, 10);
    LabelAnchors anchors;
    anchors.add("red", {2, 2});
    anchors.add("green", {2, 7});
    anchors.add("blue", {7, 4.5});
    auto s = TrainingSchedule::defaults_for(topo);
    s.seed = 5;
    const auto res = train_batch(data, topo, Algorithm::Stm, anchors, s, {threads()});
    const double c = anchor_consistency(data, res.codebook, anchors);
    return {c >= 0.9, fmt("anchor_consistency %.4f after %zu iterations", c, res.history.records.size())};
}

// --- 6 ----------------------------------------------------------------------------

Outcome mnist() {
    const auto data = load_idx(kData / "mnist5k-images-idx3-ubyte", kData / "mnist5k-labels-idx1-ubyte");
    const auto topo = GridTopology::grid(10, 10);
    const auto anchors = load_anchors(kData / "mnist-digits.anchors", topo);
    auto s = TrainingSchedule::defaults_for(topo);
    s.seed = 7;
    const auto res = train_batch(data, topo, Algorithm::Stm, anchors, s, {threads()});
    const double c = anchor_consistency(data, res.codebook, anchors, {threads()});

    std::size_t correct = 0;
    std::string misses;
    const auto& labels = *data.labels();
    for (const auto& [digit, point] : anchors.entries()) {
        const auto g = generate({point, 1.0, true}, res.codebook);
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < data.size(); ++i) {
            const auto p = data.pattern(i);
            double d = 0.0;
            for (std::size_t k = 0; k < p.size(); ++k) d += (p[k] - g.values[k]) * (p[k] - g.values[k]);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        if (labels[best] == digit) {
            ++correct;
        } else {
            misses += " " + digit + "->" + labels[best];
        }
    }
    return {c >= 0.7 && correct >= 7,
            fmt("N=%zu, %zu iterations, anchor_consistency %.4f, generated-at-anchor nearest-neighbour labels "
                "%zu/10 correct%s%s",
                data.size(), res.history.records.size(), c, correct, misses.empty() ? "" : ", misses:",
                misses.c_str())};
}

// --- 7 ----------------------------------------------------------------------------

Outcome generation_contracts() {
    std::mt19937_64 rng(7);
    const auto topo = GridTopology::grid(10, 10);
    const auto w = oracle::random_rows(100, 6, rng);
    const Codebook cb(topo, oracle::to_matrix(w));

    double one_hot = 0.0;
    for (std::size_t j = 0; j < 100; ++j) {
        const auto g = generate({topo.unit_coord(j), 1e-3, true}, cb);
        for (std::size_t c = 0; c < 6; ++c) one_hot = std::max(one_hot, std::abs(g.values[c] - w[j][c]));
    }

    std::uniform_real_distribution<double> q(-2.0, 11.0), sig(0.05, 5.0);
    double hull_violation = 0.0;
    for (int t = 0; t < 500; ++t) {
        const auto g = generate({Coord{q(rng), q(rng)}, sig(rng), true}, cb);
        for (std::size_t c = 0; c < 6; ++c) {
            double lo = w[0][c], hi = w[0][c];
            for (const auto& r : w) {
                lo = std::min(lo, r[c]);
                hi = std::max(hi, r[c]);
            }
            hull_violation = std::max({hull_violation, lo - g.values[c], g.values[c] - hi});
        }
    }

    const auto pair = oracle::random_rows(2, 6, rng);
    const Codebook two(GridTopology::line(2), oracle::to_matrix(pair));
    double midpoint = 0.0;
    for (double sigma : {0.2, 1.0, 3.0}) {
        const auto g = generate({Coord{0.5}, sigma, true}, two);
        for (std::size_t c = 0; c < 6; ++c)
            midpoint = std::max(midpoint, std::abs(g.values[c] - 0.5 * (pair[0][c] + pair[1][c])));
    }

    double naive = 0.0;
    for (int t = 0; t < 50; ++t) {
        const Coord p{q(rng), q(rng)};
        const double sigma = sig(rng);
        for (bool normalize : {true, false}) {
            const auto g = generate({p, sigma, normalize}, cb);
            const auto e = oracle::rbf_generate(p, w, {10, 10}, sigma, normalize);
            for (std::size_t c = 0; c < 6; ++c) naive = std::max(naive, std::abs(g.values[c] - e[c]));
        }
    }
    return {one_hot <= 1e-6 && hull_violation <= 0.0 && midpoint <= 1e-9 && naive <= 1e-12,
            fmt("one-hot %.3g, hull violation %.3g, midpoint %.3g, naive oracle %.3g", one_hot, hull_violation,
                midpoint, naive)};
}

// --- 8 ----------------------------------------------------------------------------

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

int cli_code(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    return cli::run(args, out, err);
}

std::string be32(std::uint32_t v) {
    return {char(v >> 24), char((v >> 16) & 0xff), char((v >> 8) & 0xff), char(v & 0xff)};
}

Outcome determinism_and_io() {
    TempDir tmp;
    std::vector<std::string> failures;

    // Labeled RGB CSV shared by the training runs.
    const auto rgb = labeled_rgb(400, 8);
    {
        std::ofstream f(tmp / "rgb.csv");
        f.precision(17);
        f << "r,g,b,label\n";
        for (std::size_t i = 0; i < rgb.size(); ++i) {
            const auto p = rgb.pattern(i);
            f << p[0] << "," << p[1] << "," << p[2] << "," << (*rgb.labels())[i] << "\n";
        }
    }
    tmp.write("rgb.anchors", "grid 10 10\nred 2 2\ngreen 2 7\nblue 7 4.5\n");
    const auto csv = (tmp / "rgb.csv").string(), anchors = (tmp / "rgb.anchors").string();

    for (const std::string algo : {"som", "stm"}) {
        for (const std::string mode : {"batch", "online"}) {
            std::vector<std::string> files;
            for (const std::string t : {"1", "1", "4"}) {
                const auto out = (tmp / (algo + mode + t + std::to_string(files.size()) + ".stm")).string();
                const int code = cli_code({"train", "--algo", algo, "--mode", mode, "--grid", "10x10", "--data",
                                           csv, "--label-column", "label", "--anchors", anchors, "--seed", "99",
                                           "--epochs", "20", "--threads", t, "--out", out});
                if (code != 0) failures.push_back("train " + algo + " " + mode + " exit " + std::to_string(code));
                files.push_back(out);
            }
            if (slurp(files[0]) != slurp(files[1])) failures.push_back(algo + " " + mode + ": runs differ");
            if (slurp(files[0]) != slurp(files[2])) failures.push_back(algo + " " + mode + ": threads differ");
            if (slurp(files[0] + ".history.csv") != slurp(files[2] + ".history.csv"))
                failures.push_back(algo + " " + mode + ": history differs");

            save_model(load_model(files[0]), tmp / "resaved.stm");
            if (slurp(files[0]) != slurp(tmp / "resaved.stm")) failures.push_back("round trip differs");
        }
    }

    // Malformed inputs and the exit code each must produce.
    const std::string px(4, '\x10');
    const auto good_img = tmp.write("img.idx", be32(0x803) + be32(1) + be32(2) + be32(2) + px).string();
    const auto model = (tmp / "rejected.stm").string();
    const std::vector<std::pair<std::vector<std::string>, int>> cases{
        {{"--data", tmp.write("m.idx", be32(0x802) + be32(1) + be32(2) + be32(2) + px).string(), "--format", "idx"}, 3},
        {{"--data", tmp.write("t.idx", be32(0x803) + be32(3) + be32(2) + be32(2) + px).string(), "--format", "idx"}, 3},
        {{"--data", good_img, "--labels", tmp.write("l.idx", be32(0x801) + be32(2) + "ab").string()}, 3},
        {{"--data", tmp.write("r.csv", "a,b\n1,2\n3\n").string()}, 3},
        {{"--data", tmp.write("n.csv", "a,b\n1,2\n3,abc\n").string()}, 3},
        {{"--data", csv, "--label-column", "colour"}, 2},
        {{"--data", csv, "--label-column", "label", "--anchors", tmp.write("o.anchors", "grid 10 10\nred 12 3\n").string()}, 2},
        {{"--data", csv, "--label-column", "label",
          "--anchors", tmp.write("d.anchors", "grid 10 10\nred 1 1\nred 2 2\n").string()}, 2},
        {{"--data", csv, "--label-column", "label", "--anchors", tmp.write("g.anchors", "grid 5 5\nred 1 1\n").string()}, 2},
        {{"--data", csv, "--label-column", "label",
          "--anchors", tmp.write("c.anchors", "grid 10 10\nred 1 1\ngreen 2 2\n").string()}, 2},
    };
    for (const auto& [extra, expected] : cases) {
        std::vector<std::string> args{"train", "--algo", "stm", "--grid", "10x10", "--out", model, "--no-history"};
        args.insert(args.end(), extra.begin(), extra.end());
        if (std::find(extra.begin(), extra.end(), "--anchors") == extra.end()) args[2] = "som";
        const int code = cli_code(args);
        if (code != expected) {
            failures.push_back("'" + extra[1] + "' exit " + std::to_string(code) + " (want " +
                               std::to_string(expected) + ")");
        }
    }
    auto bytes = slurp(tmp / "stmbatch10.stm");
    bytes[4] = 2;
    if (cli_code({"inspect", "--model", tmp.write("v.stm", bytes).string()}) != 3)
        failures.push_back("model version mismatch not rejected");
    bytes[0] = 'X';
    if (cli_code({"inspect", "--model", tmp.write("b.stm", bytes).string()}) != 3)
        failures.push_back("model magic not rejected");

    std::string detail = fmt("4 training configurations x 3 runs, %zu malformed fixtures", cases.size() + 2);
    for (const auto& f : failures) detail += "; " + f;
    return {failures.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    if (argc == 3 && std::string(argv[1]) == "--only") only = std::atoi(argv[2]);

    const std::vector<Criterion> criteria{
        {1, "energy descent (batch k-means)", 5, energy_descent},
        {2, "oracle equivalence with brute-force Lloyd", 5, oracle_equivalence},
        {3, "family degenerations", 10, degenerations},
        {4, "SOM topographic order on RGB (1D K=50, 2D 20x20)", 30, topographic_order},
        {5, "STM on RGB with three anchors", 30, rgb_anchors},
        {6, "STM on 5,000 MNIST digits", 300, mnist},
        {7, "generation contracts", 1, generation_contracts},
        {8, "determinism and I/O rejection", 10, determinism_and_io},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        if (only && c.id != only) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < c.budget_s;
        const bool pass = o.pass && in_time;
        failed += pass ? 0 : 1;
        std::cout << (pass ? "PASS" : "FAIL") << "  [" << c.id << "] " << c.name << ": " << o.detail
                  << fmt(" (%.2f s, budget %.0f s%s)", secs, c.budget_s, in_time ? "" : ", OVER BUDGET") << "\n"
                  << std::flush;
    }
    std::cout << (failed ? fmt("%d criterion(s) failed", failed) : std::string("all criteria passed")) << "\n";
    return failed ? 1 : 0;
}
