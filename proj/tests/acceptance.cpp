// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// hard criterion fails. MNIST criteria read IDX files from GENBOUND_MNIST_DIR
// (environment variable, else the configured build default) and report SKIP
// when the files are absent.

#include <genbound/bounds.hpp>
#include <genbound/constructor.hpp>
#include <genbound/data_io.hpp>
#include <genbound/harness.hpp>
#include <genbound/trainer.hpp>

#include "test_support.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

namespace {

using namespace genbound;
using genbound::testing::gaussian;
using genbound::testing::uniform_int;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Verdict { Pass, Fail, Skip, Report };

struct Outcome {
    Verdict verdict;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

Outcome pass_if(bool ok, const std::string& detail) {
    return {ok ? Verdict::Pass : Verdict::Fail, detail};
}

std::filesystem::path mnist_dir() {
    if (const char* env = std::getenv("GENBOUND_MNIST_DIR")) return env;
    return GENBOUND_MNIST_DIR;
}

std::optional<MnistPaths> mnist_paths() {
    const auto dir = mnist_dir();
    MnistPaths p{(dir / "train-images-idx3-ubyte").string(), (dir / "train-labels-idx1-ubyte").string(),
                 (dir / "t10k-images-idx3-ubyte").string(), (dir / "t10k-labels-idx1-ubyte").string()};
    for (const auto& f : {p.train_images, p.train_labels, p.test_images, p.test_labels}) {
        if (!std::filesystem::exists(f)) return std::nullopt;
    }
    return p;
}

Architecture random_eligible(std::mt19937_64& rng) {
    return genbound::testing::random_non_increasing(rng, uniform_int(rng, 1, 6), 64);
}

Outcome zero_loss_construction() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(101);
    double worst_rel = 0, worst_norm = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const Architecture arch = random_eligible(rng);
        const Index n = uniform_int(rng, 1, arch.input_dim());
        const Datasetd data{gaussian(rng, arch.input_dim(), n), gaussian(rng, arch.output_dim(), n)};
        const auto rep = construct_zero_loss(data, arch);
        const double label_energy = data.labels.squaredNorm() / double(n);
        worst_rel = std::max(worst_rel, rep.achieved_train_error / label_energy);
        worst_norm = std::max(worst_norm, std::abs(lipschitz_product(rep.params, 2) - 1.0));
    }
    const double secs = seconds_since(t0);
    return pass_if(worst_rel <= 1e-10 && worst_norm <= 1e-9 && secs < 30,
                   "max relative train error " + fmt(worst_rel) + ", max |prod norms - 1| " +
                       fmt(worst_norm) + ", " + fmt(secs) + " s");
}

Outcome zero_loss_bound_validity() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(202);
    double worst = -std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 100; ++trial) {
        const Architecture arch = random_eligible(rng);
        const Index n = uniform_int(rng, 1, arch.input_dim());
        const Datasetd train{gaussian(rng, arch.input_dim(), n), gaussian(rng, arch.output_dim(), n)};
        const Index m = uniform_int(rng, 1, 30);
        const Datasetd test{gaussian(rng, arch.input_dim(), m), gaussian(rng, arch.output_dim(), m)};
        const auto rep = construct_zero_loss(train, arch);
        worst = std::max(worst, mse_error(rep.params, test) - zero_loss_bound(rep.params, train, test));
    }
    const double secs = seconds_since(t0);
    return pass_if(worst <= 1e-9 && secs < 10,
                   "max (test error - bound) " + fmt(worst) + ", " + fmt(secs) + " s");
}

Outcome general_bound_validity() {
    std::mt19937_64 rng(303);
    int cases = 0, held = 0, trained = 0;
    double worst = -std::numeric_limits<double>::infinity();
    double min_train = std::numeric_limits<double>::infinity();
    while (trained < 30) {
        const Index m0 = uniform_int(rng, 4, 12);
        const Index q = uniform_int(rng, 1, 3);
        // More samples than inputs, so exact interpolation is not on offer.
        const Index n = uniform_int(rng, m0 + 1, 3 * m0);
        std::vector<Index> dims{m0};
        const Index depth = uniform_int(rng, 1, 3);
        for (Index l = 0; l < depth; ++l) dims.push_back(uniform_int(rng, q, 16));
        dims.push_back(q);
        const Datasetd train = synthetic_dataset(m0, q, n, rng(), LabelLaw::Gaussian);
        const Datasetd test = synthetic_dataset(m0, q, uniform_int(rng, 5, 30), rng(), LabelLaw::Gaussian);
        TrainConfig cfg;
        cfg.epochs = 20;
        cfg.learning_rate = 0.01;
        cfg.seed = rng();
        TrainTrace<double> trace;
        try {
            trace = sgd_train(random_init(Architecture(dims), rng()), train, cfg);
        } catch (const DivergenceDetected&) {
            continue;
        }
        const double e_train = mse_error(trace.params, train);
        if (!(e_train > 0)) continue;
        ++trained;
        min_train = std::min(min_train, e_train);
        const double e_test = mse_error(trace.params, test);
        for (double delta : {0.25, 1.0, 4.0}) {
            const double gap = e_test - general_bound(trace.params, train, test, delta);
            worst = std::max(worst, gap);
            ++cases;
            if (gap <= 1e-9) ++held;
        }
    }
    return pass_if(held == cases && cases == 90,
                   std::to_string(held) + "/" + std::to_string(cases) + " cases hold, max (test - bound) " +
                       fmt(worst) + ", min train error " + fmt(min_train));
}

Outcome apriori_validity() {
    std::mt19937_64 rng(404);
    int held = 0;
    double tightest = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Index> dims{uniform_int(rng, 1, 8)};
        const Index depth = uniform_int(rng, 1, 4);
        for (Index l = 0; l <= depth; ++l) dims.push_back(uniform_int(rng, 1, 8));
        const Architecture arch(dims);
        const NetworkParamsd p = genbound::testing::random_params(rng, arch, 1.5, 0.5);
        const Datasetd train = genbound::testing::random_dataset(rng, arch.input_dim(), arch.output_dim(),
                                                                  uniform_int(rng, 1, 20));
        const Datasetd test = genbound::testing::random_dataset(rng, arch.input_dim(), arch.output_dim(),
                                                                 uniform_int(rng, 1, 20));
        const double gap = loss_discrepancy(p, train, test);
        const double bound = apriori_bound(p, train, test);
        if (gap <= bound) ++held;
        tightest = std::min(tightest, bound / std::max(gap, 1e-300));
    }
    return pass_if(held == 100, std::to_string(held) + "/100 hold, smallest bound/discrepancy " + fmt(tightest));
}

Outcome projectivity() {
    std::mt19937_64 rng(505);
    double worst_defect = 0, worst_shift = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const Architecture arch = random_eligible(rng);
        if (arch.input_dim() < 2) continue;
        const Index n = uniform_int(rng, 1, arch.input_dim() - 1);
        const Datasetd train{gaussian(rng, arch.input_dim(), n), gaussian(rng, arch.output_dim(), n)};
        const Datasetd test{gaussian(rng, arch.input_dim(), 20), gaussian(rng, arch.output_dim(), 20)};
        const auto rep = construct_zero_loss(train, arch);
        worst_defect = std::max(worst_defect, rep.w1_projectivity_defect);
        const MatrixXd proj = orthogonal_projector(train.inputs);
        const Datasetd projected{proj * test.inputs, test.labels};
        const auto& w1 = rep.params.weights[0];
        worst_shift = std::max(worst_shift, std::abs(chamfer_unidirectional(projected, train, w1).distance -
                                                     chamfer_unidirectional(test, train, w1).distance));
    }
    return pass_if(worst_defect <= 1e-9 && worst_shift <= 1e-9,
                   "max ||W1 (I - P)|| " + fmt(worst_defect) + ", max Chamfer change " + fmt(worst_shift));
}

double kink_margin(const NetworkParamsd& p, const MatrixXd& xs) {
    double margin = std::numeric_limits<double>::infinity();
    MatrixXd a = xs;
    for (std::size_t l = 0; l + 1 < p.weights.size(); ++l) {
        const MatrixXd pre = (p.weights[l] * a).colwise() + p.biases[l];
        margin = std::min(margin, pre.cwiseAbs().minCoeff());
        a = relu(pre);
    }
    return margin;
}

Outcome gradient_correctness() {
    std::mt19937_64 rng(606);
    const double h = 1e-6;
    double worst = 0;
    int checked = 0;
    while (checked < 50) {
        std::vector<Index> dims{uniform_int(rng, 1, 6)};
        const Index depth = uniform_int(rng, 1, 3);
        for (Index l = 0; l <= depth; ++l) dims.push_back(uniform_int(rng, 1, 6));
        const Architecture arch(dims);
        const NetworkParamsd p = genbound::testing::random_params(rng, arch, 1.0, 0.5);
        const Datasetd batch = genbound::testing::random_dataset(rng, arch.input_dim(), arch.output_dim(),
                                                                  uniform_int(rng, 1, 5));
        if (kink_margin(p, batch.inputs) < 1e-3) continue;
        const auto g = backprop_gradient(p, batch);
        double diff_sq = 0, norm_sq = 0;
        auto probe = [&](const std::function<double&(NetworkParamsd&)>& pick, double exact) {
            NetworkParamsd plus = p, minus = p;
            pick(plus) += h;
            pick(minus) -= h;
            const double fd = (mse_error(plus, batch) - mse_error(minus, batch)) / (2 * h);
            diff_sq += (fd - exact) * (fd - exact);
            norm_sq += exact * exact;
        };
        for (std::size_t l = 0; l < p.weights.size(); ++l) {
            for (Index r = 0; r < p.weights[l].rows(); ++r) {
                for (Index c = 0; c < p.weights[l].cols(); ++c) {
                    probe([&](NetworkParamsd& q) -> double& { return q.weights[l](r, c); }, g.weights[l](r, c));
                }
                probe([&](NetworkParamsd& q) -> double& { return q.biases[l](r); }, g.biases[l](r));
            }
        }
        worst = std::max(worst, std::sqrt(diff_sq) / std::max(std::sqrt(norm_sq), 1e-300));
        ++checked;
    }
    return pass_if(worst <= 1e-5, "max relative gradient error " + fmt(worst) + " over 50 instances");
}

Outcome stationarity() {
    std::mt19937_64 rng(707);
    double worst_move = 0, worst_gamma = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const Architecture arch = genbound::testing::random_non_increasing(rng, uniform_int(rng, 1, 3), 24, 4);
        const Index n = uniform_int(rng, 1, arch.input_dim());
        const Datasetd train = genbound::testing::unit_scale_dataset(arch.input_dim(), arch.output_dim(), n, rng());
        const Datasetd test = genbound::testing::unit_scale_dataset(arch.input_dim(), arch.output_dim(), 20, rng());
        const auto rep = construct_zero_loss(train, arch);
        TrainConfig cfg;  // 70 epochs, lr 0.1, biases trained
        cfg.seed = rng();
        const auto trace = sgd_train(rep.params, train, cfg);
        for (std::size_t l = 0; l < rep.params.weights.size(); ++l) {
            worst_move = std::max(worst_move, (trace.params.weights[l] - rep.params.weights[l]).cwiseAbs().maxCoeff());
            worst_move = std::max(worst_move, (trace.params.biases[l] - rep.params.biases[l]).cwiseAbs().maxCoeff());
        }
        const double g_zl = experimental_bound(rep.params, train, test) / mse_error(rep.params, test);
        const double g_tf = experimental_bound(trace.params, train, test) / mse_error(trace.params, test);
        worst_gamma = std::max(worst_gamma, std::abs(g_zl - g_tf));
    }
    return pass_if(worst_move <= 1e-12 && worst_gamma <= 1e-6,
                   "max parameter change " + fmt(worst_move) + ", max |gamma_TFZL - gamma_ZL| " + fmt(worst_gamma));
}

ExperimentConfig mnist_config(const MnistPaths& paths, std::vector<Mode> modes) {
    ExperimentConfig c;
    c.modes = std::move(modes);
    c.n_grid = {20, 50, 100, 200};
    c.m = 20;
    c.depths = {1};
    c.use_biases = false;
    c.mnist = paths;
    return c;
}

std::vector<ExperimentRow> zl_rows;

Outcome mnist_zero_loss_gamma() {
    const auto paths = mnist_paths();
    if (!paths) return {Verdict::Skip, "no MNIST IDX files under " + mnist_dir().string()};
    const auto t0 = std::chrono::steady_clock::now();
    zl_rows = run_experiment(mnist_config(*paths, {Mode::ZL}));
    const double secs = seconds_since(t0);
    std::ostringstream per_n;
    bool all_ok = true;
    double min_gamma = std::numeric_limits<double>::infinity();
    for (const auto& r : zl_rows) {
        if (!r.ok() || !r.gamma) {
            all_ok = false;
            per_n << " n=" << r.n << ":" << r.status;
            continue;
        }
        min_gamma = std::min(min_gamma, *r.gamma);
        per_n << " n=" << r.n << ":" << fmt(*r.gamma);
    }
    if (!all_ok || zl_rows.size() != 4) return {Verdict::Fail, "cells failed:" + per_n.str()};
    const auto s = summarize_gamma(zl_rows, Mode::ZL, 20, 200);
    return pass_if(min_gamma >= 1.0 && s.mean >= 1.0 && s.mean <= 1.6 && secs < 300,
                   "gamma" + per_n.str() + "; min " + fmt(s.min) + " max " + fmt(s.max) + " mean " +
                       fmt(s.mean) + ", " + fmt(secs) + " s");
}

Outcome mnist_rank() {
    const auto paths = mnist_paths();
    if (!paths) return {Verdict::Skip, "no MNIST IDX files under " + mnist_dir().string()};
    const RawMnist raw = load_mnist_idx(paths->train_images, paths->train_labels);
    if (raw.size() < 2000) return {Verdict::Fail, "training split has only " + std::to_string(raw.size()) + " images"};
    const auto rows = rank_study(raw, {2000}, 0, kDefaultRankTol);
    const Index rank = rows.front().rank;
    return pass_if(rank >= 450 && rank <= 650, "numeric rank at n=2000: " + std::to_string(rank));
}

// Per-sample SGD at lr 0.1 sees curvature 0.2 |x|^2 / Q on MNIST, above the
// stability limit for images with |x|^2 > 100, so rounding-level residuals at
// the constructed minimizer can grow over 70 epochs. Logged, not gated.
Outcome mnist_tfzl_drift() {
    const auto paths = mnist_paths();
    if (!paths) return {Verdict::Skip, "no MNIST IDX files under " + mnist_dir().string()};
    const auto rows = run_experiment(mnist_config(*paths, {Mode::ZL, Mode::TFZL}));
    std::ostringstream detail;
    for (const auto& t : rows) {
        if (t.mode != Mode::TFZL) continue;
        const auto z = std::find_if(rows.begin(), rows.end(), [&](const ExperimentRow& r) {
            return r.mode == Mode::ZL && r.n == t.n;
        });
        if (!t.ok() || z == rows.end() || !t.gamma || !z->gamma) {
            detail << " n=" << t.n << ": " << t.status << ";";
            continue;
        }
        detail << " n=" << t.n << ": |gamma diff| " << fmt(std::abs(*t.gamma - *z->gamma)) << ", train error "
               << fmt(t.train_error) << ";";
    }
    const auto problems = self_check(rows);
    detail << " self-check " << (problems.empty() ? "clean" : std::to_string(problems.size()) + " violation(s)");
    return {Verdict::Report, "batch 1, lr 0.1:" + detail.str()};
}

Outcome mnist_random_init_gamma() {
    const auto paths = mnist_paths();
    if (!paths) return {Verdict::Skip, "no MNIST IDX files under " + mnist_dir().string()};
    auto cfg = mnist_config(*paths, {Mode::RI});
    const auto t0 = std::chrono::steady_clock::now();
    const auto rows = run_experiment(cfg);
    const double secs = seconds_since(t0);
    std::ostringstream detail;
    try {
        const auto ri = summarize_gamma(rows, Mode::RI, 20, 200);
        const auto zl = summarize_gamma(zl_rows, Mode::ZL, 20, 200);
        detail << "mean RI gamma " << fmt(ri.mean) << " over " << ri.count << " runs ("
               << ri.excluded_nonconverged << " not converged), mean ZL gamma " << fmt(zl.mean) << ", ratio "
               << fmt(ri.mean / zl.mean) << " (target >= 5); base seed " << cfg.seed << ", "
               << cfg.ri_seeds << " seeds per n, " << fmt(secs) << " s";
        detail << (ri.mean >= 5 * zl.mean ? " [met]" : " [not met]");
    } catch (const Error& e) {
        detail << e.what();
    }
    return {Verdict::Report, detail.str()};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        Outcome (*run)();
    };
    const Criterion criteria[] = {
        {"1 zero-loss construction", zero_loss_construction},
        {"2 zero-loss bound validity", zero_loss_bound_validity},
        {"3 general bound validity on trained networks", general_bound_validity},
        {"4 a priori bound validity", apriori_validity},
        {"5 projectivity and projection-invariant Chamfer distance", projectivity},
        {"6 backprop vs central differences", gradient_correctness},
        {"7 stationarity of SGD at the constructed minimizer", stationarity},
        {"8 MNIST zero-loss gamma", mnist_zero_loss_gamma},
        {"9 MNIST input rank at n=2000", mnist_rank},
        {"10 MNIST random-init gamma (report only)", mnist_random_init_gamma},
        {"MNIST TFZL drift from ZL (report only)", mnist_tfzl_drift},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {Verdict::Fail, std::string("exception: ") + e.what()};
        }
        const char* tag = o.verdict == Verdict::Pass   ? "PASS"
                          : o.verdict == Verdict::Fail ? "FAIL"
                          : o.verdict == Verdict::Skip ? "SKIP"
                                                       : "REPORT";
        if (o.verdict == Verdict::Fail) ++failures;
        std::cout << "[" << tag << "] " << c.name << ": " << o.detail << std::endl;
    }
    std::cout << (failures ? "acceptance: FAILED (" + std::to_string(failures) + ")" : std::string("acceptance: OK"))
              << std::endl;
    return failures ? 1 : 0;
}
