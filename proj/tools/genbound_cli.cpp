// genbound: construct zero-loss ReLU networks, train them, and evaluate
// Chamfer-distance generalization bounds from the command line.
//
// Exit codes: 0 success, 1 configuration error, 2 data error,
// 3 self-check assertion failure.

#include <genbound/bounds.hpp>
#include <genbound/constructor.hpp>
#include <genbound/data_io.hpp>
#include <genbound/format.hpp>
#include <genbound/harness.hpp>
#include <genbound/model_io.hpp>
#include <genbound/trainer.hpp>

#include "CLI11.hpp"
#include "json.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace genbound;
using json = nlohmann::json;

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitSelfCheck = 3;

std::vector<Index> parse_index_list(const std::string& text) {
    std::vector<Index> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(cell, &used);
            if (used != cell.size()) throw std::invalid_argument(cell);
            out.push_back(Index(v));
        } catch (const std::exception&) {
            throw InvalidConfig("not an integer list: '" + text + "'");
        }
    }
    if (out.empty()) throw InvalidConfig("empty integer list");
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << text;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json report_json(const BoundReport<double>& r) {
    return json{{"train_error", r.train_error},
                {"test_error", r.test_error},
                {"chamfer_sq", r.chamfer_sq},
                {"test_nn_error", r.test_nn_error},
                {"lip_g_bound", r.lip_g_bound},
                {"c_theta", r.c_theta},
                {"zero_loss_bound", optional_json(r.zero_loss_bound)},
                {"delta", r.delta},
                {"general_bound", r.general_bound},
                {"experimental_bound", r.experimental_bound},
                {"apriori_bound", r.apriori_bound},
                {"loss_discrepancy", r.loss_discrepancy},
                {"gamma", optional_json(r.gamma)},
                {"R", r.radius},
                {"diam", r.diameter}};
}

struct ConstructArgs {
    std::string data, arch, out, report;
    double tol = kDefaultRankTol;
};

int run_construct(const ConstructArgs& a) {
    const Datasetd data = read_dataset_csv(a.data);
    const Architecture arch =
        a.arch.empty() ? Architecture({data.input_dim(), data.input_dim(), data.label_dim()})
                       : Architecture(parse_index_list(a.arch));
    const auto rep = construct_zero_loss(data, arch, a.tol);
    save_model(a.out, rep.params);
    const json j{{"dims", arch.dims()},
                 {"n", data.size()},
                 {"alpha", rep.alpha},
                 {"achieved_train_error", rep.achieved_train_error},
                 {"w1_projectivity_defect", rep.w1_projectivity_defect},
                 {"norm_product", lipschitz_product(rep.params, 2)}};
    write_text(a.report, j.dump(2) + "\n");
    return 0;
}

struct TrainArgs {
    std::string data, init = "random", arch, out, trace, reduction = "sum";
    std::uint64_t init_seed = 0;
    bool no_biases = false;
    TrainConfig config;
};

int run_train(TrainArgs a) {
    const Datasetd data = read_dataset_csv(a.data);
    NetworkParamsd init;
    if (a.init == "random") {
        const Architecture arch =
            a.arch.empty() ? Architecture({data.input_dim(), data.input_dim(), data.label_dim()})
                           : Architecture(parse_index_list(a.arch));
        init = random_init<double>(arch, a.init_seed);
    } else if (a.init == "zl") {
        const Architecture arch =
            a.arch.empty() ? Architecture({data.input_dim(), data.input_dim(), data.label_dim()})
                           : Architecture(parse_index_list(a.arch));
        init = construct_zero_loss(data, arch).params;
    } else {
        init = load_model(a.init);
    }
    if (a.reduction == "sum") {
        a.config.reduction = LossReduction::Sum;
    } else if (a.reduction == "component_mean") {
        a.config.reduction = LossReduction::ComponentMean;
    } else {
        throw InvalidConfig("--reduction must be sum or component_mean");
    }
    a.config.train_biases = !a.no_biases;

    const auto trace = sgd_train(init, data, a.config);
    save_model(a.out, trace.params);
    if (!a.trace.empty()) {
        std::ostringstream csv;
        csv << "epoch,train_error\n";
        for (std::size_t e = 0; e < trace.epoch_train_error.size(); ++e) {
            csv << e + 1 << ',' << format_double(trace.epoch_train_error[e]) << '\n';
        }
        write_text(a.trace, csv.str());
    }
    std::cerr << "epochs " << trace.epoch_train_error.size() << ", final train error "
              << format_double(trace.epoch_train_error.back())
              << (trace.converged ? " (converged)\n" : " (not converged)\n");
    return 0;
}

struct BoundArgs {
    std::string model, train, test, out;
    double delta = 1.0;
    bool optimize_delta = false;
};

int run_bound(const BoundArgs& a) {
    const NetworkParamsd params = load_model(a.model);
    const Datasetd train = read_dataset_csv(a.train);
    const Datasetd test = read_dataset_csv(a.test);
    const auto r = compute_bound_report(params, train, test, a.delta, a.optimize_delta);
    write_text(a.out, report_json(r).dump(2) + "\n");
    return 0;
}

struct ExperimentArgs {
    std::string config, output;
    bool self_check = false;
};

int run_experiment_cmd(const ExperimentArgs& a) {
    std::ifstream in(a.config);
    if (!in) throw InvalidConfig("cannot open config " + a.config);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InvalidConfig(a.config + ": " + e.what());
    }
    ExperimentConfig cfg = ExperimentConfig::from_json(j);
    if (!a.output.empty()) cfg.output_path = a.output;

    const auto rows = depth_sweep(cfg);
    write_text(cfg.output_path, rows_to_csv(rows));

    for (Mode m : {Mode::ZL, Mode::TFZL, Mode::RI}) {
        try {
            const auto s = summarize_gamma(rows, m);
            std::cerr << to_string(m) << " gamma: min " << s.min << " max " << s.max << " mean "
                      << s.mean << " (" << s.count << " rows, " << s.excluded_undefined
                      << " undefined, " << s.excluded_nonconverged << " not converged)\n";
        } catch (const NoValidRows&) {
        }
    }
    if (a.self_check) {
        const auto problems = self_check(rows);
        for (const auto& p : problems) std::cerr << "self-check: " << p << '\n';
        if (!problems.empty()) return kExitSelfCheck;
    }
    return 0;
}

struct RankArgs {
    std::string images, labels, n_grid = "50,100,200,350,550,1000,2000", out;
    std::uint64_t seed = 0;
    double tol = kDefaultRankTol;
};

int run_rank(const RankArgs& a) {
    const RawMnist raw = load_mnist_idx(a.images, a.labels);
    const auto rows = rank_study(raw, parse_index_list(a.n_grid), a.seed, a.tol);
    std::ostringstream csv;
    csv << "n,rank,seed,tol\n";
    for (const auto& r : rows) {
        csv << r.n << ',' << r.rank << ',' << a.seed << ',' << format_double(a.tol) << '\n';
    }
    write_text(a.out, csv.str());
    return 0;
}

struct SampleArgs {
    std::string images, labels, synthetic, label_law = "one_hot", out;
    Index n = 0;
    std::uint64_t seed = 0;
};

int run_sample(const SampleArgs& a) {
    DatasetProvenance prov;
    prov.seed = a.seed;
    prov.n = a.n;
    Datasetd data;
    if (!a.synthetic.empty()) {
        const auto dims = parse_index_list(a.synthetic);
        if (dims.size() != 2) throw InvalidConfig("--synthetic expects M0,Q");
        data = synthetic_dataset(dims[0], dims[1], a.n, a.seed, parse_label_law(a.label_law));
        prov.source = "synthetic:" + a.label_law;
        prov.normalization = "standard_gaussian_inputs";
    } else {
        if (a.images.empty() || a.labels.empty()) {
            throw InvalidConfig("sample needs --images and --labels, or --synthetic");
        }
        const RawMnist raw = load_mnist_idx(a.images, a.labels);
        prov.indices = sample_indices_with_coverage(raw.digits, a.n, a.seed);
        data.inputs.resize(raw.images.rows(), a.n);
        std::vector<int> digits;
        for (Index k = 0; k < a.n; ++k) {
            data.inputs.col(k) = raw.images.col(prov.indices[std::size_t(k)]);
            digits.push_back(raw.digits[std::size_t(prov.indices[std::size_t(k)])]);
        }
        data.labels = one_hot_labels(digits, 10);
        prov.source = "idx:" + a.images;
        prov.normalization = "pixels/255";
    }
    write_dataset_csv(a.out, data);
    write_provenance(a.out + ".meta.json", prov);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Zero-loss ReLU construction and Chamfer generalization bounds"};
    app.require_subcommand(1);

    ConstructArgs ca;
    auto* construct = app.add_subcommand("construct", "closed-form zero-loss minimizer");
    construct->add_option("--data", ca.data, "training set CSV")->required();
    construct->add_option("--arch", ca.arch, "widths M0,M1,...,Q (default M0,M0,Q)");
    construct->add_option("--out", ca.out, "model JSON")->required();
    construct->add_option("--report", ca.report, "construction report JSON (default stdout)");
    construct->add_option("--tol", ca.tol, "relative rank tolerance");

    TrainArgs ta;
    auto* train = app.add_subcommand("train", "SGD from random, constructed or saved weights");
    train->add_option("--data", ta.data, "training set CSV")->required();
    train->add_option("--init", ta.init, "random | zl | path to model JSON");
    train->add_option("--arch", ta.arch, "widths for --init random|zl");
    train->add_option("--init-seed", ta.init_seed);
    train->add_option("--epochs", ta.config.epochs);
    train->add_option("--lr", ta.config.learning_rate);
    train->add_option("--batch-size", ta.config.batch_size);
    train->add_option("--seed", ta.config.seed, "shuffling seed");
    train->add_option("--max-extra-epochs", ta.config.max_extra_epochs);
    train->add_option("--reduction", ta.reduction, "sum | component_mean");
    train->add_flag("--no-biases", ta.no_biases, "keep biases fixed");
    train->add_option("--out", ta.out, "trained model JSON")->required();
    train->add_option("--trace", ta.trace, "per-epoch train error CSV");

    BoundArgs ba;
    auto* bound = app.add_subcommand("bound", "all bounds for a model and train/test data");
    bound->add_option("--model", ba.model)->required();
    bound->add_option("--train", ba.train)->required();
    bound->add_option("--test", ba.test)->required();
    bound->add_option("--delta", ba.delta, "split parameter of the general bound");
    bound->add_flag("--optimize-delta", ba.optimize_delta);
    bound->add_option("--out", ba.out, "report JSON (default stdout)");

    ExperimentArgs ea;
    auto* experiment = app.add_subcommand("experiment", "run a configured sweep to CSV");
    experiment->add_option("--config", ea.config)->required();
    experiment->add_option("--output", ea.output, "overrides output_path");
    experiment->add_flag("--self-check", ea.self_check, "fail with exit 3 on invalid bounds");

    RankArgs ra;
    auto* rank = app.add_subcommand("mnist-rank", "numeric rank of sampled MNIST input matrices");
    rank->add_option("--images", ra.images)->required();
    rank->add_option("--labels", ra.labels)->required();
    rank->add_option("--n-grid", ra.n_grid);
    rank->add_option("--seed", ra.seed);
    rank->add_option("--tol", ra.tol);
    rank->add_option("--out", ra.out, "CSV (default stdout)");

    SampleArgs sa;
    auto* sample = app.add_subcommand("sample", "export a sampled dataset as CSV");
    sample->add_option("--images", sa.images);
    sample->add_option("--labels", sa.labels);
    sample->add_option("--synthetic", sa.synthetic, "M0,Q for Gaussian inputs");
    sample->add_option("--label-law", sa.label_law, "gaussian | one_hot | signed");
    sample->add_option("--n", sa.n)->required();
    sample->add_option("--seed", sa.seed);
    sample->add_option("--out", sa.out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*construct) return run_construct(ca);
        if (*train) return run_train(ta);
        if (*bound) return run_bound(ba);
        if (*experiment) return run_experiment_cmd(ea);
        if (*rank) return run_rank(ra);
        if (*sample) return run_sample(sa);
    } catch (const InvalidConfig& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const BadArchitecture& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    }
    return 0;
}
