#include <genbound/bounds.hpp>
#include <genbound/chamfer.hpp>
#include <genbound/constructor.hpp>
#include <genbound/format.hpp>
#include <genbound/harness.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

namespace genbound {

namespace {

using json = nlohmann::json;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

template <typename T>
T get_as(const json& j, const char* key) {
    try {
        return j.get<T>();
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string("config key '") + key + "': " + e.what());
    }
}

std::string require_string(const json& obj, const char* key) {
    if (!obj.contains(key)) throw InvalidConfig(std::string("config: missing '") + key + "'");
    return get_as<std::string>(obj.at(key), key);
}

int mode_rank(Mode m) { return static_cast<int>(m); }

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

TrainConfig train_config(const ExperimentConfig& c, std::uint64_t seed) {
    TrainConfig t;
    t.epochs = c.epochs;
    t.learning_rate = c.lr;
    t.batch_size = c.batch_size;
    t.seed = seed;
    t.convergence_train_error = c.convergence_train_error;
    t.max_extra_epochs = c.max_extra_epochs;
    t.train_biases = c.use_biases;
    t.reduction = c.reduction;
    return t;
}

void evaluate(ExperimentRow& row, const NetworkParamsd& params, const Datasetd& train,
              const Datasetd& test, double convergence) {
    row.train_error = mse_error(params, train);
    row.test_error = mse_error(params, test);
    row.chamfer_sq = chamfer_unidirectional(test, train, params.weights.front()).squared_distance;
    row.norm_product = lipschitz_product(params, 2);
    const double c = std::max(1.0, row.norm_product);
    row.bound = c * c * row.chamfer_sq;
    row.gamma.reset();
    if (row.test_error > 0) row.gamma = row.bound / row.test_error;
    row.converged = row.train_error < convergence;
}

ExperimentRow base_row(Mode mode, Index n, Index m, Index depth, const Architecture& arch,
                       int seed, const char* init) {
    ExperimentRow r;
    r.mode = mode;
    r.n = n;
    r.m = m;
    r.depth = depth;
    r.widths = arch;
    r.seed = seed;
    r.init = init;
    return r;
}

std::string error_status(const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    return "error: " + msg;
}

ExperimentRow aggregate_ri(const std::vector<ExperimentRow>& seeds) {
    ExperimentRow agg = seeds.front();
    agg.aggregate = true;
    agg.seed = -1;
    agg.train_error = agg.test_error = agg.chamfer_sq = agg.norm_product = agg.bound = 0;
    agg.wall_time_ms = 0;
    agg.gamma.reset();
    std::size_t used = 0;
    for (const auto& r : seeds) {
        agg.wall_time_ms += r.wall_time_ms;
        if (!r.ok() || !r.converged) continue;
        agg.train_error += r.train_error;
        agg.test_error += r.test_error;
        agg.chamfer_sq += r.chamfer_sq;
        agg.norm_product += r.norm_product;
        agg.bound += r.bound;
        ++used;
    }
    if (used == 0) {
        agg.converged = false;
        agg.status = "error: no converged seeds";
        return agg;
    }
    const double k = double(used);
    agg.train_error /= k;
    agg.test_error /= k;
    agg.chamfer_sq /= k;
    agg.norm_product /= k;
    agg.bound /= k;
    if (agg.test_error > 0) agg.gamma = agg.bound / agg.test_error;
    agg.converged = true;
    agg.status = "ok";
    return agg;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return splitmix64(splitmix64(splitmix64(splitmix64(base) ^ a) ^ b) ^ c);
}

std::string to_string(Mode mode) {
    switch (mode) {
        case Mode::ZL: return "ZL";
        case Mode::TFZL: return "TFZL";
        case Mode::RI: return "RI";
    }
    return "?";
}

Mode parse_mode(const std::string& name) {
    if (name == "ZL") return Mode::ZL;
    if (name == "TFZL") return Mode::TFZL;
    if (name == "RI") return Mode::RI;
    throw InvalidConfig("unknown mode '" + name + "' (ZL | TFZL | RI)");
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    if (!j.is_object()) throw InvalidConfig("config must be a JSON object");
    static const std::set<std::string> known{
        "modes",          "n_grid",     "m",          "depths",
        "widths",         "ri_seeds",   "epochs",     "lr",
        "batch_size",     "tol",        "data",       "output_path",
        "seed",           "loss_reduction", "use_biases", "convergence_train_error",
        "max_extra_epochs", "n_cap",    "record_wall_time"};
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) throw InvalidConfig("config: unknown key '" + key + "'");
    }

    ExperimentConfig c;
    if (j.contains("modes")) {
        for (const auto& s : get_as<std::vector<std::string>>(j.at("modes"), "modes")) {
            c.modes.push_back(parse_mode(s));
        }
    }
    if (j.contains("n_grid")) c.n_grid = get_as<std::vector<Index>>(j.at("n_grid"), "n_grid");
    if (j.contains("m")) c.m = get_as<Index>(j.at("m"), "m");
    if (j.contains("depths")) c.depths = get_as<std::vector<Index>>(j.at("depths"), "depths");
    if (j.contains("widths")) {
        const auto& w = j.at("widths");
        if (w.is_string()) {
            c.width_policy = w.get<std::string>();
        } else {
            c.width_policy = "explicit";
            c.explicit_widths = get_as<std::vector<Index>>(w, "widths");
        }
    }
    if (j.contains("ri_seeds")) c.ri_seeds = get_as<int>(j.at("ri_seeds"), "ri_seeds");
    if (j.contains("epochs")) c.epochs = get_as<int>(j.at("epochs"), "epochs");
    if (j.contains("lr")) c.lr = get_as<double>(j.at("lr"), "lr");
    if (j.contains("batch_size")) c.batch_size = get_as<Index>(j.at("batch_size"), "batch_size");
    if (j.contains("tol")) c.tol = get_as<double>(j.at("tol"), "tol");
    if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j.at("seed"), "seed");
    if (j.contains("loss_reduction")) {
        const auto s = get_as<std::string>(j.at("loss_reduction"), "loss_reduction");
        if (s == "sum") {
            c.reduction = LossReduction::Sum;
        } else if (s == "component_mean") {
            c.reduction = LossReduction::ComponentMean;
        } else {
            throw InvalidConfig("loss_reduction must be 'sum' or 'component_mean'");
        }
    }
    if (j.contains("use_biases")) c.use_biases = get_as<bool>(j.at("use_biases"), "use_biases");
    if (j.contains("convergence_train_error")) {
        c.convergence_train_error =
            get_as<double>(j.at("convergence_train_error"), "convergence_train_error");
    }
    if (j.contains("max_extra_epochs")) {
        c.max_extra_epochs = get_as<int>(j.at("max_extra_epochs"), "max_extra_epochs");
    }
    if (j.contains("n_cap")) c.n_cap = get_as<Index>(j.at("n_cap"), "n_cap");
    if (j.contains("record_wall_time")) {
        c.record_wall_time = get_as<bool>(j.at("record_wall_time"), "record_wall_time");
    }
    if (j.contains("output_path")) {
        c.output_path = get_as<std::string>(j.at("output_path"), "output_path");
    }
    if (j.contains("data")) {
        const auto& d = j.at("data");
        if (!d.is_object()) throw InvalidConfig("config 'data' must be an object");
        if (d.contains("mnist_paths") == d.contains("synthetic_spec")) {
            throw InvalidConfig("config 'data' needs exactly one of mnist_paths, synthetic_spec");
        }
        if (d.contains("mnist_paths")) {
            const auto& p = d.at("mnist_paths");
            c.mnist = MnistPaths{require_string(p, "train_images"), require_string(p, "train_labels"),
                                 require_string(p, "test_images"), require_string(p, "test_labels")};
        } else {
            const auto& s = d.at("synthetic_spec");
            SyntheticSpec spec;
            if (s.contains("input_dim")) spec.input_dim = get_as<Index>(s.at("input_dim"), "input_dim");
            if (s.contains("label_dim")) spec.label_dim = get_as<Index>(s.at("label_dim"), "label_dim");
            if (s.contains("label_law")) {
                spec.law = parse_label_law(get_as<std::string>(s.at("label_law"), "label_law"));
            }
            if (s.contains("seed")) spec.seed = get_as<std::uint64_t>(s.at("seed"), "seed");
            c.synthetic = spec;
        }
    }
    c.validate();
    return c;
}

void ExperimentConfig::validate() const {
    for (Index n : n_grid) {
        if (n < 1) throw InvalidConfig("n_grid entries must be positive");
        if (n > n_cap) {
            throw InvalidConfig("n = " + std::to_string(n) + " exceeds n_cap " + std::to_string(n_cap));
        }
    }
    for (Index d : depths) {
        if (d < 1) throw InvalidConfig("depths must be >= 1");
    }
    if (m < 1) throw InvalidConfig("m must be positive");
    if (ri_seeds < 1) throw InvalidConfig("ri_seeds must be >= 1");
    if (!(tol > 0)) throw InvalidConfig("tol must be positive");
    train_config(*this, 0).validate();
    if (width_policy != "square" && width_policy != "lowering" && width_policy != "explicit") {
        throw InvalidConfig("widths must be 'square', 'lowering' or a list of hidden widths");
    }
    if (width_policy == "explicit") {
        for (Index d : depths) {
            if (d != Index(explicit_widths.size())) {
                throw InvalidConfig("explicit widths list has " +
                                    std::to_string(explicit_widths.size()) +
                                    " entries but depth grid contains " + std::to_string(d));
            }
        }
    }
    const bool needs_data = !modes.empty() && !n_grid.empty() && !depths.empty();
    if (needs_data && !mnist && !synthetic) {
        throw InvalidConfig("config needs data.mnist_paths or data.synthetic_spec");
    }
    if (mnist) {
        for (Index n : n_grid) {
            if (n < 10) throw InvalidConfig("MNIST cells need n >= 10 to cover all digits");
        }
        if (needs_data && m < 10) throw InvalidConfig("MNIST test set needs m >= 10");
    }
    if (synthetic && (synthetic->input_dim < 1 || synthetic->label_dim < 1 ||
                      synthetic->label_dim > synthetic->input_dim)) {
        throw InvalidConfig("synthetic_spec needs input_dim >= label_dim >= 1");
    }
}

Architecture architecture_for(const ExperimentConfig& config, Index depth, Index input_dim,
                              Index output_dim) {
    std::vector<Index> dims{input_dim};
    if (config.width_policy == "explicit") {
        if (Index(config.explicit_widths.size()) != depth) {
            throw InvalidConfig("explicit widths do not match depth " + std::to_string(depth));
        }
        dims.insert(dims.end(), config.explicit_widths.begin(), config.explicit_widths.end());
    } else if (config.width_policy == "lowering") {
        for (Index l = 1; l <= depth; ++l) {
            const double t = double(l) / double(depth + 1);
            dims.push_back(Index(std::llround(double(input_dim) - t * double(input_dim - output_dim))));
        }
    } else {
        dims.insert(dims.end(), std::size_t(depth), input_dim);
    }
    dims.push_back(output_dim);
    return Architecture(dims);
}

std::vector<ExperimentRow> run_experiment(const ExperimentConfig& config) {
    config.validate();
    std::vector<ExperimentRow> rows;
    if (config.modes.empty() || config.n_grid.empty() || config.depths.empty()) return rows;

    const auto wants = [&](Mode m) {
        return std::find(config.modes.begin(), config.modes.end(), m) != config.modes.end();
    };

    std::optional<RawMnist> train_raw;
    Datasetd test;
    Index input_dim = 0, output_dim = 0;
    if (config.mnist) {
        train_raw = load_mnist_idx(config.mnist->train_images, config.mnist->train_labels);
        const RawMnist test_raw = load_mnist_idx(config.mnist->test_images, config.mnist->test_labels);
        test = sample_with_digit_coverage(test_raw, config.m, derive_seed(config.seed, 1));
        input_dim = train_raw->images.rows();
        output_dim = 10;
    } else {
        const auto& s = *config.synthetic;
        test = synthetic_dataset(s.input_dim, s.label_dim, config.m, derive_seed(s.seed, 1), s.law);
        input_dim = s.input_dim;
        output_dim = s.label_dim;
    }

    const double conv = config.convergence_train_error;
    for (Index depth : config.depths) {
        const Architecture arch = architecture_for(config, depth, input_dim, output_dim);
        for (Index n : config.n_grid) {
            const Datasetd train =
                train_raw ? sample_with_digit_coverage(*train_raw, n, derive_seed(config.seed, 2, std::uint64_t(n)))
                          : synthetic_dataset(input_dim, output_dim, n,
                                              derive_seed(config.synthetic->seed, 2, std::uint64_t(n)),
                                              config.synthetic->law);

            std::optional<NetworkParamsd> zl;
            if (wants(Mode::ZL) || wants(Mode::TFZL)) {
                ExperimentRow row = base_row(Mode::ZL, n, config.m, depth, arch, 0, "construct");
                Timer t;
                try {
                    zl = construct_zero_loss(train, arch, config.tol).params;
                    evaluate(row, *zl, train, test, conv);
                } catch (const Error& e) {
                    row.status = error_status(e);
                }
                if (config.record_wall_time) row.wall_time_ms = t.ms();
                if (wants(Mode::ZL)) rows.push_back(row);
            }

            if (wants(Mode::TFZL)) {
                ExperimentRow row = base_row(Mode::TFZL, n, config.m, depth, arch, 0, "zl");
                Timer t;
                if (!zl) {
                    row.status = "error: construction failed";
                } else {
                    try {
                        const auto trace = sgd_train(
                            *zl, train,
                            train_config(config, derive_seed(config.seed, 3, std::uint64_t(depth),
                                                             std::uint64_t(n))));
                        evaluate(row, trace.params, train, test, conv);
                    } catch (const Error& e) {
                        row.status = error_status(e);
                    }
                }
                if (config.record_wall_time) row.wall_time_ms = t.ms();
                rows.push_back(row);
            }

            if (wants(Mode::RI)) {
                std::vector<ExperimentRow> seeds;
                for (int s = 0; s < config.ri_seeds; ++s) {
                    ExperimentRow row = base_row(Mode::RI, n, config.m, depth, arch, s, "he_normal");
                    Timer t;
                    try {
                        const auto init = random_init<double>(
                            arch, derive_seed(config.seed, 4, std::uint64_t(depth) << 32 | std::uint64_t(n),
                                              std::uint64_t(s)));
                        const auto trace = sgd_train(
                            init, train,
                            train_config(config, derive_seed(config.seed, 5,
                                                             std::uint64_t(depth) << 32 | std::uint64_t(n),
                                                             std::uint64_t(s))));
                        evaluate(row, trace.params, train, test, conv);
                    } catch (const Error& e) {
                        row.status = error_status(e);
                    }
                    if (config.record_wall_time) row.wall_time_ms = t.ms();
                    seeds.push_back(row);
                }
                rows.insert(rows.end(), seeds.begin(), seeds.end());
                rows.push_back(aggregate_ri(seeds));
            }
        }
    }
    sort_rows(rows);
    return rows;
}

std::vector<ExperimentRow> depth_sweep(const ExperimentConfig& config) {
    if (config.depths.empty()) return {};
    const Index probe_in = config.mnist ? 784 : (config.synthetic ? config.synthetic->input_dim : 1);
    const Index probe_out = config.mnist ? 10 : (config.synthetic ? config.synthetic->label_dim : 1);
    for (Index d : config.depths) {
        const Architecture arch = architecture_for(config, d, probe_in, probe_out);
        if (!arch.non_increasing()) {
            throw InvalidConfig("depth sweep: architecture " + arch.to_string() +
                                " has increasing widths");
        }
    }
    return run_experiment(config);
}

void sort_rows(std::vector<ExperimentRow>& rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const ExperimentRow& a, const ExperimentRow& b) {
        return std::make_tuple(mode_rank(a.mode), a.depth, a.n, a.aggregate, a.seed) <
               std::make_tuple(mode_rank(b.mode), b.depth, b.n, b.aggregate, b.seed);
    });
}

void write_rows_csv(std::ostream& out, const std::vector<ExperimentRow>& rows) {
    out << "mode,n,m,depth,widths,seed,train_error,test_error,chamfer_sq,norm_product,bound,gamma,"
           "converged,wall_time_ms,init,status\n";
    for (const auto& r : rows) {
        out << to_string(r.mode) << ',' << r.n << ',' << r.m << ',' << r.depth << ','
            << r.widths.to_string() << ',' << (r.aggregate ? std::string("mean") : std::to_string(r.seed))
            << ',' << format_double(r.train_error) << ',' << format_double(r.test_error) << ','
            << format_double(r.chamfer_sq) << ',' << format_double(r.norm_product) << ','
            << format_double(r.bound) << ',' << (r.gamma ? format_double(*r.gamma) : std::string())
            << ',' << (r.converged ? "true" : "false") << ',' << format_double(r.wall_time_ms) << ','
            << r.init << ',' << r.status << '\n';
    }
}

std::string rows_to_csv(const std::vector<ExperimentRow>& rows) {
    std::ostringstream ss;
    write_rows_csv(ss, rows);
    return ss.str();
}

GammaSummary summarize_gamma(const std::vector<ExperimentRow>& rows, Mode mode, Index n_min,
                             Index n_max) {
    GammaSummary s;
    s.min = std::numeric_limits<double>::infinity();
    s.max = -std::numeric_limits<double>::infinity();
    double sum = 0;
    for (const auto& r : rows) {
        if (r.mode != mode || r.aggregate || !r.ok() || r.n < n_min || r.n > n_max) continue;
        if (!r.converged) {
            ++s.excluded_nonconverged;
            continue;
        }
        if (!r.gamma) {
            ++s.excluded_undefined;
            continue;
        }
        s.min = std::min(s.min, *r.gamma);
        s.max = std::max(s.max, *r.gamma);
        sum += *r.gamma;
        ++s.count;
    }
    if (s.count == 0) throw NoValidRows("summarize_gamma: no valid " + to_string(mode) + " rows");
    s.mean = sum / double(s.count);
    return s;
}

std::vector<std::string> self_check(const std::vector<ExperimentRow>& rows) {
    std::vector<std::string> problems;
    auto cell = [](const ExperimentRow& r) {
        return "n=" + std::to_string(r.n) + " depth=" + std::to_string(r.depth);
    };
    for (const auto& r : rows) {
        if (r.mode != Mode::ZL || !r.ok()) continue;
        if (r.bound < r.test_error - 1e-9 * (1.0 + r.test_error)) {
            problems.push_back("ZL " + cell(r) + ": bound " + format_double(r.bound) +
                               " below test error " + format_double(r.test_error));
        }
    }
    for (const auto& t : rows) {
        if (t.mode != Mode::TFZL || !t.ok()) continue;
        const auto zl = std::find_if(rows.begin(), rows.end(), [&](const ExperimentRow& z) {
            return z.mode == Mode::ZL && z.ok() && z.n == t.n && z.depth == t.depth;
        });
        if (zl == rows.end()) continue;
        if (std::abs(zl->bound - t.bound) > 1e-6 || std::abs(zl->test_error - t.test_error) > 1e-6) {
            problems.push_back("TFZL " + cell(t) + " drifted from its ZL cell");
        }
        if (zl->gamma && t.gamma && std::abs(*zl->gamma - *t.gamma) > 1e-6) {
            problems.push_back("TFZL " + cell(t) + ": gamma differs from ZL by more than 1e-6");
        }
    }
    return problems;
}

std::vector<RankRow> rank_study(const RawMnist& raw, const std::vector<Index>& n_grid,
                                std::uint64_t seed, double tol) {
    std::vector<RankRow> out;
    for (Index n : n_grid) {
        const auto idx = sample_indices_with_coverage(raw.digits, n, derive_seed(seed, 6, std::uint64_t(n)));
        Eigen::MatrixXd x(raw.images.rows(), n);
        for (Index k = 0; k < n; ++k) x.col(k) = raw.images.col(idx[std::size_t(k)]);
        out.push_back({n, numeric_rank(x, tol)});
    }
    return out;
}

}  // namespace genbound
