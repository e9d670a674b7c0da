#pragma once

// Experiment sweeps over (mode, depth, n, seed) cells. Each cell builds or
// trains a network on a coverage-constrained training sample, evaluates it on
// a fixed test sample and records the experimental bound and its ratio to the
// measured test error.

#include <genbound/data_io.hpp>
#include <genbound/model.hpp>
#include <genbound/trainer.hpp>

#include "json.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace genbound {

/// ZL: closed-form construction. TFZL: SGD started at the construction.
/// RI: SGD from He-normal random initialization.
enum class Mode { ZL, TFZL, RI };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& name);

struct MnistPaths {
    std::string train_images;
    std::string train_labels;
    std::string test_images;
    std::string test_labels;
};

struct SyntheticSpec {
    Index input_dim = 64;
    Index label_dim = 10;
    LabelLaw law = LabelLaw::OneHot;
    std::uint64_t seed = 0;
};

struct ExperimentConfig {
    std::vector<Mode> modes;
    std::vector<Index> n_grid{20, 50, 100, 200, 350, 550};
    Index m = 20;
    std::vector<Index> depths{1};
    /// "square" (every hidden layer M0 wide), "lowering" (linear from M0 down
    /// to Q) or an explicit hidden-width list (then depths must be its length).
    std::string width_policy = "square";
    std::vector<Index> explicit_widths;
    int ri_seeds = 5;
    int epochs = 70;
    double lr = 0.1;
    Index batch_size = 1;
    double tol = kDefaultRankTol;
    std::uint64_t seed = 0;
    LossReduction reduction = LossReduction::ComponentMean;
    bool use_biases = false;
    double convergence_train_error = 1e-3;
    int max_extra_epochs = 0;
    Index n_cap = 550;
    bool record_wall_time = false;
    std::optional<MnistPaths> mnist;
    std::optional<SyntheticSpec> synthetic;
    std::string output_path;

    /// Throws InvalidConfig on unknown keys, bad types or inconsistent values.
    static ExperimentConfig from_json(const nlohmann::json& j);
    void validate() const;
};

struct ExperimentRow {
    Mode mode = Mode::ZL;
    Index n = 0;
    Index m = 0;
    Index depth = 0;
    Architecture widths;
    /// RI replicate index; 0 for ZL/TFZL. Aggregate rows print "mean".
    int seed = 0;
    bool aggregate = false;
    double train_error = 0;
    double test_error = 0;
    double chamfer_sq = 0;
    double norm_product = 0;
    double bound = 0;
    std::optional<double> gamma;
    bool converged = false;
    double wall_time_ms = 0;
    std::string init;
    /// "ok" or "error: <message>".
    std::string status = "ok";

    bool ok() const { return status == "ok"; }
};

/// Hidden widths for a given depth under the config's width policy.
Architecture architecture_for(const ExperimentConfig& config, Index depth, Index input_dim,
                              Index output_dim);

std::vector<ExperimentRow> run_experiment(const ExperimentConfig& config);

/// run_experiment over the config's depth grid; rejects architectures whose
/// widths increase. Non-converged RI seeds stay in the output flagged
/// converged=false and are left out of the aggregate rows.
std::vector<ExperimentRow> depth_sweep(const ExperimentConfig& config);

/// Orders rows by (mode, depth, n, seed), aggregates last within a cell.
void sort_rows(std::vector<ExperimentRow>& rows);

void write_rows_csv(std::ostream& out, const std::vector<ExperimentRow>& rows);
std::string rows_to_csv(const std::vector<ExperimentRow>& rows);

struct GammaSummary {
    double min = 0;
    double max = 0;
    double mean = 0;
    std::size_t count = 0;
    std::size_t excluded_undefined = 0;
    std::size_t excluded_nonconverged = 0;
};

/// min/max/mean of gamma over valid per-seed rows of one mode with n in
/// [n_min, n_max]. Rows with undefined gamma or converged=false are excluded
/// and counted. Throws NoValidRows when nothing remains.
GammaSummary summarize_gamma(const std::vector<ExperimentRow>& rows, Mode mode, Index n_min = 0,
                             Index n_max = std::numeric_limits<Index>::max());

/// Hard checks used by self-check mode: every ZL row satisfies bound >=
/// test_error, and TFZL rows reproduce their ZL cell to 1e-6. Returns the
/// violations found.
std::vector<std::string> self_check(const std::vector<ExperimentRow>& rows);

struct RankRow {
    Index n = 0;
    Index rank = 0;
};

/// numeric_rank of coverage-sampled training inputs for each n.
std::vector<RankRow> rank_study(const RawMnist& raw, const std::vector<Index>& n_grid,
                                std::uint64_t seed, double tol);

/// SplitMix64 of a base seed and tags; derives independent per-cell seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

}  // namespace genbound
