#include <genbound/data_io.hpp>
#include <genbound/format.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace genbound {

namespace {

constexpr std::uint32_t kImageMagic = 2051;
constexpr std::uint32_t kLabelMagic = 2049;
constexpr long kMaxCoverageRetries = 1'000'000;

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
    if (bytes.size() < offset + 4) throw TruncatedFile(path.string() + ": header truncated");
    return (std::uint32_t(bytes[offset]) << 24) | (std::uint32_t(bytes[offset + 1]) << 16) |
           (std::uint32_t(bytes[offset + 2]) << 8) | std::uint32_t(bytes[offset + 3]);
}

void check_magic(std::uint32_t got, std::uint32_t want, const std::filesystem::path& path) {
    if (got != want) {
        throw BadMagic(path.string() + ": magic " + std::to_string(got) + ", expected " +
                       std::to_string(want));
    }
}

}  // namespace

RawMnist load_mnist_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path) {
    const auto img = read_all(images_path);
    check_magic(read_be32(img, 0, images_path), kImageMagic, images_path);
    const std::size_t count = read_be32(img, 4, images_path);
    const std::size_t rows = read_be32(img, 8, images_path);
    const std::size_t cols = read_be32(img, 12, images_path);
    const std::size_t pixels = rows * cols;
    if (img.size() < 16 + count * pixels) {
        throw TruncatedFile(images_path.string() + ": expected " + std::to_string(count) +
                            " images of " + std::to_string(pixels) + " bytes");
    }

    const auto lab = read_all(labels_path);
    check_magic(read_be32(lab, 0, labels_path), kLabelMagic, labels_path);
    const std::size_t label_count = read_be32(lab, 4, labels_path);
    if (lab.size() < 8 + label_count) {
        throw TruncatedFile(labels_path.string() + ": expected " + std::to_string(label_count) +
                            " labels");
    }
    if (label_count != count) {
        throw CountMismatch("image file has " + std::to_string(count) + " entries, label file " +
                            std::to_string(label_count));
    }

    RawMnist raw;
    raw.image_rows = Index(rows);
    raw.image_cols = Index(cols);
    raw.images.resize(Index(pixels), Index(count));
    for (std::size_t k = 0; k < count; ++k) {
        const unsigned char* src = img.data() + 16 + k * pixels;
        for (std::size_t p = 0; p < pixels; ++p) raw.images(Index(p), Index(k)) = src[p] / 255.0;
    }
    raw.digits.assign(lab.begin() + 8, lab.begin() + 8 + std::ptrdiff_t(count));
    return raw;
}

Eigen::VectorXd one_hot(int digit, Index classes) {
    if (classes < 1 || digit < 0 || digit >= classes) {
        throw OutOfRange("one_hot: digit " + std::to_string(digit) + " outside [0, " +
                         std::to_string(classes) + ")");
    }
    Eigen::VectorXd v = Eigen::VectorXd::Zero(classes);
    v(digit) = 1.0;
    return v;
}

Eigen::MatrixXd one_hot_labels(const std::vector<int>& digits, Index classes) {
    Eigen::MatrixXd y(classes, Index(digits.size()));
    for (std::size_t k = 0; k < digits.size(); ++k) y.col(Index(k)) = one_hot(digits[k], classes);
    return y;
}

std::vector<Index> sample_indices_with_coverage(const std::vector<int>& digits, Index n,
                                                std::uint64_t seed, int classes) {
    if (n < classes) {
        throw TooFewSamples("coverage sampling: n = " + std::to_string(n) + " cannot cover " +
                            std::to_string(classes) + " classes");
    }
    if (n > Index(digits.size())) {
        throw TooFewSamples("coverage sampling: n = " + std::to_string(n) + " exceeds pool of " +
                            std::to_string(digits.size()));
    }
    std::vector<char> present(std::size_t(classes), 0);
    for (int d : digits) {
        if (d < 0 || d >= classes) throw OutOfRange("coverage sampling: label " + std::to_string(d));
        present[std::size_t(d)] = 1;
    }
    if (std::find(present.begin(), present.end(), 0) != present.end()) {
        throw ExhaustedRetries("coverage sampling: some class never occurs in the pool");
    }

    std::mt19937_64 rng(seed);
    std::vector<Index> pool(digits.size());
    for (long attempt = 0; attempt < kMaxCoverageRetries; ++attempt) {
        std::iota(pool.begin(), pool.end(), Index(0));
        // Partial Fisher-Yates: the first n slots become the sample.
        for (Index k = 0; k < n; ++k) {
            std::uniform_int_distribution<Index> pick(k, Index(pool.size()) - 1);
            std::swap(pool[std::size_t(k)], pool[std::size_t(pick(rng))]);
        }
        std::fill(present.begin(), present.end(), 0);
        int covered = 0;
        for (Index k = 0; k < n; ++k) {
            char& seen = present[std::size_t(digits[std::size_t(pool[std::size_t(k)])])];
            if (!seen) {
                seen = 1;
                ++covered;
            }
        }
        if (covered == classes) return {pool.begin(), pool.begin() + n};
    }
    throw ExhaustedRetries("coverage sampling: no covering sample after " +
                           std::to_string(kMaxCoverageRetries) + " draws");
}

Datasetd sample_with_digit_coverage(const RawMnist& raw, Index n, std::uint64_t seed, int classes) {
    const auto idx = sample_indices_with_coverage(raw.digits, n, seed, classes);
    Datasetd out{Eigen::MatrixXd(raw.images.rows(), n), Eigen::MatrixXd(classes, n)};
    for (Index k = 0; k < n; ++k) {
        const Index src = idx[std::size_t(k)];
        out.inputs.col(k) = raw.images.col(src);
        out.labels.col(k) = one_hot(raw.digits[std::size_t(src)], classes);
    }
    return out;
}

LabelLaw parse_label_law(const std::string& name) {
    if (name == "gaussian") return LabelLaw::Gaussian;
    if (name == "one_hot") return LabelLaw::OneHot;
    if (name == "signed") return LabelLaw::Signed;
    throw InvalidConfig("unknown label law '" + name + "' (gaussian | one_hot | signed)");
}

std::string to_string(LabelLaw law) {
    switch (law) {
        case LabelLaw::Gaussian: return "gaussian";
        case LabelLaw::OneHot: return "one_hot";
        case LabelLaw::Signed: return "signed";
    }
    return "unknown";
}

Datasetd synthetic_dataset(Index input_dim, Index label_dim, Index n, std::uint64_t seed,
                           LabelLaw law) {
    if (input_dim < 1 || label_dim < 1 || n < 1) {
        throw InvalidConfig("synthetic_dataset: dimensions and n must be positive");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Datasetd d{Eigen::MatrixXd(input_dim, n), Eigen::MatrixXd::Zero(label_dim, n)};
    for (Index c = 0; c < n; ++c) {
        for (Index r = 0; r < input_dim; ++r) d.inputs(r, c) = normal(rng);
    }
    std::uniform_int_distribution<Index> cls(0, label_dim - 1);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (Index c = 0; c < n; ++c) {
        switch (law) {
            case LabelLaw::Gaussian:
                for (Index r = 0; r < label_dim; ++r) d.labels(r, c) = normal(rng);
                break;
            case LabelLaw::OneHot: d.labels(cls(rng), c) = 1.0; break;
            case LabelLaw::Signed:
                for (Index r = 0; r < label_dim; ++r) d.labels(r, c) = unit(rng);
                break;
        }
    }
    return d;
}

void write_dataset_csv(const std::filesystem::path& path, const Datasetd& data) {
    data.validate();
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    for (Index r = 0; r < data.input_dim(); ++r) out << (r ? ",x" : "x") << r;
    for (Index r = 0; r < data.label_dim(); ++r) {
        out << ((data.input_dim() + r) ? ",y" : "y") << r;
    }
    out << '\n';
    for (Index c = 0; c < data.size(); ++c) {
        for (Index r = 0; r < data.input_dim(); ++r) {
            out << (r ? "," : "") << format_double(data.inputs(r, c));
        }
        for (Index r = 0; r < data.label_dim(); ++r) out << ',' << format_double(data.labels(r, c));
        out << '\n';
    }
}

Datasetd read_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");

    Index m0 = 0, q = 0;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            if (!cell.empty() && cell.back() == '\r') cell.pop_back();
            if (!cell.empty() && cell[0] == 'x' && q == 0) {
                ++m0;
            } else if (!cell.empty() && cell[0] == 'y') {
                ++q;
            } else {
                throw DataError(path.string() + ": bad header cell '" + cell + "'");
            }
        }
    }
    if (m0 == 0 || q == 0) throw DataError(path.string() + ": header needs x* and y* columns");

    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        try {
            while (std::getline(ss, cell, ',')) row.push_back(parse_double(cell));
        } catch (const std::invalid_argument& e) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (Index(row.size()) != m0 + q) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(m0 + q) + " fields");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError(path.string() + ": no samples");

    Datasetd d{Eigen::MatrixXd(m0, Index(rows.size())), Eigen::MatrixXd(q, Index(rows.size()))};
    for (std::size_t c = 0; c < rows.size(); ++c) {
        for (Index r = 0; r < m0; ++r) d.inputs(r, Index(c)) = rows[c][std::size_t(r)];
        for (Index r = 0; r < q; ++r) d.labels(r, Index(c)) = rows[c][std::size_t(m0 + r)];
    }
    d.validate();
    return d;
}

void to_json(nlohmann::json& j, const DatasetProvenance& p) {
    j = nlohmann::json{{"source", p.source},
                       {"seed", p.seed},
                       {"n", p.n},
                       {"normalization", p.normalization},
                       {"indices", p.indices}};
}

void write_provenance(const std::filesystem::path& path, const DatasetProvenance& p) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << nlohmann::json(p).dump(2) << '\n';
}

}  // namespace genbound
