#include <genbound/model_io.hpp>

#include <fstream>

namespace genbound {

nlohmann::json model_to_json(const NetworkParamsd& params) {
    const Architecture arch = params.architecture();
    nlohmann::json j;
    j["dims"] = arch.dims();
    j["weights"] = nlohmann::json::array();
    j["biases"] = nlohmann::json::array();
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        const auto& w = params.weights[l];
        std::vector<double> flat;
        flat.reserve(std::size_t(w.size()));
        for (Index r = 0; r < w.rows(); ++r) {
            for (Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
        }
        j["weights"].push_back(std::move(flat));
        const auto& b = params.biases[l];
        j["biases"].push_back(std::vector<double>(b.data(), b.data() + b.size()));
    }
    return j;
}

NetworkParamsd model_from_json(const nlohmann::json& j) {
    try {
        const Architecture arch(j.at("dims").get<std::vector<Index>>());
        const auto& weights = j.at("weights");
        const auto& biases = j.at("biases");
        if (Index(weights.size()) != arch.layers() || Index(biases.size()) != arch.layers()) {
            throw ShapeMismatch("model json: expected " + std::to_string(arch.layers()) +
                                " weight and bias arrays");
        }
        NetworkParamsd p = NetworkParamsd::zeros(arch);
        for (std::size_t l = 0; l < p.weights.size(); ++l) {
            const auto flat = weights[l].get<std::vector<double>>();
            auto& w = p.weights[l];
            if (Index(flat.size()) != w.size()) {
                throw ShapeMismatch("model json: weight " + std::to_string(l + 1) + " has " +
                                    std::to_string(flat.size()) + " entries, expected " +
                                    std::to_string(w.size()));
            }
            for (Index r = 0; r < w.rows(); ++r) {
                for (Index c = 0; c < w.cols(); ++c) w(r, c) = flat[std::size_t(r * w.cols() + c)];
            }
            const auto b = biases[l].get<std::vector<double>>();
            if (Index(b.size()) != p.biases[l].size()) {
                throw ShapeMismatch("model json: bias " + std::to_string(l + 1) + " has wrong size");
            }
            p.biases[l] = Eigen::Map<const Eigen::VectorXd>(b.data(), Index(b.size()));
        }
        p.validate();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model json: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const NetworkParamsd& params) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << model_to_json(params).dump() << '\n';
}

NetworkParamsd load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return model_from_json(j);
}

}  // namespace genbound
