#include "rflnn/serialization.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rflnn {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from(const json& j, Index cols_if_empty, const char* what) {
    if (!j.is_array()) throw ParseError(std::string("model json: ") + what + " is not an array", 0);
    const Index rows = static_cast<Index>(j.size());
    if (rows == 0) return Matrix(0, cols_if_empty);
    const Index cols = static_cast<Index>(j.front().size());
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols)
            throw ParseError(std::string("model json: ragged matrix ") + what, i);
        for (Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

json group_json(const RandomGroup& g) {
    return json{{"activation", std::string(to_string(g.activation))},
                {"interval_bound", g.interval_bound},
                {"weights", matrix_json(g.weights)},
                {"bias", std::vector<double>(g.bias.data(), g.bias.data() + g.bias.size())}};
}

RandomGroup group_from(const json& j) {
    RandomGroup g;
    g.activation = parse_activation(j.at("activation").get<std::string>());
    g.interval_bound = j.at("interval_bound").get<double>();
    g.weights = matrix_from(j.at("weights"), 0, "weights");
    const auto bias = j.at("bias").get<std::vector<double>>();
    g.bias = Eigen::Map<const RowVector>(bias.data(), static_cast<Index>(bias.size()));
    if (g.bias.size() != g.weights.cols()) throw ParseError("model json: bias length does not match weights", 0);
    return g;
}

json bls_json(const BlsModel& m) {
    json j{{"kind", "bls"},
           {"format_version", kFormatVersion},
           {"seed", m.seed},
           {"ridge_lambda", m.ridge_lambda},
           {"pinv_rtol", m.pinv_rtol},
           {"dependence_tol", m.dependence_tol},
           {"output_weights", matrix_json(m.output_weights)}};
    j["feature_groups"] = json::array();
    for (const auto& g : m.feature_groups) j["feature_groups"].push_back(group_json(g));
    j["enhancement_groups"] = json::array();
    for (const auto& g : m.enhancement_groups) j["enhancement_groups"].push_back(group_json(g));
    if (m.cached_pinv) j["cached_pinv"] = matrix_json(*m.cached_pinv);
    return j;
}

BlsModel bls_from(const json& j) {
    BlsModel m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.ridge_lambda = j.at("ridge_lambda").get<double>();
    m.pinv_rtol = j.value("pinv_rtol", 1e-12);
    m.dependence_tol = j.value("dependence_tol", 1e-8);
    for (const auto& g : j.at("feature_groups")) m.feature_groups.push_back(group_from(g));
    for (const auto& g : j.at("enhancement_groups")) m.enhancement_groups.push_back(group_from(g));
    m.output_weights = matrix_from(j.at("output_weights"), 0, "output_weights");
    if (j.contains("cached_pinv")) m.cached_pinv = matrix_from(j.at("cached_pinv"), 0, "cached_pinv");
    if (m.output_weights.rows() != m.total_nodes())
        throw ParseError("model json: output_weights rows do not match node count", 0);
    return m;
}

json parse(const std::string& text, const char* kind) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("model json: ") + e.what(), static_cast<std::int64_t>(e.byte));
    }
    if (j.value("kind", std::string()) != kind)
        throw ParseError(std::string("model json: expected kind '") + kind + "'", 0);
    return j;
}

template <typename F>
auto guarded(F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw ParseError(std::string("model json: ") + e.what(), 0);
    }
}

} // namespace

std::string to_json(const ElmModel& model, int indent) {
    json j{{"kind", "elm"},
           {"format_version", kFormatVersion},
           {"seed", model.seed},
           {"ridge_lambda", model.ridge_lambda},
           {"hidden", group_json(model.hidden)},
           {"output_weights", matrix_json(model.output_weights)}};
    return j.dump(indent);
}

std::string to_json(const BlsModel& model, int indent) { return bls_json(model).dump(indent); }

std::string to_json(const StackedBlsModel& model, int indent) {
    json j{{"kind", "stacked_bls"},
           {"format_version", kFormatVersion},
           {"input", model.input == StackInput::previous_output ? "previous_output" : "raw_input"},
           {"training_residual_norms", model.training_residual_norms}};
    j["blocks"] = json::array();
    for (const auto& b : model.blocks) j["blocks"].push_back(bls_json(b));
    return j.dump(indent);
}

ElmModel elm_from_json(const std::string& text) {
    const json j = parse(text, "elm");
    return guarded([&] {
        ElmModel m;
        m.seed = j.at("seed").get<std::uint64_t>();
        m.ridge_lambda = j.at("ridge_lambda").get<double>();
        m.hidden = group_from(j.at("hidden"));
        m.output_weights = matrix_from(j.at("output_weights"), 0, "output_weights");
        if (m.output_weights.rows() != m.hidden.nodes())
            throw ParseError("model json: output_weights rows do not match hidden nodes", 0);
        return m;
    });
}

BlsModel bls_from_json(const std::string& text) {
    const json j = parse(text, "bls");
    return guarded([&] { return bls_from(j); });
}

StackedBlsModel stacked_bls_from_json(const std::string& text) {
    const json j = parse(text, "stacked_bls");
    return guarded([&] {
        StackedBlsModel m;
        const auto input = j.at("input").get<std::string>();
        if (input == "previous_output") m.input = StackInput::previous_output;
        else if (input == "raw_input") m.input = StackInput::raw_input;
        else throw ParseError("model json: unknown stack input '" + input + "'", 0);
        m.training_residual_norms = j.value("training_residual_norms", std::vector<double>{});
        for (const auto& b : j.at("blocks")) m.blocks.push_back(bls_from(b));
        return m;
    });
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

template <typename Model>
void save_model(const Model& model, const std::filesystem::path& path) {
    write_text_file(path, to_json(model, 2) + "\n");
}

template void save_model<ElmModel>(const ElmModel&, const std::filesystem::path&);
template void save_model<BlsModel>(const BlsModel&, const std::filesystem::path&);
template void save_model<StackedBlsModel>(const StackedBlsModel&, const std::filesystem::path&);

} // namespace rflnn
