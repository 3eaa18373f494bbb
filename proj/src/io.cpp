#include "snapkit/io.hpp"

#include <fstream>
#include <sstream>

#include "snapkit/errors.hpp"

namespace snapkit {

using nlohmann::json;

namespace {

const json& require(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ValidationError(where + ": missing \"" + key + "\"");
    return *it;
}

double number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ValidationError(where + ": expected a number");
    return v.get<double>();
}

int integer(const json& v, const std::string& where) {
    if (!v.is_number_integer()) throw ValidationError(where + ": expected an integer");
    return v.get<int>();
}

}  // namespace

Configuration configuration_from_json(const json& rows, int dimension) {
    if (!rows.is_array()) throw ValidationError("configuration: expected an array of rows");
    Configuration cfg(static_cast<Eigen::Index>(rows.size()), dimension);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::string where = "configuration row " + std::to_string(r + 1);
        if (!rows[r].is_array() || static_cast<int>(rows[r].size()) != dimension)
            throw ValidationError(where + ": dimension mismatch (expected " +
                                  std::to_string(dimension) + " coordinates)");
        for (int c = 0; c < dimension; ++c)
            cfg(static_cast<Eigen::Index>(r), c) = number(rows[r][c], where);
    }
    return cfg;
}

json configuration_to_json(const Configuration& cfg) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < cfg.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < cfg.cols(); ++c) row.push_back(cfg(r, c));
        rows.push_back(row);
    }
    return rows;
}

FrameworkFile parse_framework(const json& doc) {
    if (!doc.is_object()) throw ValidationError("framework file: expected a JSON object");
    const int dim = integer(require(doc, "dimension", "framework"), "dimension");
    if (dim != 2 && dim != 3) throw ValidationError("dimension must be 2 or 3");
    const double area =
        doc.contains("cross_section") ? number(doc["cross_section"], "cross_section") : 1.0;
    const StrainModel model = doc.contains("strain_model")
                                  ? strain_model_from_string(doc["strain_model"].get<std::string>())
                                  : StrainModel::GL;

    std::vector<Knot> knots;
    const json& jk = require(doc, "knots", "framework");
    if (!jk.is_array()) throw ValidationError("knots: expected an array");
    for (std::size_t k = 0; k < jk.size(); ++k) {
        const std::string where = "knot entry " + std::to_string(k + 1);
        Knot knot;
        knot.id = integer(require(jk[k], "id", where), where + " id");
        const json& coords = require(jk[k], "coords", where);
        if (!coords.is_array() || static_cast<int>(coords.size()) != dim)
            throw ValidationError(where + ": coords dimension mismatch (expected " +
                                  std::to_string(dim) + ")");
        knot.coords.resize(dim);
        for (int c = 0; c < dim; ++c) knot.coords(c) = number(coords[c], where);
        knot.pinned = jk[k].value("pinned", false);
        knots.push_back(std::move(knot));
    }

    std::vector<Edge> edges;
    const json& je = require(doc, "edges", "framework");
    if (!je.is_array()) throw ValidationError("edges: expected an array");
    for (std::size_t e = 0; e < je.size(); ++e) {
        const std::string where = "edge entry " + std::to_string(e + 1);
        Edge edge;
        edge.i = integer(require(je[e], "i", where), where) - 1;
        edge.j = integer(require(je[e], "j", where), where) - 1;
        edge.rest_length = number(require(je[e], "length", where), where);
        edges.push_back(edge);
    }

    std::vector<std::array<int, 3>> plates;
    if (doc.contains("plates")) {
        const json& jp = doc["plates"];
        if (!jp.is_array()) throw ValidationError("plates: expected an array");
        for (std::size_t p = 0; p < jp.size(); ++p) {
            const std::string where = "plate entry " + std::to_string(p + 1);
            plates.push_back({integer(require(jp[p], "i", where), where) - 1,
                              integer(require(jp[p], "j", where), where) - 1,
                              integer(require(jp[p], "k", where), where) - 1});
        }
    }

    Framework fw(dim, std::move(knots), std::move(edges), plates, area, model);
    Configuration cfg = doc.contains("configuration")
                            ? configuration_from_json(doc["configuration"], dim)
                            : fw.declared_configuration();
    validate_configuration(fw, cfg);
    return {std::move(fw), std::move(cfg)};
}

FrameworkFile parse_framework(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("parse error: ") + e.what());
    }
    return parse_framework(doc);
}

FrameworkFile load_framework(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_framework(ss.str());
}

json framework_to_json(const Framework& fw, const Configuration& cfg) {
    json doc;
    doc["dimension"] = fw.dimension();
    doc["cross_section"] = fw.cross_section();
    doc["strain_model"] = to_string(fw.strain_model());
    json knots = json::array();
    for (const Knot& k : fw.knots()) {
        json coords = json::array();
        for (Eigen::Index c = 0; c < k.coords.size(); ++c) coords.push_back(k.coords(c));
        knots.push_back({{"id", k.id}, {"coords", coords}, {"pinned", k.pinned}});
    }
    doc["knots"] = knots;
    json edges = json::array();
    for (const Edge& e : fw.edges())
        edges.push_back({{"i", e.i + 1}, {"j", e.j + 1}, {"length", e.rest_length}});
    doc["edges"] = edges;
    json plates = json::array();
    for (const Plate& p : fw.plates())
        plates.push_back({{"i", p.i + 1}, {"j", p.j + 1}, {"k", p.k + 1}});
    doc["plates"] = plates;
    doc["configuration"] = configuration_to_json(cfg);
    return doc;
}

void save_framework(const std::filesystem::path& path, const Framework& fw,
                    const Configuration& cfg) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << framework_to_json(fw, cfg).dump(2) << '\n';
}

}  // namespace snapkit
