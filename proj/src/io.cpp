#include "mfa/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>

#include "mfa/common.hpp"

namespace mfa {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

Config load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("config: cannot open " + path);
    try {
        return Config::parse(in);
    } catch (const std::exception& e) {
        throw validation_error("config: " + path + ": " + e.what());
    }
}

namespace {

double require_number(const Config& j, const std::string& key) {
    if (!j.contains(key) || !j.at(key).is_number())
        throw validation_error("config: missing numeric field '" + key + "'");
    return j.at(key).get<double>();
}

std::string require_kind(const Config& j, const std::string& what) {
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
        throw validation_error("config: " + what + " descriptor needs a 'kind' string");
    return j.at("kind").get<std::string>();
}

}  // namespace

BranchMap map_from_config(const Config& j) {
    const std::string kind = require_kind(j, "map");
    if (kind == "doubling")
        return make_linear_map({{0.0, 0.5}, {0.5, 1.0}});
    if (kind == "cantor")
        return make_linear_map({{0.0, 1.0 / 3.0}, {2.0 / 3.0, 1.0}});
    if (kind == "linear") {
        if (!j.contains("domains") || !j.at("domains").is_array())
            throw validation_error("config: linear map needs a 'domains' array");
        std::vector<Interval> domains;
        for (const auto& d : j.at("domains")) {
            if (!d.is_array() || d.size() != 2)
                throw validation_error("config: each domain is a [left, right] pair");
            domains.push_back({d.at(0).get<double>(), d.at(1).get<double>()});
        }
        return make_linear_map(domains);
    }
    if (kind == "manneville_pomeau" || kind == "mp")
        return make_manneville_pomeau(require_number(j, "s"));
    if (kind == "farey")
        return make_farey();
    throw validation_error("config: unknown map kind '" + kind + "'");
}

AlmostAdditivePotential potential_from_config(const Config& j, const BranchMap& map) {
    const std::string kind = require_kind(j, "potential");
    const int m = map.num_branches();
    if (kind == "digit") {
        const int symbol = j.contains("symbol") ? j.at("symbol").get<int>() : 1;
        if (symbol < 1 || symbol > m)
            throw validation_error("config: digit potential symbol out of range");
        return from_additive(m, 1, [symbol](WordView w) {
            return std::vector<double>{w[0] == symbol ? 1.0 : 0.0};
        });
    }
    if (kind == "geometric")
        return g_potential(map);
    if (kind == "constant")
        return constant_potential(m, require_number(j, "value"));
    if (kind == "additive") {
        if (!j.contains("range") || !j.contains("values"))
            throw validation_error("config: additive potential needs 'range' and 'values'");
        const int range = j.at("range").get<int>();
        const std::vector<double> values = j.at("values").get<std::vector<double>>();
        std::size_t windows = 1;
        for (int i = 0; i < range; ++i) windows *= std::size_t(m);
        if (values.size() != windows)
            throw validation_error("config: additive potential needs one value per length-" +
                                   std::to_string(range) + " window (" + std::to_string(windows) + ")");
        const double hoelder = j.contains("hoelder") ? j.at("hoelder").get<double>() : 0.0;
        const int mm = m;
        return from_additive(m, range, [values, mm, range](WordView w) {
            std::size_t idx = 0;
            for (int i = 0; i < range; ++i) idx = idx * std::size_t(mm) + std::size_t(w[std::size_t(i)] - 1);
            return std::vector<double>{values[idx]};
        }, hoelder);
    }
    if (kind == "matrix") {
        if (!j.contains("matrices") || !j.at("matrices").is_array())
            throw validation_error("config: matrix potential needs a 'matrices' array");
        std::vector<std::array<double, 4>> mats;
        for (const auto& row : j.at("matrices")) {
            if (!row.is_array() || row.size() != 4)
                throw validation_error("config: each matrix is [a11, a12, a21, a22]");
            mats.push_back({row.at(0).get<double>(), row.at(1).get<double>(),
                            row.at(2).get<double>(), row.at(3).get<double>()});
        }
        if (int(mats.size()) != m)
            throw validation_error("config: one matrix per branch is required");
        const double C = j.contains("C") ? j.at("C").get<double>() : 1.0;
        return matrix_cocycle_potential(mats, C);
    }
    throw validation_error("config: unknown potential kind '" + kind + "'");
}

MarkovMeasure measure_from_config(const Config& j) {
    const std::string kind = require_kind(j, "measure");
    if (kind == "bernoulli") {
        if (!j.contains("probs") || !j.at("probs").is_array())
            throw validation_error("config: bernoulli measure needs a 'probs' array");
        return MarkovMeasure::bernoulli(j.at("probs").get<std::vector<double>>());
    }
    if (kind == "markov") {
        if (!j.contains("order") || !j.contains("alphabet") || !j.contains("kernel"))
            throw validation_error("config: markov measure needs 'order', 'alphabet', 'kernel'");
        std::vector<std::vector<double>> kernel;
        for (const auto& row : j.at("kernel")) kernel.push_back(row.get<std::vector<double>>());
        return MarkovMeasure::markov(j.at("order").get<int>(), j.at("alphabet").get<int>(), kernel);
    }
    throw validation_error("config: unknown measure kind '" + kind + "'");
}

std::string csv_escape(const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_csv_row(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        os << csv_escape(cells[i]);
    }
    os << '\n';
}

}  // namespace mfa
