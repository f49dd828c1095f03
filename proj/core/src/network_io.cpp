#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "csv_util.hpp"
#include "rsopf/error.hpp"
#include "rsopf/network.hpp"

namespace rsopf {

namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

double number(const json& obj, const char* key, double fallback, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return fallback;
    if (!it->is_number()) throw ParseError(where + ": field '" + key + "' must be a number");
    return it->get<double>();
}

double required(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
    return number(obj, key, 0.0, where);
}

NetworkData parse_json(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(std::string("network JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("buses") || !doc["buses"].is_array())
        throw ParseError("network JSON: expected an object with a 'buses' array");

    NetworkData data;
    data.base.s_base_mva = number(doc, "s_base_mva", 1.0, "network");
    data.base.v_base_kv = number(doc, "v_base_kv", 1.0, "network");
    std::string units = doc.value("units", std::string("engineering"));
    if (units != "engineering" && units != "per_unit")
        throw ParseError("network JSON: units must be 'engineering' or 'per_unit'");
    const double power_scale = units == "engineering" ? 1.0 / data.base.s_base_mva : 1.0;
    auto pw = [&](double v) { return v == kInf ? v : v * power_scale; };

    for (const json& rec : doc["buses"]) {
        if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_number_integer())
            throw ParseError("network JSON: every bus needs an integer 'id'");
        Bus b;
        b.id = rec["id"].get<int>();
        const std::string where = "bus " + std::to_string(b.id);
        if (rec.contains("parent") && !rec["parent"].is_null()) {
            if (!rec["parent"].is_number_integer())
                throw ParseError(where + ": 'parent' must be an integer");
            b.parent = rec["parent"].get<int>();
        }
        const bool slack = !b.parent;
        b.v_min = slack ? number(rec, "v_min", 1.0, where) : required(rec, "v_min", where);
        b.v_max = slack ? number(rec, "v_max", 1.0, where) : required(rec, "v_max", where);
        b.tap = number(rec, "tap", 1.0, where);
        b.peak = pw(number(rec, "peak", 0.0, where));
        b.solar_cap = pw(number(rec, "solar_cap", 0.0, where));
        if (auto it = rec.find("storage"); it != rec.end() && !it->is_null()) {
            const json& s = *it;
            b.storage.cap_max = pw(number(s, "cap_max", 0.0, where));
            b.storage.cap_min = pw(number(s, "cap_min", 0.0, where));
            b.storage.x_init = pw(number(s, "x_init", 0.0, where));
            b.storage.p_inj_max = pw(number(s, "p_inj_max", 0.0, where));
            b.storage.p_abs_max = pw(number(s, "p_abs_max", 0.0, where));
            b.storage.eff_abs = number(s, "eff_abs", 1.0, where);
            b.storage.eff_inj = number(s, "eff_inj", 1.0, where);
        }
        if (auto it = rec.find("reactive"); it != rec.end() && !it->is_null()) {
            b.reactive.q_min = pw(number(*it, "q_min", 0.0, where));
            b.reactive.q_max = pw(number(*it, "q_max", 0.0, where));
        }
        data.buses.push_back(b);

        if (b.parent) {
            Line l;
            l.from = b.id;
            l.to = *b.parent;
            l.r = number(rec, "r", 0.0, where);
            l.x = number(rec, "x", 0.0, where);
            l.s_max = pw(number(rec, "s_max", kInf, where));
            if (rec.contains("i_max_a2")) {
                const double ib = data.base.current_base_amps();
                l.i_max = number(rec, "i_max_a2", kInf, where) / (ib * ib);
            } else {
                l.i_max = number(rec, "i_max", kInf, where);
            }
            data.lines.push_back(l);
        }
    }
    return data;
}

const std::vector<std::string> kCsvColumns = {
    "id",      "parent",  "r",         "x",         "i_max",   "s_max",   "v_min",
    "v_max",   "tap",     "peak",      "cap_max",   "cap_min", "x_init",  "p_inj_max",
    "p_abs_max", "eff_abs", "eff_inj", "q_min",     "q_max",   "solar_cap"};

NetworkData parse_csv(std::istream& in, BaseUnits base) {
    NetworkData data;
    data.base = base;
    std::vector<std::vector<std::string>> rows = detail::read_csv(in);
    if (rows.empty()) throw ParseError("network CSV: missing header row");
    std::map<std::string, std::size_t> col;
    for (std::size_t k = 0; k < rows[0].size(); ++k) col[rows[0][k]] = k;
    if (!col.count("id")) throw ParseError("network CSV: header must contain 'id'");
    for (const auto& [name, idx] : col) {
        (void)idx;
        if (std::find(kCsvColumns.begin(), kCsvColumns.end(), name) == kCsvColumns.end())
            throw ParseError("network CSV: unknown column '" + name + "'");
    }

    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::string where = "network CSV row " + std::to_string(r + 1);
        auto cell = [&](const std::string& name) -> std::string {
            auto it = col.find(name);
            if (it == col.end() || it->second >= row.size()) return {};
            return row[it->second];
        };
        auto num = [&](const std::string& name, double fallback) {
            std::string c = cell(name);
            if (c.empty()) return fallback;
            return detail::parse_double(c, where + " column " + name);
        };
        Bus b;
        std::string id = cell("id");
        if (id.empty()) throw ParseError(where + ": empty id");
        b.id = detail::parse_int(id, where);
        if (std::string p = cell("parent"); !p.empty()) b.parent = detail::parse_int(p, where);
        const bool slack = !b.parent;
        b.v_min = num("v_min", slack ? 1.0 : std::numeric_limits<double>::quiet_NaN());
        b.v_max = num("v_max", slack ? 1.0 : std::numeric_limits<double>::quiet_NaN());
        if (std::isnan(b.v_min) || std::isnan(b.v_max))
            throw ParseError(where + ": voltage bounds are required for non-slack buses");
        b.tap = num("tap", 1.0);
        b.peak = num("peak", 0.0);
        b.storage.cap_max = num("cap_max", 0.0);
        b.storage.cap_min = num("cap_min", 0.0);
        b.storage.x_init = num("x_init", 0.0);
        b.storage.p_inj_max = num("p_inj_max", 0.0);
        b.storage.p_abs_max = num("p_abs_max", 0.0);
        b.storage.eff_abs = num("eff_abs", 1.0);
        b.storage.eff_inj = num("eff_inj", 1.0);
        b.reactive.q_min = num("q_min", 0.0);
        b.reactive.q_max = num("q_max", 0.0);
        b.solar_cap = num("solar_cap", 0.0);
        data.buses.push_back(b);
        if (b.parent) {
            Line l;
            l.from = b.id;
            l.to = *b.parent;
            l.r = num("r", 0.0);
            l.x = num("x", 0.0);
            l.i_max = num("i_max", kInf);
            l.s_max = num("s_max", kInf);
            data.lines.push_back(l);
        }
    }
    return data;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

RadialNetwork load_network(std::istream& in, NetworkFormat format, BaseUnits csv_base) {
    NetworkData data = format == NetworkFormat::json ? parse_json(in) : parse_csv(in, csv_base);
    return RadialNetwork(std::move(data));
}

RadialNetwork load_network_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open network file '" + path + "'");
    const bool csv = path.size() >= 4 && path.substr(path.size() - 4) == ".csv";
    try {
        return load_network(in, csv ? NetworkFormat::csv : NetworkFormat::json);
    } catch (const Error& e) {
        if (e.code() == "ParseError") throw ParseError(path + ": " + e.what());
        if (e.code() == "StructureError") throw StructureError(path + ": " + e.what());
        if (e.code() == "DomainError") throw DomainError(path + ": " + e.what());
        throw;
    }
}

void save_network(std::ostream& out, const RadialNetwork& net, NetworkFormat format) {
    std::map<int, const Line*> line_from;
    for (const Line& l : net.lines()) line_from[l.from] = &l;

    if (format == NetworkFormat::json) {
        json doc;
        doc["s_base_mva"] = net.base().s_base_mva;
        doc["v_base_kv"] = net.base().v_base_kv;
        doc["units"] = "per_unit";
        json buses = json::array();
        for (const Bus& b : net.buses()) {
            json rec;
            rec["id"] = b.id;
            if (b.parent) {
                rec["parent"] = *b.parent;
                const Line& l = *line_from.at(b.id);
                rec["r"] = l.r;
                rec["x"] = l.x;
                rec["i_max"] = finite_or_null(l.i_max);
                rec["s_max"] = finite_or_null(l.s_max);
            }
            rec["v_min"] = b.v_min;
            rec["v_max"] = b.v_max;
            rec["tap"] = b.tap;
            rec["peak"] = b.peak;
            if (b.parent) {
                rec["storage"] = {{"cap_max", b.storage.cap_max},     {"cap_min", b.storage.cap_min},
                                  {"x_init", b.storage.x_init},       {"p_inj_max", b.storage.p_inj_max},
                                  {"p_abs_max", b.storage.p_abs_max}, {"eff_abs", b.storage.eff_abs},
                                  {"eff_inj", b.storage.eff_inj}};
                rec["reactive"] = {{"q_min", b.reactive.q_min}, {"q_max", b.reactive.q_max}};
                rec["solar_cap"] = b.solar_cap;
            }
            buses.push_back(rec);
        }
        doc["buses"] = buses;
        out << doc.dump(2) << '\n';
        return;
    }

    for (std::size_t k = 0; k < kCsvColumns.size(); ++k) out << (k ? "," : "") << kCsvColumns[k];
    out << '\n';
    for (const Bus& b : net.buses()) {
        const Line* l = b.parent ? line_from.at(b.id) : nullptr;
        auto f = [](double v) { return std::isfinite(v) ? detail::format_double(v) : std::string(); };
        out << b.id << ',' << (b.parent ? std::to_string(*b.parent) : "") << ','
            << (l ? f(l->r) : "") << ',' << (l ? f(l->x) : "") << ',' << (l ? f(l->i_max) : "") << ','
            << (l ? f(l->s_max) : "") << ',' << f(b.v_min) << ',' << f(b.v_max) << ',' << f(b.tap)
            << ',' << f(b.peak) << ',' << f(b.storage.cap_max) << ',' << f(b.storage.cap_min) << ','
            << f(b.storage.x_init) << ',' << f(b.storage.p_inj_max) << ',' << f(b.storage.p_abs_max)
            << ',' << f(b.storage.eff_abs) << ',' << f(b.storage.eff_inj) << ','
            << f(b.reactive.q_min) << ',' << f(b.reactive.q_max) << ',' << f(b.solar_cap) << '\n';
    }
}

}  // namespace rsopf
