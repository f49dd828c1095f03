#include <ostream>

#include <nlohmann/json.hpp>

#include "csv_util.hpp"
#include "rsopf/error.hpp"
#include "rsopf/scenario.hpp"

namespace rsopf {

using nlohmann::json;

void save_tree_json(std::ostream& out, const ScenarioTree& tree, const TimeGrid& grid) {
    json doc;
    doc["grid"]["taus"] = grid.taus();
    json nodes = json::array();
    for (const TreeNode& n : tree.nodes()) {
        json rec{{"id", n.id}, {"stage", n.stage}, {"value", n.value}, {"prob", n.probability}};
        if (n.parent) rec["parent"] = *n.parent;
        nodes.push_back(std::move(rec));
    }
    doc["nodes"] = std::move(nodes);
    out << doc.dump(2) << '\n';
}

std::pair<ScenarioTree, TimeGrid> load_tree_json(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(std::string("tree JSON: ") + e.what());
    }
    try {
        TimeGrid grid(doc.at("grid").at("taus").get<std::vector<double>>());
        std::vector<TreeNode> nodes;
        for (const json& rec : doc.at("nodes")) {
            TreeNode n;
            n.id = rec.at("id").get<std::size_t>();
            n.stage = rec.at("stage").get<std::size_t>();
            if (rec.contains("parent") && !rec["parent"].is_null()) n.parent = rec["parent"].get<std::size_t>();
            n.value = rec.at("value").get<double>();
            n.probability = rec.at("prob").get<double>();
            nodes.push_back(std::move(n));
        }
        ScenarioTree tree(std::move(nodes));
        if (tree.stage_count() != grid.stage_count())
            throw DomainError("tree has " + std::to_string(tree.stage_count()) + " stages but grid has " +
                              std::to_string(grid.stage_count()));
        return {std::move(tree), std::move(grid)};
    } catch (const json::exception& e) {
        throw ParseError(std::string("tree JSON: ") + e.what());
    }
}

void save_tree_csv(std::ostream& out, const ScenarioTree& tree) {
    out << "stage,node,value,prob\n";
    for (const TreeNode& n : tree.nodes())
        out << n.stage << ',' << n.id << ',' << detail::format_double(n.value) << ','
            << detail::format_double(n.probability) << '\n';
}

std::vector<double> load_profile_csv(std::istream& in) {
    auto rows = detail::read_csv(in);
    std::vector<double> values;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != 2) throw ParseError("profile row " + std::to_string(r + 1) + ": expected stage,value");
        if (r == 0 && row[0] == "stage") continue;
        const int stage = detail::parse_int(row[0], "profile stage");
        if (stage != static_cast<int>(values.size()))
            throw ParseError("profile stages must be listed in order starting at 0");
        values.push_back(detail::parse_double(row[1], "profile value"));
    }
    if (values.empty()) throw ParseError("profile is empty");
    return values;
}

}  // namespace rsopf
