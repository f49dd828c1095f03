#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "rsopf/network.hpp"
#include "rsopf/program.hpp"
#include "rsopf/scenario.hpp"

namespace bench {

/// Example feeder on a daily grid; `split` scenarios branch at stage 2.
inline rsopf::Instance feeder_instance(std::size_t split, bool restricted) {
    rsopf::RadialNetwork net = rsopf::load_network_file(RSOPF_DATA_DIR "/feeder.json");
    const rsopf::TimeGrid grid = rsopf::TimeGrid::daily_31h();
    std::vector<std::size_t> br(grid.horizon(), 1);
    br[2] = split;
    rsopf::SdeParams p;
    p.n_paths = 2000;
    rsopf::ScenarioTree tree = rsopf::build_scenario_tree(p, grid, br, 7);
    std::ifstream in(RSOPF_DATA_DIR "/profile.csv");
    const std::vector<double> profile = rsopf::load_profile_csv(in);
    rsopf::ProgramOptions o;
    o.restricted = restricted;
    return rsopf::make_instance(std::move(net), std::move(tree), grid, profile, {}, o);
}

}  // namespace bench
