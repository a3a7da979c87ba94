#pragma once

#include <string>
#include <vector>

namespace ptnet {

/// Known fixture names: exp1-s1, exp1-s2, exp1-s3, exp1-s4, appendix-a.
std::vector<std::string> fixture_names();

/// Write network.json / vehicles.json / phases.json for the named fixture
/// into dir. Throws std::invalid_argument on unknown names.
void scaffold_fixture(const std::string& name, const std::string& dir);

/// Vehicle id sets used by the fixture acceptance properties.
std::vector<int> fixture_mainline_vids();
std::vector<int> fixture_side_vids();

}  // namespace ptnet
