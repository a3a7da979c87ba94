#include "ptnet/fixtures.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <stdexcept>

#include <json.hpp>

namespace ptnet {

using nlohmann::json;

namespace {

// Two-intersection arterial reconstructed from the Experiment One
// description: 28 nodes, 14 regular links, 8 controlled links, 1,800 veh/h
// per lane with two lanes everywhere. Node numbering follows the OD listing
// (1->6 EB mainline, 7->12 WB mainline, the rest side streets); 12 s between
// the intersections, 2 s on the short approach/exit/crossing links.
//
//   EB: 1 -> 2 -> [2->3 @I1] -> 3 -> 4 -> [4->5 @I2] -> 5 -> 6
//   WB: 7 -> 8 -> [8->9 @I2] -> 9 -> 10 -> [10->11 @I1] -> 11 -> 12
//   I1 sides: 13->16 and 17->20; I2 sides: 21->24 and 25->28
json make_network(int horizon, int mainline_storage) {
  json links = json::array();
  auto reg = [&](int a, int b, int fftt, int storage) {
    links.push_back({{"from", a},
                     {"to", b},
                     {"fftt", fftt},
                     {"sat_rate_vph", 1800},
                     {"lanes", 2},
                     {"storage", storage}});
  };
  auto ctl = [&](int a, int b, int ix) {
    links.push_back({{"from", a},
                     {"to", b},
                     {"fftt", 2},
                     {"sat_rate_vph", 1800},
                     {"lanes", 2},
                     {"storage", 2},
                     {"control", {{"intersection", ix}}}});
  };
  // EB mainline
  reg(1, 2, 2, 2);
  ctl(2, 3, 1);
  reg(3, 4, 12, mainline_storage);
  ctl(4, 5, 2);
  reg(5, 6, 2, 2);
  // WB mainline
  reg(7, 8, 2, 2);
  ctl(8, 9, 2);
  reg(9, 10, 12, mainline_storage);
  ctl(10, 11, 1);
  reg(11, 12, 2, 2);
  // I1 side streets
  reg(13, 14, 2, 2);
  ctl(14, 15, 1);
  reg(15, 16, 2, 2);
  reg(17, 18, 2, 2);
  ctl(18, 19, 1);
  reg(19, 20, 2, 2);
  // I2 side streets
  reg(21, 22, 2, 2);
  ctl(22, 23, 2);
  reg(23, 24, 2, 2);
  reg(25, 26, 2, 2);
  ctl(26, 27, 2);
  reg(27, 28, 2, 2);

  json nodes = json::array();
  for (int n = 1; n <= 28; ++n) nodes.push_back(n);
  return json{{"notes",
               "Two-intersection arterial; node numbering reconstructed from "
               "the OD listing (1->6 EB, 7->12 WB, side pairs per "
               "intersection). Assumed: 12 s between intersections, 2 s "
               "approach/exit/crossing links, 1800 veh/h/lane x 2 lanes."},
              {"horizon", horizon},
              {"time_step", 1},
              {"nodes", nodes},
              {"links", links}};
}

json vehicle(int vid, int t0, std::initializer_list<int> nodes) {
  return json{{"vid", vid}, {"t0", t0}, {"nodes", nodes}};
}

// Departure tables per scenario. Mainline EB is v1..v10 (1->6), WB is
// v19, v20 (7->12); v11..v14 cross intersection 1, v15..v18 intersection 2.
json make_vehicles(const std::string& name) {
  json v = json::array();
  auto eb = [&](int vid, int t0) { v.push_back(vehicle(vid, t0, {1, 2, 3, 4, 5, 6})); };
  auto wb = [&](int vid, int t0) { v.push_back(vehicle(vid, t0, {7, 8, 9, 10, 11, 12})); };
  auto s17 = [&](int vid, int t0) { v.push_back(vehicle(vid, t0, {17, 18, 19, 20})); };
  auto s13 = [&](int vid, int t0) { v.push_back(vehicle(vid, t0, {13, 14, 15, 16})); };
  auto s25 = [&](int vid, int t0) { v.push_back(vehicle(vid, t0, {25, 26, 27, 28})); };
  auto s21 = [&](int vid, int t0) { v.push_back(vehicle(vid, t0, {21, 22, 23, 24})); };

  if (name == "exp1-s1") {
    // Staggered so nobody competes: every stream can meet a green onset.
    for (int i = 0; i < 10; ++i) eb(i + 1, i);
    s17(11, 20); s17(12, 21);
    s13(13, 20); s13(14, 21);
    s25(15, 38); s25(16, 39);
    s21(17, 38); s21(18, 39);
    wb(19, 14); wb(20, 15);
  } else if (name == "exp1-s2" || name == "appendix-a") {
    // Side streets arrive while the mainline still needs its greens; the two
    // intersections' side platoons are staggered so no single cross window
    // can serve both, and the EB platoon overlaps the WB crossings so no
    // slack hides inside the mainline band.
    for (int i = 0; i < 10; ++i) eb(i + 1, 5 + i);
    s17(11, 6); s17(12, 7);
    s13(13, 6); s13(14, 7);
    s25(15, 24); s25(16, 25);
    s21(17, 24); s21(18, 25);
    wb(19, 0); wb(20, 1);
  } else if (name == "exp1-s3") {
    // Dense platoon against the shortened middle links; sides depart after
    // the congestion has cleared.
    for (int i = 0; i < 10; ++i) eb(i + 1, i);
    s17(11, 35); s17(12, 36);
    s13(13, 35); s13(14, 36);
    s25(15, 50); s25(16, 51);
    s21(17, 50); s21(18, 51);
    wb(19, 14); wb(20, 15);
  } else {
    // exp1-s4: storage-tight mainline (two 5-vehicle bursts that keep the
    // middle link exactly full), sides mid-stream at intersection 1 and near
    // the mainline tail at intersection 2.
    for (int i = 0; i < 5; ++i) eb(i + 1, i);
    for (int i = 5; i < 10; ++i) eb(i + 1, 7 + i);
    s17(11, 13); s17(12, 14);
    s13(13, 13); s13(14, 14);
    s25(15, 30); s25(16, 31);
    s21(17, 30); s21(18, 31);
    wb(19, 0); wb(20, 1);
  }
  return json{{"vehicles", v}};
}

json serve(int a, int b) {
  return json{{"link", {a, b}}, {"protection", "protected"}};
}

json make_phases(const std::string& name) {
  // Local phase 1: mainline through (EB+WB); local phase 2: side streets.
  // Clearance is all-red only so the per-second capacity stays integral.
  int yellow = 0;
  int allred = name == "appendix-a" ? 0 : 3;
  auto local = [&](int id, json serves) {
    return json{{"id", id},     {"gmin", 5},      {"gmax", 50},
                {"yellow", yellow}, {"allred", allred}, {"serves", serves}};
  };
  json i1 = json{{"id", 1},
                 {"phases",
                  {local(1, {serve(2, 3), serve(10, 11)}),
                   local(2, {serve(14, 15), serve(18, 19)})}}};
  json i2 = json{{"id", 2},
                 {"phases",
                  {local(1, {serve(4, 5), serve(8, 9)}),
                   local(2, {serve(22, 23), serve(26, 27)})}}};
  json out{{"delta", 0.5},
           {"rho_yellow", 0.5},
           {"intersections", {i1, i2}},
           {"initial_phase", {1, 1}}};
  if (name == "appendix-a") {
    // Fixed phase-group band: mainline 30 s (or a short 6 s), sides 6 s each,
    // matching the 48 s reference cycle.
    out["policy"] = json{{"mode", "groups"},
                         {"blocks",
                          {json{{"phase", {1, 1}}, {"durations", {30, 6}}},
                           json{{"phase", {1, 2}}, {"durations", {6}}},
                           json{{"phase", {2, 1}}, {"durations", {6}}},
                           json{{"phase", {2, 2}}, {"durations", {6}}}}}};
  } else {
    out["policy"] = json{{"mode", "full"}};
  }
  return out;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace

std::vector<std::string> fixture_names() {
  return {"exp1-s1", "exp1-s2", "exp1-s3", "exp1-s4", "appendix-a"};
}

std::vector<int> fixture_mainline_vids() {
  return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 19, 20};
}

std::vector<int> fixture_side_vids() {
  return {11, 12, 13, 14, 15, 16, 17, 18};
}

void scaffold_fixture(const std::string& name, const std::string& dir) {
  auto names = fixture_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw std::invalid_argument("unknown fixture '" + name + "'");
  int storage = (name == "exp1-s3" || name == "exp1-s4") ? 5 : 10;
  int horizon = (name == "exp1-s3" || name == "exp1-s4") ? 150 : 120;
  std::filesystem::create_directories(dir);
  write_json(std::filesystem::path(dir) / "network.json",
             make_network(horizon, storage));
  write_json(std::filesystem::path(dir) / "vehicles.json", make_vehicles(name));
  write_json(std::filesystem::path(dir) / "phases.json", make_phases(name));
}

}  // namespace ptnet
