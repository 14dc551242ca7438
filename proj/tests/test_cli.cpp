#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <string>

#include <json.hpp>

#include "graspgen/calibrate.hpp"
#include "graspgen/image_io.hpp"
#include "testsupport.hpp"

using namespace grasp;
using namespace grasp::test;
using nlohmann::json;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliResult run_cli(const std::string& args, const TempDir& dir) {
  const std::string out_file = dir.file("_stdout.txt");
  const std::string err_file = dir.file("_stderr.txt");
  const std::string cmd =
      std::string(GRASPGEN_CLI_PATH) + " " + args + " > " + out_file + " 2> " + err_file;
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WEXITSTATUS(status);
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

json load(const std::string& path) {
  std::ifstream in(path);
  json j;
  in >> j;
  return j;
}

void write_stack_scene(const TempDir& dir) {
  write_obj(dir.file("small.obj"), make_box({0.04, 0.04, 0.04}));
  write_obj(dir.file("big.obj"), make_box({0.1, 0.1, 0.05}));
  // Small box (id 1) on top of the big one (id 2).
  json scene{{"objects",
              json::array({json{{"instance_id", 1},
                                {"class_id", 10},
                                {"mesh", "small.obj"},
                                {"pose", {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0.07, 0, 0, 0, 1}}},
                           json{{"instance_id", 2},
                                {"class_id", 20},
                                {"mesh", "big.obj"},
                                {"pose", {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0.025, 0, 0, 0, 1}}}})},
             {"gravity", {0, 0, -1}}};
  std::ofstream(dir.file("scene.json")) << scene.dump(2);
  json camera{{"width", 160},   {"height", 160}, {"fx", 400.0}, {"fy", 400.0},
              {"cx", 80.0},     {"cy", 80.0},
              {"pose", {1, 0, 0, 0, 0, -1, 0, 0, 0, 0, -1, 0.6, 0, 0, 0, 1}}};
  std::ofstream(dir.file("camera.json")) << camera.dump(2);
}

}  // namespace

TEST_CASE("sample-pj: determinism, cap, and failure modes") {
  TempDir dir("cli_pj");
  write_obj(dir.file("cube.obj"), make_box({0.04, 0.04, 0.04}));

  const std::string args = " --seed 7 --contacts 150 --out " + dir.file("o1");
  auto r1 = run_cli("sample-pj " + dir.file("cube.obj") + args, dir);
  REQUIRE(r1.exit_code == 0);
  const std::string first = slurp(dir.file("o1/pj_grasps.json"));
  const std::string first_config = slurp(dir.file("o1/run_config.json"));

  auto r2 = run_cli("sample-pj " + dir.file("cube.obj") + args, dir);
  REQUIRE(r2.exit_code == 0);
  CHECK(slurp(dir.file("o1/pj_grasps.json")) == first);
  CHECK(slurp(dir.file("o1/run_config.json")) == first_config);

  const json grasps = load(dir.file("o1/pj_grasps.json"));
  REQUIRE(grasps.is_array());
  REQUIRE(!grasps.empty());
  CHECK(grasps[0]["gripper"] == "parallel_jaw");
  CHECK(grasps[0]["scores"]["pj_sim"].is_null());
  CHECK(grasps[0]["scores"]["pj_soft"].is_number());  // cube is watertight
  CHECK(grasps[0]["pose"].size() == 16);

  auto capped = run_cli("sample-pj " + dir.file("cube.obj") +
                            " --seed 7 --max-grasps 10 --out " + dir.file("o2"),
                        dir);
  REQUIRE(capped.exit_code == 0);
  CHECK(load(dir.file("o2/pj_grasps.json")).size() <= 10);

  auto missing =
      run_cli("sample-pj " + dir.file("absent.obj") + " --out " + dir.file("o3"), dir);
  CHECK(missing.exit_code == 1);
  CHECK(missing.err.find("absent.obj") != std::string::npos);

  auto usage = run_cli("sample-pj", dir);
  CHECK(usage.exit_code == 2);
}

TEST_CASE("sample-vacuum: slab success summary and cup validation") {
  TempDir dir("cli_vac");
  write_obj(dir.file("slab.obj"), make_box({1.0, 1.0, 0.004}));

  auto r = run_cli("sample-vacuum " + dir.file("slab.obj") + " --seed 3 --count 300 --out " +
                       dir.file("o1"),
                   dir);
  REQUIRE(r.exit_code == 0);
  const auto pos = r.out.find("success fraction ");
  REQUIRE(pos != std::string::npos);
  const double fraction = std::strtod(r.out.c_str() + pos + 17, nullptr);
  CHECK(fraction >= 0.9);

  const json grasps = load(dir.file("o1/vacuum_grasps.json"));
  REQUIRE(grasps.size() == 300);
  for (const auto& g : {grasps[0], grasps[17], grasps[123]}) {
    CHECK(g["gripper"] == "vacuum");
    const double seal = g["scores"]["sc_seal"].get<double>();
    CHECK((seal == 0.0 || seal == 1.0));
    CHECK(g["seal"].contains("failure_reason"));
  }

  std::ofstream(dir.file("badcup.json")) << R"({"radius": -0.01})";
  auto bad = run_cli("sample-vacuum " + dir.file("slab.obj") + " --cup " +
                         dir.file("badcup.json") + " --out " + dir.file("o2"),
                     dir);
  CHECK(bad.exit_code == 2);

  std::ofstream(dir.file("unknown.json")) << R"({"radius": 0.01, "bellows": 3})";
  auto unknown = run_cli("sample-vacuum " + dir.file("slab.obj") + " --cup " +
                             dir.file("unknown.json") + " --out " + dir.file("o3"),
                         dir);
  CHECK(unknown.exit_code == 2);
  CHECK(unknown.err.find("bellows") != std::string::npos);

  auto again = run_cli("sample-vacuum " + dir.file("slab.obj") +
                           " --seed 3 --count 300 --out " + dir.file("o1"),
                       dir);
  REQUIRE(again.exit_code == 0);
  CHECK(load(dir.file("o1/vacuum_grasps.json")) == grasps);
}

TEST_CASE("label-scene: stack fixture labels, artifacts, and determinism") {
  TempDir dir("cli_scene");
  write_stack_scene(dir);

  const std::string args = "label-scene " + dir.file("scene.json") + " " +
                           dir.file("camera.json") + " --seed 1 --heatmaps --out " +
                           dir.file("out");
  auto r = run_cli(args, dir);
  REQUIRE(r.exit_code == 0);

  const json labels = load(dir.file("out/labels.json"));
  CHECK(labels["relation_matrix"] == json::array({0, 1, -1, 0}));
  CHECK(labels["instances"][0]["layer"] == "top");
  CHECK(labels["instances"][1]["layer"] == "secondary");
  CHECK(labels["difficulty"]["level"] == 2);  // occluded beyond 5%, complete, unique

  int w = 0, h = 0;
  const auto ids = read_pgm16(dir.file("out/instance_ids.pgm"), w, h);
  CHECK(w == 160);
  CHECK(h == 160);
  std::size_t vis1 = 0;
  for (const auto v : ids) vis1 += v == 1 ? 1 : 0;
  CHECK(vis1 == labels["instances"][0]["visible_pixels"].get<std::size_t>());

  const auto amodal2 = read_pgm16(dir.file("out/amodal_2.pgm"), w, h);
  std::size_t am2 = 0;
  for (const auto v : amodal2) am2 += v == 2 ? 1 : 0;
  CHECK(am2 == labels["instances"][1]["amodal_pixels"].get<std::size_t>());

  const auto depth = read_pfm(dir.file("out/depth.pfm"), w, h);
  CHECK(depth[80 * 160 + 80] == doctest::Approx(0.6 - 0.09).epsilon(1e-4));

  CHECK(std::ifstream(dir.file("out/com_heatmap_1.pfm")).good());

  const std::string before = slurp(dir.file("out/labels.json")) +
                             slurp(dir.file("out/instance_ids.pgm")) +
                             slurp(dir.file("out/depth.pfm")) +
                             slurp(dir.file("out/amodal_1.pgm")) +
                             slurp(dir.file("out/com_heatmap_2.pfm"));
  auto again = run_cli(args, dir);
  REQUIRE(again.exit_code == 0);
  CHECK(slurp(dir.file("out/labels.json")) + slurp(dir.file("out/instance_ids.pgm")) +
            slurp(dir.file("out/depth.pfm")) + slurp(dir.file("out/amodal_1.pgm")) +
            slurp(dir.file("out/com_heatmap_2.pfm")) ==
        before);
}

TEST_CASE("label-scene: schema violations exit 2 with the JSON pointer") {
  TempDir dir("cli_schema");
  write_stack_scene(dir);
  json bad = load(dir.file("scene.json"));
  bad["objects"][0]["surprise"] = 1;
  std::ofstream(dir.file("bad_scene.json")) << bad.dump(2);

  auto r = run_cli("label-scene " + dir.file("bad_scene.json") + " " +
                       dir.file("camera.json") + " --out " + dir.file("out"),
                   dir);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("/objects/0/surprise") != std::string::npos);
}

TEST_CASE("label-scene: failed runs keep run_config.json but drop partial artifacts") {
  TempDir dir("cli_partial");
  write_stack_scene(dir);
  std::ofstream(dir.file("bad_kp.json")) << R"({"small.obj": [{"id_sem": "x"}]})";

  auto r = run_cli("label-scene " + dir.file("scene.json") + " " + dir.file("camera.json") +
                       " --keypoints " + dir.file("bad_kp.json") + " --out " +
                       dir.file("out"),
                   dir);
  CHECK(r.exit_code == 2);
  CHECK(std::ifstream(dir.file("out/run_config.json")).good());
  CHECK_FALSE(std::ifstream(dir.file("out/instance_ids.pgm")).good());
  CHECK_FALSE(std::ifstream(dir.file("out/labels.json")).good());
}

TEST_CASE("label-scene: keypoints and grasp filtering round through the CLI") {
  TempDir dir("cli_filter");
  write_stack_scene(dir);
  std::ofstream(dir.file("kp.json"))
      << R"({"small.obj": [{"id_sem": 3, "position": [0, 0, 0.02]}]})";

  // Per-object vacuum labels for the small box: top and bottom contacts.
  json vac = json::array();
  vac.push_back(json{{"gripper", "vacuum"},
                     {"pose", {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1}},
                     {"contact", {0.0, 0.0, 0.02}},
                     {"approach", {0.0, 0.0, -1.0}},
                     {"scores", {{"sc_seal", 1.0}, {"sc_sim", nullptr}}}});
  vac.push_back(json{{"gripper", "vacuum"},
                     {"pose", {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1}},
                     {"contact", {0.0, 0.0, -0.02}},
                     {"approach", {0.0, 0.0, 1.0}},
                     {"scores", {{"sc_seal", 1.0}, {"sc_sim", nullptr}}}});
  std::ofstream(dir.file("vac.json")) << vac.dump(2);

  auto r = run_cli("label-scene " + dir.file("scene.json") + " " + dir.file("camera.json") +
                       " --keypoints " + dir.file("kp.json") + " --vacuum-labels " +
                       dir.file("vac.json") + " --out " + dir.file("out"),
                   dir);
  REQUIRE(r.exit_code == 0);
  const json labels = load(dir.file("out/labels.json"));

  REQUIRE(labels.contains("keypoints"));
  REQUIRE(labels["keypoints"].size() == 1);
  CHECK(labels["keypoints"][0]["id_sem"] == 3);
  CHECK(labels["keypoints"][0]["visible"] == true);

  const auto& vac_filter = labels["grasp_filter"]["vacuum"];
  REQUIRE(vac_filter.size() == 2);  // one entry per scene instance
  const auto& small_box = vac_filter[0]["grasps"];
  REQUIRE(small_box.size() == 2);
  CHECK(small_box[0]["kept"] == true);
  CHECK(small_box[0]["sc_sim"].is_number());
  CHECK(small_box[1]["kept"] == false);
}

TEST_CASE("calibrate: synthetic recovery, trace length, and CSV failure modes") {
  TempDir dir("cli_cal");

  // Synthetic records labeled by the model at hidden parameters.
  SealFixtureSet set = make_seal_fixture_set();
  label_records(set.records, SuctionCupParams{}, {4.0, 0.02});
  std::vector<std::string> mesh_files;
  for (std::size_t i = 0; i < set.records.size(); ++i) {
    const std::string name = "m" + std::to_string(i) + ".obj";
    write_obj(dir.file(name), *set.records[i].mesh);
    mesh_files.push_back(name);
  }
  {
    std::ofstream csv(dir.file("records.csv"));
    csv << "mesh,contact_x,contact_y,contact_z,approach_x,approach_y,approach_z,label,"
           "tearoff_n\n";
    csv.precision(17);
    for (std::size_t i = 0; i < set.records.size(); ++i) {
      const auto& r = set.records[i];
      csv << mesh_files[i] << "," << r.candidate.contact.x << "," << r.candidate.contact.y
          << "," << r.candidate.contact.z << "," << r.candidate.approach.x << ","
          << r.candidate.approach.y << "," << r.candidate.approach.z << ","
          << (r.observed_seal ? 1 : 0) << ",\n";
    }
  }

  auto r = run_cli("calibrate " + dir.file("records.csv") + " --seed 2 --budget 60 --out " +
                       dir.file("o1"),
                   dir);
  REQUIRE(r.exit_code == 0);
  const json result = load(dir.file("o1/calibration.json"));
  CHECK(result["best_objective"].get<double>() >= 0.95);
  CHECK(result["trace"].size() == 60);

  auto short_run = run_cli("calibrate " + dir.file("records.csv") +
                               " --seed 2 --budget 10 --out " + dir.file("o2"),
                           dir);
  REQUIRE(short_run.exit_code == 0);
  CHECK(load(dir.file("o2/calibration.json"))["trace"].size() == 10);

  {
    std::ofstream csv(dir.file("empty.csv"));
    csv << "mesh,contact_x,contact_y,contact_z,approach_x,approach_y,approach_z,label,"
           "tearoff_n\n";
  }
  auto empty =
      run_cli("calibrate " + dir.file("empty.csv") + " --out " + dir.file("o3"), dir);
  CHECK(empty.exit_code == 2);

  {
    std::ofstream csv(dir.file("broken.csv"));
    csv << "mesh,contact_x,contact_y,contact_z,approach_x,approach_y,approach_z,label,"
           "tearoff_n\n";
    csv << mesh_files[0] << ",0,0,abc,0,0,-1,1,\n";
  }
  auto broken =
      run_cli("calibrate " + dir.file("broken.csv") + " --out " + dir.file("o4"), dir);
  CHECK(broken.exit_code == 1);
  CHECK(broken.err.find(":2:") != std::string::npos);  // offending row number
}
