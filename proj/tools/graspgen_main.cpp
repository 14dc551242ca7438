// graspgen: grasp-label synthesis for vacuum and parallel-jaw grippers on
// triangle meshes, plus scene-level annotation of bin layouts.
//
// Exit codes: 0 success, 1 runtime error, 2 usage/validation error.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <vector>

#include "graspgen/calibrate.hpp"
#include "graspgen/errors.hpp"
#include "graspgen/image_io.hpp"
#include "graspgen/json_io.hpp"
#include "graspgen/mesh.hpp"
#include "graspgen/pj.hpp"
#include "graspgen/scene.hpp"
#include "graspgen/suction.hpp"
#include "graspgen/wrench.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace grasp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Creates the output directory, writes run_config.json first, and removes
// every artifact registered afterwards if the run fails. run_config.json
// stays as the record of the attempted run.
class OutputDir {
 public:
  OutputDir(const std::string& dir, const json& config) : dir_(dir) {
    fs::create_directories(dir_);
    write_json_file((dir_ / "run_config.json").string(), config);
  }

  std::string file(const std::string& name) {
    artifacts_.push_back(dir_ / name);
    return (dir_ / name).string();
  }

  void commit() { committed_ = true; }

  ~OutputDir() {
    if (committed_) return;
    for (const auto& p : artifacts_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }

 private:
  fs::path dir_;
  std::vector<fs::path> artifacts_;
  bool committed_ = false;
};

struct CommonOpts {
  std::string out;
  std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--out", opts.out, "output directory")->required();
  cmd->add_option("--seed", opts.seed, "root seed for all randomness (default 0)");
}

int cmd_sample_pj(const std::string& mesh_path, const CommonOpts& common,
                  const std::string& gripper_path, std::size_t max_grasps,
                  std::size_t contacts, int attempts, int poses, double density) {
  GripperGeometry gripper;
  if (!gripper_path.empty()) gripper = load_gripper(gripper_path);

  json config{{"command", "sample-pj"},     {"mesh", mesh_path},
              {"out", common.out},          {"seed", common.seed},
              {"max_grasps", max_grasps},   {"contact_samples", contacts},
              {"attempts", attempts},       {"poses_per_contact", poses},
              {"density", density},         {"gripper", gripper_to_json(gripper)}};
  OutputDir out(common.out, config);

  const TriMesh mesh = load_mesh(mesh_path);
  PjSampleConfig sample_config;
  sample_config.max_grasps = max_grasps;
  sample_config.contact_samples = contacts;
  sample_config.attempts = attempts;
  sample_config.poses_per_contact = poses;

  auto grasps = sample_pj_grasps(mesh, gripper, sample_config, common.seed);

  if (mesh.watertight()) {
    const MassProperties mp = mesh.mass_properties(density);
    for (auto& g : grasps)
      g.s_pj_soft = soft_finger_score(g, mp.center_of_mass, mp.mass, {0, 0, -1});
  }

  write_json_file(out.file("pj_grasps.json"), pj_grasps_to_json(grasps));
  std::cout << "sample-pj: " << grasps.size() << " grasps -> " << common.out << "\n";
  out.commit();
  return kExitOk;
}

int cmd_sample_vacuum(const std::string& mesh_path, const CommonOpts& common,
                      const std::string& cup_path, std::size_t count, double density) {
  SuctionCupParams cup;
  if (!cup_path.empty()) cup = load_cup_params(cup_path);
  cup.validate();

  json config{{"command", "sample-vacuum"}, {"mesh", mesh_path}, {"out", common.out},
              {"seed", common.seed},        {"count", count},    {"density", density},
              {"cup", cup_params_to_json(cup)}};
  OutputDir out(common.out, config);

  const TriMesh mesh = load_mesh(mesh_path);
  const auto evaluated = sample_vacuum_candidates(mesh, cup, count, common.seed);

  const std::optional<MassProperties> mp =
      mesh.watertight() ? std::optional<MassProperties>(mesh.mass_properties(density))
                        : std::nullopt;

  std::vector<VacuumGraspLabel> labels;
  labels.reserve(evaluated.size());
  std::size_t successes = 0;
  for (const auto& [cand, eval] : evaluated) {
    VacuumGraspLabel label;
    label.candidate = cand;
    label.success = eval.success;
    label.failure_reason = eval.failure_reason;
    label.delta_l_max = eval.delta_l_max;
    label.vacuum_force = eval.vacuum_force;
    label.max_normal_lift = eval.max_normal_lift;
    label.s_sc_seal = eval.success ? 1.0 : 0.0;
    if (mp) {
      Vec3 t1, t2;
      const Vec3 v = normalized(cand.approach);
      orthonormal_basis(v, t1, t2);
      label.s_sc_sim = vacuum_wrench_score(cand.contact, Mat3::from_cols(t1, t2, v),
                                           mp->center_of_mass, mp->mass, cup, {0, 0, -1})
                           .s;
    }
    successes += eval.success ? 1 : 0;
    labels.push_back(std::move(label));
  }

  write_json_file(out.file("vacuum_grasps.json"), vacuum_grasps_to_json(labels));
  std::cout << "sample-vacuum: " << labels.size() << " candidates, success fraction "
            << (labels.empty() ? 0.0
                               : static_cast<double>(successes) /
                                     static_cast<double>(labels.size()))
            << " -> " << common.out << "\n";
  out.commit();
  return kExitOk;
}

json labels_to_json(const Scene& scene, const SceneLabels& labels) {
  json instances = json::array();
  for (const auto& l : labels.instances) {
    instances.push_back(json{{"instance_id", l.instance_id},
                             {"class_id", l.class_id},
                             {"amodal_pixels", l.amodal_pixels},
                             {"visible_pixels", l.visible_pixels},
                             {"occluded_pixels", l.occluded_pixels},
                             {"occlusion_score", l.occlusion_score},
                             {"fully_hidden", l.fully_hidden},
                             {"in_view", l.in_view},
                             {"complete", l.complete},
                             {"layer", to_string(l.layer)}});
  }
  json edges = json::array();
  for (const auto& [i, k] : labels.edges)
    edges.push_back(json::array({scene.instances[static_cast<std::size_t>(i)].instance_id,
                                 scene.instances[static_cast<std::size_t>(k)].instance_id}));
  return json{{"instances", instances},
              {"relation_matrix", labels.relation},
              {"layer_edges", edges},
              {"difficulty",
               {{"level", labels.difficulty.level},
                {"layer_count", labels.difficulty.layer_count},
                {"max_occlusion", labels.difficulty.max_occlusion},
                {"all_complete", labels.difficulty.all_complete},
                {"classes_unique", labels.difficulty.classes_unique}}}};
}

int cmd_label_scene(const std::string& scene_path, const std::string& camera_path,
                    const CommonOpts& common, int resolution,
                    const std::string& keypoints_path, bool heatmaps, double sigma,
                    double density, const std::string& pj_labels_path,
                    const std::string& vacuum_labels_path, const std::string& cup_path,
                    const std::string& gripper_path) {
  json config{{"command", "label-scene"},
              {"scene", scene_path},
              {"camera", camera_path},
              {"out", common.out},
              {"seed", common.seed},
              {"resolution", resolution},
              {"keypoints", keypoints_path},
              {"heatmaps", heatmaps},
              {"heatmap_sigma", sigma},
              {"density", density},
              {"pj_labels", pj_labels_path},
              {"vacuum_labels", vacuum_labels_path}};
  OutputDir out(common.out, config);

  const Scene scene = load_scene(scene_path);
  Camera camera = load_camera(camera_path);
  if (resolution > 0) {
    // Override keeps the field of view: intrinsics scale with the image.
    const double sx = static_cast<double>(resolution) / camera.width;
    const double sy = static_cast<double>(resolution) / camera.height;
    camera.fx *= sx; camera.cx *= sx; camera.fy *= sy; camera.cy *= sy;
    camera.width = resolution;
    camera.height = resolution;
  }

  const InstanceMaps maps = render_maps(scene, camera);
  const SceneLabels labels = compute_scene_labels(scene, maps);

  write_pgm16(out.file("instance_ids.pgm"), maps.width, maps.height, maps.visible.data());
  write_pfm(out.file("depth.pfm"), maps.width, maps.height, maps.depth.data());
  for (const auto& per : maps.instances)
    write_pgm16(out.file("amodal_" + std::to_string(per.instance_id) + ".pgm"), maps.width,
                maps.height, per.amodal.data());

  json label_json = labels_to_json(scene, labels);

  if (!keypoints_path.empty()) {
    const auto annotations = load_keypoint_annotations(keypoints_path);
    json kps = json::array();
    for (const auto& kp : project_keypoints(scene, camera, annotations))
      kps.push_back(json{{"id_sem", kp.id_sem},
                         {"x", kp.x},
                         {"y", kp.y},
                         {"id_class", kp.id_class},
                         {"id_instance", kp.id_instance},
                         {"visible", kp.visible}});
    label_json["keypoints"] = kps;
  }

  if (heatmaps) {
    for (std::size_t i = 0; i < scene.instances.size(); ++i) {
      const auto map = com_heatmap(scene, camera, static_cast<int>(i), sigma, density);
      write_pfm(out.file("com_heatmap_" +
                         std::to_string(scene.instances[i].instance_id) + ".pfm"),
                camera.width, camera.height, map.data());
    }
  }

  if (!pj_labels_path.empty() || !vacuum_labels_path.empty()) {
    GraspFilterConfig filter_config;
    if (!cup_path.empty()) filter_config.cup = load_cup_params(cup_path);
    if (!gripper_path.empty()) filter_config.gripper = load_gripper(gripper_path);
    json filter_json;

    if (!pj_labels_path.empty()) {
      const auto grasps = pj_grasps_from_json(load_json_file(pj_labels_path));
      json per_instance = json::array();
      for (std::size_t i = 0; i < scene.instances.size(); ++i) {
        const auto& inst = scene.instances[i];
        const auto filtered =
            filter_pj_grasps(scene, camera, static_cast<int>(i), grasps, filter_config);
        const MassProperties mp = inst.mesh->watertight()
                                      ? inst.mesh->mass_properties(density)
                                      : MassProperties{};
        json list = json::array();
        for (const auto& f : filtered) {
          json entry{{"index", f.index}, {"kept", f.kept}, {"cause", to_string(f.cause)}};
          if (f.kept && inst.mesh->watertight()) {
            PjGraspCandidate world = grasps[f.index];
            world.pose = inst.pose.compose(world.pose);
            world.contact_a = inst.pose.apply(world.contact_a);
            world.contact_b = inst.pose.apply(world.contact_b);
            world.closing_dir = inst.pose.apply_vector(world.closing_dir);
            entry["pj_soft"] = soft_finger_score(world, inst.pose.apply(mp.center_of_mass),
                                                 mp.mass, scene.gravity_dir);
          }
          list.push_back(std::move(entry));
        }
        per_instance.push_back(
            json{{"instance_id", inst.instance_id}, {"grasps", list}});
      }
      filter_json["parallel_jaw"] = per_instance;
    }

    if (!vacuum_labels_path.empty()) {
      const auto labels_in = vacuum_grasps_from_json(load_json_file(vacuum_labels_path));
      std::vector<VacuumGraspCandidate> candidates;
      candidates.reserve(labels_in.size());
      for (const auto& l : labels_in) candidates.push_back(l.candidate);
      json per_instance = json::array();
      for (std::size_t i = 0; i < scene.instances.size(); ++i) {
        const auto& inst = scene.instances[i];
        const auto filtered = filter_vacuum_grasps(scene, camera, static_cast<int>(i),
                                                   candidates, filter_config);
        const bool has_mass = inst.mesh->watertight();
        const MassProperties mp =
            has_mass ? inst.mesh->mass_properties(density) : MassProperties{};
        json list = json::array();
        for (const auto& f : filtered) {
          json entry{{"index", f.index}, {"kept", f.kept}, {"cause", to_string(f.cause)}};
          if (f.kept && has_mass) {
            const Vec3 contact = inst.pose.apply(candidates[f.index].contact);
            const Vec3 v = normalized(inst.pose.apply_vector(candidates[f.index].approach));
            Vec3 t1, t2;
            orthonormal_basis(v, t1, t2);
            entry["sc_sim"] =
                vacuum_wrench_score(contact, Mat3::from_cols(t1, t2, v),
                                    inst.pose.apply(mp.center_of_mass), mp.mass,
                                    filter_config.cup, scene.gravity_dir)
                    .s;
          }
          list.push_back(std::move(entry));
        }
        per_instance.push_back(
            json{{"instance_id", inst.instance_id}, {"grasps", list}});
      }
      filter_json["vacuum"] = per_instance;
    }
    label_json["grasp_filter"] = filter_json;
  }

  write_json_file(out.file("labels.json"), label_json);
  std::cout << "label-scene: " << scene.instances.size() << " instances, difficulty "
            << labels.difficulty.level << " -> " << common.out << "\n";
  out.commit();
  return kExitOk;
}

int cmd_calibrate(const std::string& csv_path, const CommonOpts& common,
                  const std::string& cup_path, int budget) {
  SuctionCupParams cup;
  if (!cup_path.empty()) cup = load_cup_params(cup_path);

  json config{{"command", "calibrate"}, {"records", csv_path}, {"out", common.out},
              {"seed", common.seed},    {"budget", budget},    {"cup", cup_params_to_json(cup)}};
  OutputDir out(common.out, config);

  const auto records = load_records_csv(csv_path);
  if (records.empty()) {
    std::cerr << "calibrate: no records in " << csv_path << "\n";
    return kExitUsage;
  }
  const SearchBox box;
  const CalibrationResult result = bayes_optimize(records, cup, box, budget, common.seed);

  json trace = json::array();
  for (const auto& p : result.trace)
    trace.push_back(json{{"stiffness_ratio", p.params.stiffness_ratio},
                         {"threshold_fraction", p.params.threshold_fraction},
                         {"objective", p.objective}});
  write_json_file(out.file("calibration.json"),
                  json{{"best",
                        {{"stiffness_ratio", result.best.stiffness_ratio},
                         {"threshold_fraction", result.best.threshold_fraction}}},
                       {"best_objective", result.best_objective},
                       {"record_count", records.size()},
                       {"trace", trace}});
  std::cout << "calibrate: best accuracy " << result.best_objective << " at k_r/k_e="
            << result.best.stiffness_ratio
            << ", eps/F_p=" << result.best.threshold_fraction << "\n";
  out.commit();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ambidextrous grasp-label synthesis on triangle meshes"};
  app.require_subcommand(1);

  CommonOpts pj_common, vac_common, scene_common, cal_common;

  // sample-pj
  auto* pj = app.add_subcommand("sample-pj", "Sample parallel-jaw grasps on a mesh");
  std::string pj_mesh, pj_gripper;
  std::size_t pj_max = 5000, pj_contacts = 1000;
  int pj_attempts = 5, pj_poses = 12;
  double pj_density = 1000.0;
  pj->add_option("mesh", pj_mesh, "OBJ or ASCII PLY mesh")->required();
  add_common(pj, pj_common);
  pj->add_option("--gripper", pj_gripper, "gripper geometry JSON");
  pj->add_option("--max-grasps", pj_max, "cap on emitted grasps (default 5000)");
  pj->add_option("--contacts", pj_contacts, "surface contact samples (default 1000)");
  pj->add_option("--attempts", pj_attempts, "jittered antipodal attempts N (default 5)");
  pj->add_option("--poses", pj_poses, "rotations per contact L (default 12)");
  pj->add_option("--density", pj_density, "uniform density kg/m^3 (default 1000)");

  // sample-vacuum
  auto* vac = app.add_subcommand("sample-vacuum", "Evaluate vacuum seals on a mesh");
  std::string vac_mesh, vac_cup;
  std::size_t vac_count = 1000;
  double vac_density = 1000.0;
  vac->add_option("mesh", vac_mesh, "OBJ or ASCII PLY mesh")->required();
  add_common(vac, vac_common);
  vac->add_option("--cup", vac_cup, "suction cup parameter JSON");
  vac->add_option("--count", vac_count, "surface candidates (default 1000)");
  vac->add_option("--density", vac_density, "uniform density kg/m^3 (default 1000)");

  // label-scene
  auto* lab = app.add_subcommand("label-scene", "Render and label a bin scene");
  std::string lab_scene, lab_camera, lab_keypoints, lab_pj, lab_vac, lab_cup, lab_gripper;
  int lab_resolution = 0;
  bool lab_heatmaps = false;
  double lab_sigma = 12.0, lab_density = 1000.0;
  lab->add_option("scene", lab_scene, "scene JSON")->required();
  lab->add_option("camera", lab_camera, "camera JSON")->required();
  add_common(lab, scene_common);
  lab->add_option("--resolution", lab_resolution,
                  "override image size to NxN (default: camera file)");
  lab->add_option("--keypoints", lab_keypoints, "keypoint annotation JSON");
  lab->add_flag("--heatmaps", lab_heatmaps, "write center-of-mass heatmaps");
  lab->add_option("--heatmap-sigma", lab_sigma, "heatmap sigma in pixels (default 12)");
  lab->add_option("--density", lab_density, "uniform density kg/m^3 (default 1000)");
  lab->add_option("--pj-labels", lab_pj, "per-object parallel-jaw labels to filter");
  lab->add_option("--vacuum-labels", lab_vac, "per-object vacuum labels to filter");
  lab->add_option("--cup", lab_cup, "cup JSON for sweep volume and wrench scores");
  lab->add_option("--gripper", lab_gripper, "gripper JSON for sweep volume");

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Fit cup parameters to labeled attempts");
  std::string cal_csv, cal_cup;
  int cal_budget = 60;
  cal->add_option("records", cal_csv, "measurement CSV")->required();
  add_common(cal, cal_common);
  cal->add_option("--cup", cal_cup, "suction cup parameter JSON");
  cal->add_option("--budget", cal_budget, "objective evaluations (default 60, min 10)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (pj->parsed())
      return cmd_sample_pj(pj_mesh, pj_common, pj_gripper, pj_max, pj_contacts, pj_attempts,
                           pj_poses, pj_density);
    if (vac->parsed())
      return cmd_sample_vacuum(vac_mesh, vac_common, vac_cup, vac_count, vac_density);
    if (lab->parsed())
      return cmd_label_scene(lab_scene, lab_camera, scene_common, lab_resolution,
                             lab_keypoints, lab_heatmaps, lab_sigma, lab_density, lab_pj,
                             lab_vac, lab_cup, lab_gripper);
    if (cal->parsed()) return cmd_calibrate(cal_csv, cal_common, cal_cup, cal_budget);
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
