#include "hmor_cli/scene_file.hpp"

#include "hmor/error.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>

namespace hmor::cli {

namespace {

using json = nlohmann::json;

void require_object(const json& node, const std::string& where,
                    std::initializer_list<std::string_view> allowed) {
  if (!node.is_object()) throw InvalidInput(where + " must be an object");
  for (const auto& [key, value] : node.items()) {
    bool known = false;
    for (auto name : allowed) known = known || key == name;
    if (!known) throw InvalidInput("unknown field '" + where + "." + key + "'");
  }
}

const json& field(const json& node, const std::string& where, const char* name) {
  const auto it = node.find(name);
  if (it == node.end()) throw InvalidInput("missing field '" + where + "." + name + "'");
  return *it;
}

double number(const json& node, const std::string& where, const char* name) {
  const json& v = field(node, where, name);
  if (!v.is_number()) throw InvalidInput("field '" + where + "." + name + "' must be a number");
  return v.get<double>();
}

int integer(const json& node, const std::string& where, const char* name) {
  const json& v = field(node, where, name);
  if (!v.is_number_integer()) {
    throw InvalidInput("field '" + where + "." + name + "' must be an integer");
  }
  return v.get<int>();
}

const json& array(const json& node, const std::string& where, const char* name) {
  const json& v = field(node, where, name);
  if (!v.is_array()) throw InvalidInput("field '" + where + "." + name + "' must be an array");
  return v;
}

SkeletonTopology parse_topology(const json& node) {
  require_object(node, "topology", {"joints", "root_index", "parts"});
  SkeletonTopology topology;
  topology.joint_count = integer(node, "topology", "joints");
  topology.root_index = integer(node, "topology", "root_index");
  const json& parts = array(node, "topology", "parts");
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const json& p = parts[i];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() ||
        !p[1].is_number_integer()) {
      throw InvalidInput("topology.parts[" + std::to_string(i) +
                         "] must be a [start, end] integer pair");
    }
    topology.parts.push_back({p[0].get<int>(), p[1].get<int>()});
  }
  topology.validate();
  return topology;
}

Person parse_person(const json& node, const std::string& where,
                    const SkeletonTopology& topology) {
  require_object(node, where, {"box", "roi_area", "root_depth_mm", "joints"});
  const json& box_node = field(node, where, "box");
  const std::string box_where = where + ".box";
  require_object(box_node, box_where, {"u_top", "v_top", "w", "h"});
  const BoundingBox box{number(box_node, box_where, "u_top"), number(box_node, box_where, "v_top"),
                        number(box_node, box_where, "w"), number(box_node, box_where, "h")};

  const json& joints_node = array(node, where, "joints");
  RelativePose joints;
  joints.reserve(joints_node.size());
  for (std::size_t j = 0; j < joints_node.size(); ++j) {
    const std::string jw = where + ".joints[" + std::to_string(j) + "]";
    require_object(joints_node[j], jw, {"u", "v", "z_rel_mm"});
    joints.push_back({number(joints_node[j], jw, "u"), number(joints_node[j], jw, "v"),
                      number(joints_node[j], jw, "z_rel_mm")});
  }
  Person person{box, std::move(joints), number(node, where, "root_depth_mm"),
                number(node, where, "roi_area")};
  validate_person(person, topology);
  return person;
}

}  // namespace

Scene scene_from_json(const json& doc) {
  require_object(doc, "scene", {"schema_version", "camera", "persons", "topology"});
  const json& version = field(doc, "scene", "schema_version");
  if (!version.is_string() || version.get<std::string>() != kSceneSchema) {
    throw InvalidInput(std::string("unsupported schema_version; expected '") + kSceneSchema +
                       "'");
  }
  const json& cam = field(doc, "scene", "camera");
  require_object(cam, "camera", {"fx", "fy", "cx", "cy"});
  Camera camera(number(cam, "camera", "fx"), number(cam, "camera", "fy"),
                number(cam, "camera", "cx"), number(cam, "camera", "cy"));

  const auto topo_it = doc.find("topology");
  SkeletonTopology topology =
      topo_it == doc.end() ? SkeletonTopology::default17() : parse_topology(*topo_it);

  Scene scene{std::move(camera), std::move(topology), {}};
  const json& persons = array(doc, "scene", "persons");
  for (std::size_t m = 0; m < persons.size(); ++m) {
    scene.persons.push_back(
        parse_person(persons[m], "persons[" + std::to_string(m) + "]", scene.topology));
  }
  validate_scene(scene);
  return scene;
}

nlohmann::ordered_json scene_to_json(const Scene& scene) {
  nlohmann::ordered_json doc;
  doc["schema_version"] = kSceneSchema;
  doc["camera"] = {{"fx", scene.camera.fx()},
                   {"fy", scene.camera.fy()},
                   {"cx", scene.camera.cx()},
                   {"cy", scene.camera.cy()}};
  if (scene.topology != SkeletonTopology::default17()) {
    auto parts = nlohmann::ordered_json::array();
    for (const auto& p : scene.topology.parts) parts.push_back({p.start, p.end});
    doc["topology"] = {{"joints", scene.topology.joint_count},
                       {"root_index", scene.topology.root_index},
                       {"parts", parts}};
  }
  auto persons = nlohmann::ordered_json::array();
  for (const auto& p : scene.persons) {
    auto joints = nlohmann::ordered_json::array();
    for (const auto& j : p.joints) joints.push_back({{"u", j.u}, {"v", j.v}, {"z_rel_mm", j.z_rel}});
    persons.push_back({{"box", {{"u_top", p.box.u_top}, {"v_top", p.box.v_top},
                                {"w", p.box.w}, {"h", p.box.h}}},
                       {"roi_area", p.roi_area},
                       {"root_depth_mm", p.root_depth},
                       {"joints", joints}});
  }
  doc["persons"] = persons;
  return doc;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Scene load_scene(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput("'" + path.string() + "' is not valid JSON: " + e.what());
  }
  try {
    return scene_from_json(doc);
  } catch (const InvalidInput& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

void save_scene(const std::filesystem::path& path, const Scene& scene) {
  write_text(path, scene_to_json(scene).dump(2) + "\n");
}

}  // namespace hmor::cli
