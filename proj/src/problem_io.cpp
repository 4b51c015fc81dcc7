#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "certloc/problem.hpp"

namespace certloc {

namespace {

using nlohmann::json;

json rot_to_json(const Rotation2& r) { return json::array({r.c, r.s}); }

Rotation2 rot_from_json(const json& j) {
  Rotation2 r{j.at(0).get<double>(), j.at(1).get<double>()};
  return r.normalized();
}

json vec_to_json(const Eigen::Vector2d& v) { return json::array({v.x(), v.y()}); }

Eigen::Vector2d vec_from_json(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

json instance_to_json(const ProblemInstance& p) {
  json j;
  j["n_poses"] = p.n_poses;
  j["landmarks"] = json::array();
  for (const auto& l : p.landmarks.positions) j["landmarks"].push_back(vec_to_json(l));
  j["prior"] = {{"rot_cs", rot_to_json(p.prior.rot)},
                {"pos", vec_to_json(p.prior.pos)},
                {"kappa", p.prior.kappa},
                {"sigma2", p.prior.sigma2}};
  j["odometry"] = json::array();
  for (const auto& o : p.odometry) {
    j["odometry"].push_back({{"from", o.from_index + 1},
                             {"to", o.to_index + 1},
                             {"rot_cs", rot_to_json(o.delta_rot)},
                             {"pos", vec_to_json(o.delta_pos)},
                             {"kappa", o.kappa},
                             {"sigma2", o.sigma2}});
  }
  j["measurements"] = json::array();
  for (const auto& m : p.measurements) {
    json cands = json::array();
    for (int c : m.candidates) cands.push_back(c + 1);
    j["measurements"].push_back({{"timestep", m.timestep + 1},
                                 {"k", m.k},
                                 {"y", vec_to_json(m.y)},
                                 {"sigma2", m.sigma2},
                                 {"candidates", cands}});
  }
  return j;
}

ProblemInstance instance_from_json(const json& j) {
  ProblemInstance p;
  p.n_poses = j.at("n_poses").get<int>();
  for (const auto& l : j.at("landmarks")) p.landmarks.positions.push_back(vec_from_json(l));
  const auto& pr = j.at("prior");
  p.prior.rot = rot_from_json(pr.at("rot_cs"));
  p.prior.pos = vec_from_json(pr.at("pos"));
  p.prior.kappa = pr.at("kappa").get<double>();
  p.prior.sigma2 = pr.at("sigma2").get<double>();
  for (const auto& jo : j.at("odometry")) {
    RelPoseMeasurement o;
    o.from_index = jo.at("from").get<int>() - 1;
    o.to_index = jo.at("to").get<int>() - 1;
    o.delta_rot = rot_from_json(jo.at("rot_cs"));
    o.delta_pos = vec_from_json(jo.at("pos"));
    o.kappa = jo.at("kappa").get<double>();
    o.sigma2 = jo.at("sigma2").get<double>();
    p.odometry.push_back(o);
  }
  for (const auto& jm : j.at("measurements")) {
    UdaMeasurement m;
    m.timestep = jm.at("timestep").get<int>() - 1;
    m.k = jm.at("k").get<int>();
    m.y = vec_from_json(jm.at("y"));
    m.sigma2 = jm.at("sigma2").get<double>();
    for (const auto& c : jm.at("candidates")) m.candidates.push_back(c.get<int>() - 1);
    p.measurements.push_back(m);
  }
  p.validate();
  return p;
}

}  // namespace

std::string to_json_string(const ProblemInstance& instance, int indent) {
  return instance_to_json(instance).dump(indent);
}

ProblemInstance instance_from_json_string(const std::string& text) {
  return instance_from_json(json::parse(text));
}

void save_instance(const ProblemInstance& instance, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << to_json_string(instance) << "\n";
}

ProblemInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file: " + path);
  json j;
  in >> j;
  return instance_from_json(j);
}

}  // namespace certloc
