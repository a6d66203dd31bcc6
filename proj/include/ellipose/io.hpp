#pragma once

// JSON files for maps, frames, estimates and synthetic configs. The layout is
// described in docs/formats.md. Numbers are written in shortest round-trip
// form, so reading a written file gives back the same doubles.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ellipose/pipeline.hpp"
#include "ellipose/scene.hpp"

namespace ellipose {

using Json = nlohmann::ordered_json;

// Writes to a temporary file next to `path`, then renames it over `path`.
inline void WriteFileAtomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw Error(ErrorCode::kInvalidArgument, "write failed for '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorCode::kInvalidArgument, "cannot rename onto '" + path + "': " + ec.message());
  }
}

inline std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kParseError, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace detail {

[[noreturn]] inline void ParseFail(const std::string& what) {
  throw Error(ErrorCode::kParseError, what);
}

inline const Json& Field(const Json& j, const char* key) {
  if (!j.is_object()) ParseFail(std::string("expected an object holding '") + key + "'");
  const auto it = j.find(key);
  if (it == j.end()) ParseFail(std::string("missing field '") + key + "'");
  return *it;
}

inline double Number(const Json& j, const char* what) {
  if (!j.is_number()) ParseFail(std::string("'") + what + "' must be a number");
  return j.get<double>();
}

inline double NumberField(const Json& j, const char* key) { return Number(Field(j, key), key); }

inline std::string StringField(const Json& j, const char* key) {
  const Json& v = Field(j, key);
  if (!v.is_string()) ParseFail(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

template <int N>
Eigen::Matrix<double, N, 1> VectorField(const Json& j, const char* key) {
  const Json& v = Field(j, key);
  if (!v.is_array() || v.size() != N) {
    ParseFail(std::string("'") + key + "' must be an array of " + std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) out[i] = Number(v[static_cast<size_t>(i)], key);
  return out;
}

// Row-major 3x3.
inline Matrix3d MatrixField(const Json& j, const char* key) {
  const Eigen::Matrix<double, 9, 1> v = VectorField<9>(j, key);
  Matrix3d m;
  m << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
  return m;
}

inline Json ToJson(const Matrix3d& m) {
  Json a = Json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) a.push_back(m(r, c));
  }
  return a;
}

template <int N>
Json ToJson(const Eigen::Matrix<double, N, 1>& v) {
  Json a = Json::array();
  for (int i = 0; i < N; ++i) a.push_back(v[i]);
  return a;
}

// Library validation errors on file content become parse errors.
template <typename F>
auto Checked(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParseError) throw;
    ParseFail(where + ": " + e.what());
  }
}

inline Json ImageSizeJson(ImageSize s) { return Json{{"width", s.width}, {"height", s.height}}; }

inline ImageSize ImageSizeFrom(const Json& j) {
  const ImageSize s{NumberField(j, "width"), NumberField(j, "height")};
  if (!(s.width > 0.0 && s.height > 0.0)) ParseFail("image_size must be positive");
  return s;
}

inline Json PoseJson(const Camera& cam) {
  return Json{{"R", ToJson(cam.rotation())}, {"t", ToJson<3>(cam.translation())}};
}

inline Camera PoseFrom(const Json& j, const Matrix3d& k, ImageSize size, const std::string& where) {
  const Matrix3d r = MatrixField(j, "R");
  const Vector3d t = VectorField<3>(j, "t");
  return Checked(where, [&] { return Camera(k, r, t, size); });
}

inline Json EllipseJson(const Ellipse& e) {
  return Json{{"cx", e.center().x()}, {"cy", e.center().y()}, {"ax", e.a()}, {"ay", e.b()},
              {"theta", e.angle()}};
}

inline Ellipse EllipseFrom(const Json& j, const std::string& where) {
  const double cx = NumberField(j, "cx");
  const double cy = NumberField(j, "cy");
  const double ax = NumberField(j, "ax");
  const double ay = NumberField(j, "ay");
  const double theta = NumberField(j, "theta");
  return Checked(where, [&] { return Ellipse(cx, cy, ax, ay, theta); });
}

}  // namespace detail

// ---- map ----

inline Json SceneMapToJson(const SceneMap& map) {
  Json objects = Json::array();
  for (const MapObject& o : map.objects) {
    objects.push_back(Json{{"id", o.id},
                           {"label", o.label},
                           {"center", detail::ToJson<3>(o.ellipsoid.center())},
                           {"axes", detail::ToJson<3>(o.ellipsoid.semi_axes())},
                           {"rotation", detail::ToJson(o.ellipsoid.rotation())}});
  }
  return Json{{"objects", objects}};
}

inline SceneMap SceneMapFromJson(const Json& j) {
  const Json& objects = detail::Field(j, "objects");
  if (!objects.is_array()) detail::ParseFail("'objects' must be an array");
  SceneMap map;
  for (const Json& o : objects) {
    MapObject obj;
    obj.id = detail::StringField(o, "id");
    obj.label = detail::StringField(o, "label");
    const Vector3d c = detail::VectorField<3>(o, "center");
    const Vector3d axes = detail::VectorField<3>(o, "axes");
    const Matrix3d r = detail::MatrixField(o, "rotation");
    obj.ellipsoid = detail::Checked("object '" + obj.id + "'", [&] { return Ellipsoid(c, axes, r); });
    map.objects.push_back(obj);
  }
  detail::Checked("map", [&] {
    map.Validate();
    return 0;
  });
  return map;
}

// ---- frames ----

inline Json FrameToJson(const FrameRecord& f) {
  Json dets = Json::array();
  for (const Detection& d : f.detections) {
    Json jd{{"label", d.label}, {"ellipse", detail::EllipseJson(d.ellipse)}};
    if (d.sigma) jd["sigma"] = *d.sigma;
    if (d.score) jd["score"] = *d.score;
    dets.push_back(jd);
  }
  Json j{{"id", f.id},
         {"K", detail::ToJson(f.intrinsics)},
         {"image_size", detail::ImageSizeJson(f.image_size)},
         {"detections", dets}};
  if (f.gt_camera) j["gt_pose"] = detail::PoseJson(*f.gt_camera);
  if (!f.truth.empty()) {
    Json truth = Json::array();
    for (const DetectionTruth& t : f.truth) {
      truth.push_back(
          Json{{"object_id", t.object_id}, {"truncated", t.truncated}, {"distortion", t.distortion}});
    }
    j["truth"] = truth;
  }
  return j;
}

inline FrameRecord FrameFromJson(const Json& j) {
  FrameRecord f;
  f.id = detail::StringField(j, "id");
  const std::string where = "frame '" + f.id + "'";
  f.intrinsics = detail::MatrixField(j, "K");
  f.image_size = detail::ImageSizeFrom(detail::Field(j, "image_size"));
  // Validates K through the camera constructor.
  detail::Checked(where, [&] { return Camera(f.intrinsics, Matrix3d::Identity(), Vector3d::Zero()); });
  const Json& dets = detail::Field(j, "detections");
  if (!dets.is_array()) detail::ParseFail(where + ": 'detections' must be an array");
  for (const Json& jd : dets) {
    Detection d;
    d.label = detail::StringField(jd, "label");
    d.ellipse = detail::EllipseFrom(detail::Field(jd, "ellipse"), where);
    if (jd.contains("sigma") && !jd["sigma"].is_null()) d.sigma = detail::Number(jd["sigma"], "sigma");
    if (jd.contains("score") && !jd["score"].is_null()) d.score = detail::Number(jd["score"], "score");
    detail::Checked(where, [&] {
      d.Validate();
      return 0;
    });
    f.detections.push_back(d);
  }
  if (j.contains("gt_pose") && !j["gt_pose"].is_null()) {
    f.gt_camera = detail::PoseFrom(j["gt_pose"], f.intrinsics, f.image_size, where);
  }
  if (j.contains("truth")) {
    const Json& truth = j["truth"];
    if (!truth.is_array() || truth.size() != f.detections.size()) {
      detail::ParseFail(where + ": 'truth' must parallel 'detections'");
    }
    for (const Json& t : truth) {
      DetectionTruth dt;
      dt.object_id = detail::StringField(t, "object_id");
      const Json& tr = detail::Field(t, "truncated");
      if (!tr.is_boolean()) detail::ParseFail(where + ": 'truncated' must be a boolean");
      dt.truncated = tr.get<bool>();
      dt.distortion = detail::NumberField(t, "distortion");
      f.truth.push_back(dt);
    }
  }
  return f;
}

inline Json FramesToJson(const std::vector<FrameRecord>& frames) {
  Json a = Json::array();
  for (const FrameRecord& f : frames) a.push_back(FrameToJson(f));
  return Json{{"frames", a}};
}

inline std::vector<FrameRecord> FramesFromJson(const Json& j) {
  const Json& a = detail::Field(j, "frames");
  if (!a.is_array()) detail::ParseFail("'frames' must be an array");
  std::vector<FrameRecord> out;
  for (const Json& f : a) out.push_back(FrameFromJson(f));
  return out;
}

// ---- estimates ----

inline Json EstimateToJson(const FrameEstimate& e) {
  Json j{{"frame_id", e.frame_id}, {"ok", e.ok}};
  if (!e.ok) {
    j["error"] = e.error;
    return j;
  }
  j["K"] = detail::ToJson(e.camera.intrinsics());
  j["image_size"] = detail::ImageSizeJson(e.camera.image_size());
  j["R"] = detail::ToJson(e.camera.rotation());
  j["t"] = detail::ToJson<3>(e.camera.translation());
  j["initial_pose"] = detail::PoseJson(e.initial_camera);
  Json inliers = Json::array();
  for (const AssociationPair& p : e.inliers) {
    inliers.push_back(Json{{"detection", p.detection}, {"object_id", p.object_id}});
  }
  j["inliers"] = inliers;
  j["initial_cost"] = e.initial_cost;
  j["final_cost"] = e.final_cost;
  j["n_detections"] = e.n_detections;
  return j;
}

inline FrameEstimate EstimateFromJson(const Json& j) {
  FrameEstimate e;
  e.frame_id = detail::StringField(j, "frame_id");
  const std::string where = "estimate '" + e.frame_id + "'";
  const Json& ok = detail::Field(j, "ok");
  if (!ok.is_boolean()) detail::ParseFail(where + ": 'ok' must be a boolean");
  e.ok = ok.get<bool>();
  if (!e.ok) {
    e.error = detail::StringField(j, "error");
    return e;
  }
  const Matrix3d k = detail::MatrixField(j, "K");
  const ImageSize size = detail::ImageSizeFrom(detail::Field(j, "image_size"));
  e.camera = detail::PoseFrom(j, k, size, where);
  e.initial_camera = detail::PoseFrom(detail::Field(j, "initial_pose"), k, size, where);
  const Json& inliers = detail::Field(j, "inliers");
  if (!inliers.is_array()) detail::ParseFail(where + ": 'inliers' must be an array");
  for (const Json& p : inliers) {
    const Json& d = detail::Field(p, "detection");
    if (!d.is_number_integer()) detail::ParseFail(where + ": inlier detection must be an integer");
    e.inliers.push_back({d.get<int>(), detail::StringField(p, "object_id")});
  }
  e.initial_cost = detail::NumberField(j, "initial_cost");
  e.final_cost = detail::NumberField(j, "final_cost");
  const Json& n = detail::Field(j, "n_detections");
  if (!n.is_number_integer()) detail::ParseFail(where + ": 'n_detections' must be an integer");
  e.n_detections = n.get<int>();
  return e;
}

inline Json EstimatesToJson(const std::vector<FrameEstimate>& estimates) {
  Json a = Json::array();
  for (const FrameEstimate& e : estimates) a.push_back(EstimateToJson(e));
  return Json{{"estimates", a}};
}

inline std::vector<FrameEstimate> EstimatesFromJson(const Json& j) {
  const Json& a = detail::Field(j, "estimates");
  if (!a.is_array()) detail::ParseFail("'estimates' must be an array");
  std::vector<FrameEstimate> out;
  for (const Json& e : a) out.push_back(EstimateFromJson(e));
  return out;
}

// ---- synthetic config ----

inline std::string_view TruncationName(TruncationModel m) {
  return m == TruncationModel::kImageBorder ? "image_border" : "side_cut";
}

inline Json SynthConfigToJson(const SynthConfig& c) {
  Json j;
  j["n_objects"] = c.n_objects;
  j["n_frames"] = c.n_frames;
  if (c.seed) j["seed"] = *c.seed;
  j["n_labels"] = c.n_labels;
  j["volume_min"] = detail::ToJson<3>(c.volume_min);
  j["volume_max"] = detail::ToJson<3>(c.volume_max);
  j["min_semi_axis"] = c.min_semi_axis;
  j["max_semi_axis"] = c.max_semi_axis;
  j["placement_margin"] = c.placement_margin;
  j["focal"] = c.focal;
  j["image_size"] = detail::ImageSizeJson(c.image_size);
  j["orbit_min_radius"] = c.orbit_min_radius;
  j["orbit_max_radius"] = c.orbit_max_radius;
  j["orbit_min_height"] = c.orbit_min_height;
  j["orbit_max_height"] = c.orbit_max_height;
  j["look_at_jitter"] = c.look_at_jitter;
  j["roll_jitter_deg"] = c.roll_jitter_deg;
  j["noise_enabled"] = c.noise_enabled;
  j["center_jitter_px"] = c.center_jitter_px;
  j["center_jitter_rel"] = c.center_jitter_rel;
  j["min_scale"] = c.min_scale;
  j["max_scale"] = c.max_scale;
  j["angle_jitter_deg"] = c.angle_jitter_deg;
  j["min_axis_px"] = c.min_axis_px;
  j["partial_rate"] = c.partial_rate;
  j["truncation"] = std::string(TruncationName(c.truncation));
  j["min_visible_fraction"] = c.min_visible_fraction;
  j["max_visible_fraction"] = c.max_visible_fraction;
  j["truncation_shrink"] = c.truncation_shrink;
  j["sigma_kappa"] = c.sigma_kappa;
  j["emit_sigma"] = c.emit_sigma;
  j["min_detections"] = c.min_detections;
  j["init_noise_pos"] = c.init_noise_pos;
  j["init_noise_rot"] = c.init_noise_rot;
  return j;
}

// Missing keys keep their defaults; unknown keys are rejected so typos do not
// go unnoticed. Range checks are left to SynthConfig::Validate.
inline SynthConfig SynthConfigFromJson(const Json& j) {
  if (!j.is_object()) detail::ParseFail("synth config must be an object");
  SynthConfig c;
  for (const auto& [key, v] : j.items()) {
    auto num = [&] { return detail::Number(v, key.c_str()); };
    auto integer = [&] {
      if (!v.is_number_integer()) detail::ParseFail("'" + key + "' must be an integer");
      return v.get<long long>();
    };
    auto boolean = [&] {
      if (!v.is_boolean()) detail::ParseFail("'" + key + "' must be a boolean");
      return v.get<bool>();
    };
    auto vec3 = [&] {
      if (!v.is_array() || v.size() != 3) detail::ParseFail("'" + key + "' must hold 3 numbers");
      return Vector3d(detail::Number(v[0], key.c_str()), detail::Number(v[1], key.c_str()),
                      detail::Number(v[2], key.c_str()));
    };
    if (key == "n_objects") c.n_objects = static_cast<int>(integer());
    else if (key == "n_frames") c.n_frames = static_cast<int>(integer());
    else if (key == "seed") {
      if (!v.is_number_unsigned()) detail::ParseFail("'seed' must be a non-negative integer");
      c.seed = v.get<std::uint64_t>();
    }
    else if (key == "n_labels") c.n_labels = static_cast<int>(integer());
    else if (key == "volume_min") c.volume_min = vec3();
    else if (key == "volume_max") c.volume_max = vec3();
    else if (key == "min_semi_axis") c.min_semi_axis = num();
    else if (key == "max_semi_axis") c.max_semi_axis = num();
    else if (key == "placement_margin") c.placement_margin = num();
    else if (key == "focal") c.focal = num();
    else if (key == "image_size") c.image_size = detail::ImageSizeFrom(v);
    else if (key == "orbit_min_radius") c.orbit_min_radius = num();
    else if (key == "orbit_max_radius") c.orbit_max_radius = num();
    else if (key == "orbit_min_height") c.orbit_min_height = num();
    else if (key == "orbit_max_height") c.orbit_max_height = num();
    else if (key == "look_at_jitter") c.look_at_jitter = num();
    else if (key == "roll_jitter_deg") c.roll_jitter_deg = num();
    else if (key == "noise_enabled") c.noise_enabled = boolean();
    else if (key == "center_jitter_px") c.center_jitter_px = num();
    else if (key == "center_jitter_rel") c.center_jitter_rel = num();
    else if (key == "min_scale") c.min_scale = num();
    else if (key == "max_scale") c.max_scale = num();
    else if (key == "angle_jitter_deg") c.angle_jitter_deg = num();
    else if (key == "min_axis_px") c.min_axis_px = num();
    else if (key == "partial_rate") c.partial_rate = num();
    else if (key == "truncation") {
      if (v == "image_border") c.truncation = TruncationModel::kImageBorder;
      else if (v == "side_cut") c.truncation = TruncationModel::kSideCut;
      else detail::ParseFail("'truncation' must be \"image_border\" or \"side_cut\"");
    }
    else if (key == "min_visible_fraction") c.min_visible_fraction = num();
    else if (key == "max_visible_fraction") c.max_visible_fraction = num();
    else if (key == "truncation_shrink") c.truncation_shrink = num();
    else if (key == "sigma_kappa") c.sigma_kappa = num();
    else if (key == "emit_sigma") c.emit_sigma = boolean();
    else if (key == "min_detections") c.min_detections = static_cast<int>(integer());
    else if (key == "init_noise_pos") c.init_noise_pos = num();
    else if (key == "init_noise_rot") c.init_noise_rot = num();
    else detail::ParseFail("unknown synth config key '" + key + "'");
  }
  return c;
}

// ---- files ----

inline Json ParseJson(const std::string& text, const std::string& where) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kParseError, where + ": " + e.what());
  }
}

inline Json ReadJsonFile(const std::string& path) { return ParseJson(ReadFile(path), path); }

inline void WriteJsonFile(const std::string& path, const Json& j) {
  WriteFileAtomic(path, j.dump(2) + "\n");
}

}  // namespace ellipose
