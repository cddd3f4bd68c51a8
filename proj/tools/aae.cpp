// aae: command-line front end for codebook building, pose estimation,
// evaluation and the rotating-square toy experiment.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "aae/augment.hpp"
#include "aae/codebook.hpp"
#include "aae/icp.hpp"
#include "aae/metrics.hpp"
#include "aae/pipeline.hpp"
#include "aae/render.hpp"
#include "aae/toy/train.hpp"
#include "scene.hpp"

namespace fs = std::filesystem;
using namespace aae;
using namespace aae::cli;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct Common {
  std::uint64_t seed = 1;
  bool json = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  cmd->add_flag("--json", c.json, "Print a machine-readable JSON report");
}

json header(const char* command) { return {{"schema_version", kSchemaVersion}, {"command", command}}; }

void emit(const Common& c, const json& report, const std::string& text) {
  if (c.json) {
    std::cout << report.dump(2) << '\n';
  } else {
    std::cout << text;
  }
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string());
}

// ---------------------------------------------------------------- toy-train

struct ToyTrainArgs {
  std::string config;
  std::optional<int> iterations, batch_size, bootstrap_k;
  std::optional<double> learning_rate;
  std::optional<std::string> input, target, latent;
  bool augment = false;
  std::string out_dir;
};

toy::Activation parse_latent(const std::string& s) {
  if (s == "linear") return toy::Activation::kLinear;
  if (s == "tanh") return toy::Activation::kTanh;
  throw Error(ErrorCode::kConfig, "latent activation must be 'linear' or 'tanh'");
}

int run_toy_train(const Common& c, ToyTrainArgs a, bool seed_given) {
  toy::TrainConfig cfg;
  std::string input = "d", target = "a", latent = "linear";
  bool augment = a.augment;
  if (!a.config.empty()) {
    const json j = read_json(a.config);
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.iterations = j.value("iterations", cfg.iterations);
    cfg.bootstrap_k = j.value("bootstrap_k", cfg.bootstrap_k);
    cfg.seed = j.value("seed", cfg.seed);
    input = j.value("input", input);
    target = j.value("target", target);
    latent = j.value("latent_activation", latent);
    augment = j.value("augment", augment);
  }
  if (a.iterations) cfg.iterations = *a.iterations;
  if (a.batch_size) cfg.batch_size = *a.batch_size;
  if (a.bootstrap_k) cfg.bootstrap_k = *a.bootstrap_k;
  if (a.learning_rate) cfg.learning_rate = *a.learning_rate;
  if (a.input) input = *a.input;
  if (a.target) target = *a.target;
  if (a.latent) latent = *a.latent;
  if (seed_given) cfg.seed = c.seed;
  cfg.architecture.latent_activation = parse_latent(latent);
  cfg.validate();

  const auto din = toy::parse_distribution(input), dtg = toy::parse_distribution(target);
  std::optional<AugmentConfig> aug;
  if (augment) aug = AugmentConfig{};
  const auto res = toy::train(cfg, din, dtg, aug);

  ensure_dir(a.out_dir);
  const fs::path model = fs::path(a.out_dir) / "model.aaet";
  const fs::path curve = fs::path(a.out_dir) / "loss.csv";
  toy::save_model(res.model, model);
  toy::write_loss_csv(res.curve, curve);

  json report = header("toy-train");
  report["config"] = {{"learning_rate", cfg.learning_rate}, {"batch_size", cfg.batch_size},
                      {"iterations", cfg.iterations},       {"bootstrap_k", cfg.bootstrap_k},
                      {"seed", cfg.seed},                   {"input", input},
                      {"target", target},                   {"latent_activation", latent},
                      {"augment", augment}};
  report["model"] = model.string();
  report["loss_csv"] = curve.string();
  std::string text = fmt("trained %s -> %s for %d iterations (seed %llu)\n", input.c_str(),
                         target.c_str(), cfg.iterations, static_cast<unsigned long long>(cfg.seed));
  if (!res.curve.empty()) {
    report["initial_loss"] = res.curve.front().loss;
    report["final_loss"] = res.curve.back().loss;
    text += fmt("loss %.6g -> %.6g\n", res.curve.front().loss, res.curve.back().loss);
  }
  text += "wrote " + model.string() + ", " + curve.string() + "\n";
  emit(c, report, text);
  return kOk;
}

// -------------------------------------------------------------- toy-analyze

struct ToyAnalyzeArgs {
  std::string model;
  int angles = 40;
  std::string distributions = "abc";
  int pairs = 200;
  std::string out;
};

json fit_json(const toy::SineFit& f) {
  if (f.degenerate) return {{"degenerate", true}};
  return {{"degenerate", false}, {"omega", f.omega},     {"amplitude", f.amplitude},
          {"phase", f.phase},    {"offset", f.offset},   {"r_squared", f.r_squared}};
}

int run_toy_analyze(const Common& c, const ToyAnalyzeArgs& a) {
  const auto model = toy::load_model(a.model);
  if (model.latent_dim() != 2) throw Error(ErrorCode::kConfig, "analysis expects a 2-dimensional latent space");
  std::vector<toy::Distribution> dists;
  for (char ch : a.distributions) dists.push_back(toy::parse_distribution(std::string(1, ch)));
  if (dists.empty()) throw Error(ErrorCode::kConfig, "no distributions given");
  Rng rng(c.seed);
  const auto rep = toy::analyze_latent(model, dists, a.angles, rng);
  const double sim = toy::pair_similarity(model, a.pairs, rng);
  if (!a.out.empty()) toy::write_trace_csv(rep, a.out);

  json report = header("toy-analyze");
  json traces = json::array();
  std::string text;
  for (const auto& t : rep.traces) {
    json jt = {{"distribution", std::string(1, toy::distribution_name(t.distribution))},
               {"gap_to_first", toy::trace_gap(rep.traces.front(), t)}};
    json fits = json::array();
    text += fmt("(%c)", toy::distribution_name(t.distribution));
    for (std::size_t d = 0; d < t.fits.size(); ++d) {
      fits.push_back(fit_json(t.fits[d]));
      if (t.fits[d].degenerate) {
        text += fmt("  z%zu: constant", d + 1);
      } else {
        text += fmt("  z%zu: omega %.3f R2 %.3f", d + 1, t.fits[d].omega, t.fits[d].r_squared);
      }
    }
    jt["fits"] = fits;
    if (t.phase_difference) jt["phase_difference"] = *t.phase_difference;
    text += fmt("  gap %.3f\n", toy::trace_gap(rep.traces.front(), t));
    traces.push_back(jt);
  }
  report["traces"] = traces;
  report["pair_similarity"] = sim;
  text += fmt("median pair cosine similarity %.4f\n", sim);
  if (!a.out.empty()) {
    report["trace_csv"] = a.out;
    text += "wrote " + a.out + "\n";
  }
  emit(c, report, text);
  return kOk;
}

// ----------------------------------------------------------- codebook-build

struct CodebookArgs {
  std::string mesh, out;
  int level = 4, inplane = 36, size = 128, crop = 16;
  double distance = 700, fx = 572.4, fy = 573.6, padding = kDefaultCropPadding, depth_scale = 100;
};

struct CodebookMeta {
  Intrinsicsd k_syn;
  double distance = 700;
  int crop = 16;
  double padding = kDefaultCropPadding;
  double depth_scale = 100;
};

fs::path sidecar(const fs::path& codebook) { return fs::path(codebook.string() + ".json"); }

CodebookMeta load_meta(const fs::path& codebook) {
  const json j = read_json(sidecar(codebook));
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion) {
      throw Error(ErrorCode::kUnsupportedVersion, "unsupported codebook sidecar version");
    }
    CodebookMeta m;
    m.k_syn = intrinsics_from_json(j.at("intrinsics"));
    m.distance = j.at("distance").get<double>();
    const auto& e = j.at("encoder");
    m.crop = e.at("crop_size").get<int>();
    m.padding = e.at("padding").get<double>();
    m.depth_scale = e.at("depth_scale").get<double>();
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, sidecar(codebook).string() + ": " + e.what());
  }
}

int run_codebook_build(const Common& c, const CodebookArgs& a) {
  const TriangleMesh mesh = load_mesh(a.mesh);
  const ViewSphere sphere = subdivide_icosahedron(a.level);
  const Intrinsicsd k(a.fx, a.fy, a.size / 2.0, a.size / 2.0, a.size, a.size);
  const DepthCropEncoder enc{a.depth_scale};
  const ViewEncoder encode = crop_then_encode(enc, a.padding, a.crop);
  CodebookBuilder builder(a.crop * a.crop);
  for_each_codebook_view(mesh, sphere, a.inplane, k, a.distance, [&](std::size_t i, const RenderedView& v) {
    if (!v.bbox) throw Error(ErrorCode::kDegenerate, "codebook view " + std::to_string(i) + " is empty");
    builder.add(encode({v.depth, v.rotation, *v.bbox}), v.rotation, *v.bbox);
  });
  const Codebook cb = std::move(builder).finish();
  save_codebook(cb, a.out);

  json meta = {{"schema_version", kSchemaVersion},
               {"mesh", fs::path(a.mesh).filename().string()},
               {"level", a.level},
               {"inplane", a.inplane},
               {"viewpoints", sphere.viewpoints.size()},
               {"entries", cb.size()},
               {"dim", a.crop * a.crop},
               {"distance", a.distance},
               {"intrinsics", to_json(k)},
               {"encoder",
                {{"type", "depth-crop"}, {"crop_size", a.crop}, {"padding", a.padding}, {"depth_scale", a.depth_scale}}}};
  write_json(meta, sidecar(a.out));

  json report = header("codebook-build");
  report["codebook"] = a.out;
  report["sidecar"] = sidecar(a.out).string();
  report["viewpoints"] = sphere.viewpoints.size();
  report["entries"] = cb.size();
  report["dim"] = a.crop * a.crop;
  emit(c, report,
       fmt("%zu viewpoints x %d in-plane = %zu entries (dim %d)\nwrote %s\n", sphere.viewpoints.size(),
           a.inplane, cb.size(), a.crop * a.crop, a.out.c_str()));
  return kOk;
}

// ------------------------------------------------------------------- render

struct RenderArgs {
  std::string mesh, out_dir;
  int count = 5;
  double z_min = 600, z_max = 900, offset = 0.25;
  double fx = 572.4, fy = 573.6, cx = 320, cy = 240;
  int width = 640, height = 480;
  bool no_depth = false;
};

Rotation3d uniform_rotation(Rng& rng) {
  const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
  const double a = std::sqrt(1 - u1), b = std::sqrt(u1);
  const double t1 = 2 * std::numbers::pi * u2, t2 = 2 * std::numbers::pi * u3;
  const Eigen::Quaterniond q(b * std::cos(t2), a * std::sin(t1), a * std::cos(t1), b * std::sin(t2));
  return Rotation3d::Orthonormalized(q.toRotationMatrix());
}

int run_render(const Common& c, const RenderArgs& a) {
  if (a.count < 0 || !(a.z_min > 0 && a.z_min <= a.z_max) || !(a.offset >= 0 && a.offset < 0.5)) {
    throw Error(ErrorCode::kConfig, "need count >= 0, 0 < z-min <= z-max and offset in [0, 0.5)");
  }
  const TriangleMesh mesh = load_mesh(a.mesh);
  const Intrinsicsd k(a.fx, a.fy, a.cx, a.cy, a.width, a.height);
  ensure_dir(a.out_dir);
  Rng rng(c.seed);
  json scenes = json::array();
  std::string text;
  for (int i = 0; i < a.count; ++i) {
    const Rotation3d r = uniform_rotation(rng);
    const double z = rng.uniform(a.z_min, a.z_max);
    const double u = a.cx + rng.uniform(-a.offset, a.offset) * a.width;
    const double v = a.cy + rng.uniform(-a.offset, a.offset) * a.height;
    const Posed pose(r, backproject(k, Vec2d(u, v), z));
    const DepthImage depth = render_depth(mesh, pose, k);
    const auto bbox = silhouette_bbox(depth);
    if (!bbox) throw Error(ErrorCode::kDegenerate, "scene " + std::to_string(i) + " renders no pixels");

    const std::string stem = fmt("scene_%03d", i);
    SceneDescriptor s;
    s.mesh = fs::absolute(a.mesh);
    s.intrinsics = k;
    s.image = fs::path(a.out_dir) / (stem + ".png");
    write_png16(s.image, depth);
    if (!a.no_depth) {
      s.depth = fs::path(a.out_dir) / (stem + ".depth");
      write_depth_raw(*s.depth, depth);
    }
    s.objects.push_back({"obj", pose, bbox});
    const fs::path desc = fs::path(a.out_dir) / (stem + ".scene.json");
    save_scene(s, desc);
    scenes.push_back(desc.string());
    text += "wrote " + desc.string() + "\n";
  }
  json report = header("render");
  report["scenes"] = scenes;
  emit(c, report, text);
  return kOk;
}

// ----------------------------------------------------------------- estimate

struct EstimateArgs {
  std::string scene, codebook, out;
  bool icp = false;
  int k = 1;
  int icp_samples = 2000;
};

json refine(const SceneDescriptor& s, const TriangleMesh& mesh, const Posed& init, const BBox& bbox,
            Rng& rng) {
  const DepthImage depth = read_depth_raw(*s.depth);
  if (depth.rows() != s.intrinsics.height() || depth.cols() != s.intrinsics.width()) {
    throw Error(ErrorCode::kDimension, "scene depth does not match the intrinsics");
  }
  // Only scene points inside the padded detection window take part.
  const BBox w = crop_window(bbox, kDefaultCropPadding);
  DepthImage roi = DepthImage::Zero(depth.rows(), depth.cols());
  const auto c0 = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(w.x)));
  const auto r0 = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(w.y)));
  const auto c1 = std::min<Eigen::Index>(depth.cols(), static_cast<Eigen::Index>(std::ceil(w.x + w.w)));
  const auto r1 = std::min<Eigen::Index>(depth.rows(), static_cast<Eigen::Index>(std::ceil(w.y + w.h)));
  if (c1 > c0 && r1 > r0) roi.block(r0, c0, r1 - r0, c1 - c0) = depth.block(r0, c0, r1 - r0, c1 - c0);
  const PointCloud cloud = estimate_normals(backproject(roi, s.intrinsics));
  const Eigen::Matrix3Xd model = sample_visible_points(mesh, init, s.intrinsics, 2000, rng);
  const Posed z = icp_refine_z(model, cloud, init);
  const IcpResult res = icp_refine(model, cloud, z);
  return {{"pose", to_json(res.pose)},
          {"iterations", res.stats.iterations},
          {"residual", res.stats.final_residual},
          {"correspondences", res.stats.correspondences}};
}

int run_estimate(const Common& c, const EstimateArgs& a) {
  const Codebook cb = load_codebook(a.codebook);
  const CodebookMeta meta = load_meta(a.codebook);
  const DepthCropEncoder enc{meta.depth_scale};
  PipelineConfig pcfg;
  pcfg.padding = meta.padding;
  pcfg.crop_size = meta.crop;
  pcfg.k = a.k;

  Rng rng(c.seed);
  json results = json::array();
  std::string text;
  int status = kOk;
  for (const auto& file : scene_files(a.scene)) {
    const SceneDescriptor s = load_scene(file);
    const ImageF image = read_png16(s.image);
    const TriangleMesh mesh = load_mesh(s.mesh);
    const DistanceContext ctx{meta.distance, meta.k_syn, s.intrinsics};
    for (std::size_t i = 0; i < s.objects.size(); ++i) {
      const auto& obj = s.objects[i];
      std::optional<BBox> bbox = obj.bbox;
      if (!bbox) bbox = silhouette_bbox(render_depth(mesh, obj.gt_pose, s.intrinsics));
      if (!bbox) throw Error(ErrorCode::kDegenerate, "object without a detection box or visible pixels");
      const PoseEstimate est = estimate_pose(image, Detection{*bbox, obj.id, 1.0}, enc, cb, ctx, pcfg);
      json r = {{"scene", file.filename().string()},
                {"object", i},
                {"id", obj.id},
                {"bbox", to_json(*bbox)},
                {"pose", to_json(est.pose)},
                {"similarity", est.similarity}};
      json nn = json::array();
      for (const auto& n : est.neighbors) nn.push_back({{"index", n.index}, {"similarity", n.similarity}});
      r["neighbors"] = nn;
      text += fmt("%s #%zu  t = (%.1f, %.1f, %.1f) mm  similarity %.4f\n", file.filename().c_str(), i,
                  est.pose.translation.x(), est.pose.translation.y(), est.pose.translation.z(),
                  est.similarity);
      if (a.icp) {
        if (!s.depth) {
          r["icp_error"] = "scene has no depth image";
          text += "  icp: scene has no depth image\n";
          status = std::max<int>(status, kData);
        } else {
          try {
            r["refined"] = refine(s, mesh, est.pose, *bbox, rng);
            const auto& t = r["refined"]["pose"]["translation"];
            text += fmt("  icp: t = (%.1f, %.1f, %.1f) mm after %d iterations\n", t[0].get<double>(),
                        t[1].get<double>(), t[2].get<double>(), r["refined"]["iterations"].get<int>());
          } catch (const Error& e) {
            r["icp_error"] = e.what();
            text += std::string("  icp: ") + e.what() + "\n";
            status = std::max<int>(status, is_numerical(e.code()) ? kNumerical : kData);
          }
        }
      }
      results.push_back(r);
    }
  }
  json report = header("estimate");
  report["codebook"] = fs::path(a.codebook).filename().string();
  report["results"] = results;
  if (!a.out.empty()) {
    write_json(report, a.out);
    text += "wrote " + a.out + "\n";
  }
  emit(c, report, text);
  if (status != kOk) std::cerr << "error: ICP refinement failed for at least one detection\n";
  return status;
}

// ----------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string scenes, est, out, pose = "auto";
  VsdParams vsd;
  double k_m = 0.1;
};

int run_evaluate(const Common& c, const EvaluateArgs& a) {
  a.vsd.validate();
  if (a.pose != "auto" && a.pose != "rgb" && a.pose != "refined") {
    throw Error(ErrorCode::kConfig, "--pose must be auto, rgb or refined");
  }
  std::map<std::string, fs::path> by_name;
  for (const auto& f : scene_files(a.scenes)) by_name[f.filename().string()] = f;
  const json est = read_json(a.est);
  if (!est.contains("results")) throw Error(ErrorCode::kParse, a.est + ": no results array");

  std::map<std::string, SceneDescriptor> scenes;
  std::map<std::string, TriangleMesh> meshes;
  std::vector<EvalRecord> records;
  json table = json::array();
  std::string text;
  double add_sum = 0, adi_sum = 0;
  int add_hits = 0, adi_hits = 0;
  for (const auto& r : est["results"]) {
    const std::string name = r.at("scene").get<std::string>();
    if (!by_name.count(name)) throw Error(ErrorCode::kIo, "estimate refers to unknown scene " + name);
    if (!scenes.count(name)) scenes.emplace(name, load_scene(by_name[name]));
    const SceneDescriptor& s = scenes.at(name);
    const std::string mesh_key = s.mesh.string();
    if (!meshes.count(mesh_key)) meshes.emplace(mesh_key, load_mesh(s.mesh));
    const TriangleMesh& mesh = meshes.at(mesh_key);
    const auto idx = r.at("object").get<std::size_t>();
    if (idx >= s.objects.size()) throw Error(ErrorCode::kBounds, name + ": object index out of range");

    const bool use_refined = a.pose == "refined" || (a.pose == "auto" && r.contains("refined"));
    if (a.pose == "refined" && !r.contains("refined")) {
      throw Error(ErrorCode::kParse, name + ": no refined pose in the estimate file");
    }
    const Posed pose = pose_from_json(use_refined ? r["refined"]["pose"] : r.at("pose"));
    const Posed& gt = s.objects[idx].gt_pose;
    const DepthImage scene_depth =
        s.depth ? read_depth_raw(*s.depth) : render_depth(mesh, gt, s.intrinsics);
    const VsdResult v = vsd_error(mesh, pose, gt, scene_depth, s.intrinsics, a.vsd);

    EvalRecord rec;
    rec.object_id = s.objects[idx].id;
    rec.est_pose = pose;
    rec.gt_pose = gt;
    rec.err_vsd = v.error;
    rec.err_add = add_error(mesh, pose, gt);
    rec.err_adi = adi_error(mesh, pose, gt);
    rec.visibility = v.visibility;
    records.push_back(rec);
    const bool kept = rec.visibility > a.vsd.min_visibility;
    if (kept) {
      add_sum += *rec.err_add;
      adi_sum += *rec.err_adi;
      add_hits += add_correct(*rec.err_add, mesh.diameter(), a.k_m);
      adi_hits += add_correct(*rec.err_adi, mesh.diameter(), a.k_m);
    }
    table.push_back({{"scene", name},
                     {"object", idx},
                     {"pose", use_refined ? "refined" : "rgb"},
                     {"err_vsd", v.error},
                     {"visibility", v.visibility},
                     {"err_add", *rec.err_add},
                     {"err_adi", *rec.err_adi},
                     {"excluded", !kept}});
    text += fmt("%-24s #%zu  vsd %.4f  add %8.2f  adi %8.2f  vis %.2f%s\n", name.c_str(), idx, v.error,
                *rec.err_add, *rec.err_adi, v.visibility, kept ? "" : "  (excluded)");
  }
  const auto kept = filter_visible(records, a.vsd.min_visibility);
  const std::size_t excluded = records.size() - kept.size();

  json report = header("evaluate");
  report["records"] = table;
  json summary = {{"records", records.size()}, {"evaluated", kept.size()}, {"excluded_low_visibility", excluded},
                  {"vsd_tau", a.vsd.tau},      {"vsd_delta", a.vsd.delta}, {"vsd_threshold", a.vsd.threshold}};
  if (!kept.empty()) {
    const double n = static_cast<double>(kept.size());
    summary["recall_vsd"] = recall_at(kept, a.vsd.threshold);
    summary["auc_vsd"] = auc_vsd(kept);
    summary["add_mean"] = add_sum / n;
    summary["add_recall"] = add_hits / n;
    summary["adi_mean"] = adi_sum / n;
    summary["adi_recall"] = adi_hits / n;
    text += fmt("recall(vsd < %.2f) %.4f  AUC_vsd %.4f  ADD recall %.4f  ADI recall %.4f\n",
                a.vsd.threshold, summary["recall_vsd"].get<double>(), summary["auc_vsd"].get<double>(),
                add_hits / n, adi_hits / n);
  } else {
    text += "no records above the visibility threshold\n";
  }
  if (excluded > 0) text += fmt("%zu record(s) excluded: visibility <= %.2f\n", excluded, a.vsd.min_visibility);
  report["summary"] = summary;
  if (!a.out.empty()) {
    write_json(report, a.out);
    text += "wrote " + a.out + "\n";
  }
  emit(c, report, text);
  return kOk;
}

// ------------------------------------------------------------------ augment

struct AugmentArgs {
  std::string image, out;
  bool disabled = false;
};

json op_json(const AppliedOp& op) {
  json j = {{"op", op_name(op)}};
  std::visit(
      [&](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, AddOp>) j["delta"] = o.delta;
        if constexpr (std::is_same_v<T, ContrastOp> || std::is_same_v<T, MultiplyOp>) j["factor"] = o.factor;
        if constexpr (std::is_same_v<T, InvertOp>) j["channels"] = o.channels;
        if constexpr (std::is_same_v<T, BlurOp>) j["sigma"] = o.sigma;
        if constexpr (std::is_same_v<T, GeometricOp>) {
          j["scale"] = o.scale;
          j["tx"] = o.tx;
          j["ty"] = o.ty;
        }
        if constexpr (std::is_same_v<T, OcclusionOp>) {
          json rs = json::array();
          for (const auto& r : o.rects) rs.push_back({r.x, r.y, r.w, r.h});
          j["rects"] = rs;
        }
      },
      op);
  return j;
}

int run_augment(const Common& c, const AugmentArgs& a) {
  const Planes img = read_png8(a.image);
  Rng rng(c.seed);
  const AugmentConfig cfg = a.disabled ? AugmentConfig::Disabled() : AugmentConfig{};
  const AugmentResult res = augment(img, cfg, rng);
  write_png8(a.out, res.image);
  json report = header("augment");
  json log = json::array();
  std::string text;
  for (const auto& op : res.log) {
    log.push_back(op_json(op));
    text += std::string(op_name(op)) + "\n";
  }
  report["log"] = log;
  report["output"] = a.out;
  text += "wrote " + a.out + "\n";
  emit(c, report, text);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Augmented autoencoder pose estimation toolkit"};
  app.require_subcommand(1);

  Common common;
  std::map<CLI::App*, std::function<int()>> handlers;

  ToyTrainArgs tt;
  auto* toy_train = app.add_subcommand("toy-train", "Train the rotating-square autoencoder");
  add_common(toy_train, common);
  toy_train->add_option("--config", tt.config, "JSON training configuration")->check(CLI::ExistingFile);
  toy_train->add_option("--iterations", tt.iterations);
  toy_train->add_option("--batch-size", tt.batch_size);
  toy_train->add_option("--bootstrap-k", tt.bootstrap_k);
  toy_train->add_option("--lr", tt.learning_rate);
  toy_train->add_option("--input", tt.input, "Input distribution a|b|c|d (default d)");
  toy_train->add_option("--target", tt.target, "Target distribution a|b|c|d (default a)");
  toy_train->add_option("--latent", tt.latent, "Latent activation linear|tanh (default linear)");
  toy_train->add_flag("--augment", tt.augment, "Apply image augmentation to the inputs");
  toy_train->add_option("--out-dir", tt.out_dir)->required();
  handlers[toy_train] = [&] { return run_toy_train(common, tt, toy_train->count("--seed") > 0); };

  ToyAnalyzeArgs ta;
  auto* toy_analyze = app.add_subcommand("toy-analyze", "Fit sinusoids to latent traces of a toy model");
  add_common(toy_analyze, common);
  toy_analyze->add_option("--model", ta.model)->required()->check(CLI::ExistingFile);
  toy_analyze->add_option("--angles", ta.angles)->capture_default_str();
  toy_analyze->add_option("--distributions", ta.distributions)->capture_default_str();
  toy_analyze->add_option("--pairs", ta.pairs)->capture_default_str();
  toy_analyze->add_option("--out", ta.out, "Trace CSV");
  handlers[toy_analyze] = [&] { return run_toy_analyze(common, ta); };

  CodebookArgs cb;
  auto* cb_build = app.add_subcommand("codebook-build", "Render and encode codebook views of a mesh");
  add_common(cb_build, common);
  cb_build->add_option("--mesh", cb.mesh)->required()->check(CLI::ExistingFile);
  cb_build->add_option("--out", cb.out)->required();
  cb_build->add_option("--level", cb.level)->capture_default_str();
  cb_build->add_option("--inplane", cb.inplane)->capture_default_str();
  cb_build->add_option("--distance", cb.distance, "Render distance, mm")->capture_default_str();
  cb_build->add_option("--size", cb.size, "Render width and height, px")->capture_default_str();
  cb_build->add_option("--fx", cb.fx)->capture_default_str();
  cb_build->add_option("--fy", cb.fy)->capture_default_str();
  cb_build->add_option("--crop", cb.crop, "Encoder crop size, px")->capture_default_str();
  cb_build->add_option("--padding", cb.padding)->capture_default_str();
  cb_build->add_option("--depth-scale", cb.depth_scale)->capture_default_str();
  handlers[cb_build] = [&] { return run_codebook_build(common, cb); };

  RenderArgs ra;
  auto* render = app.add_subcommand("render", "Render synthetic single-object scenes");
  add_common(render, common);
  render->add_option("--mesh", ra.mesh)->required()->check(CLI::ExistingFile);
  render->add_option("--out-dir", ra.out_dir)->required();
  render->add_option("--count", ra.count)->capture_default_str();
  render->add_option("--z-min", ra.z_min)->capture_default_str();
  render->add_option("--z-max", ra.z_max)->capture_default_str();
  render->add_option("--offset", ra.offset, "Max image-plane offset of the object centre, fraction")
      ->capture_default_str();
  render->add_option("--fx", ra.fx)->capture_default_str();
  render->add_option("--fy", ra.fy)->capture_default_str();
  render->add_option("--cx", ra.cx)->capture_default_str();
  render->add_option("--cy", ra.cy)->capture_default_str();
  render->add_option("--width", ra.width)->capture_default_str();
  render->add_option("--height", ra.height)->capture_default_str();
  render->add_flag("--no-depth", ra.no_depth, "Do not write depth for ICP");
  handlers[render] = [&] { return run_render(common, ra); };

  EstimateArgs ea;
  auto* estimate = app.add_subcommand("estimate", "Estimate object poses with a codebook");
  add_common(estimate, common);
  estimate->add_option("--scene", ea.scene, "Scene descriptor or directory of *.scene.json")->required();
  estimate->add_option("--codebook", ea.codebook)->required()->check(CLI::ExistingFile);
  estimate->add_flag("--icp", ea.icp, "Refine with ICP on the scene depth");
  estimate->add_option("--k", ea.k, "Neighbours to report")->capture_default_str();
  estimate->add_option("--out", ea.out, "Write the JSON report here");
  handlers[estimate] = [&] { return run_estimate(common, ea); };

  EvaluateArgs va;
  auto* evaluate = app.add_subcommand("evaluate", "Score an estimate report against ground truth");
  add_common(evaluate, common);
  evaluate->add_option("--scenes", va.scenes)->required();
  evaluate->add_option("--est", va.est)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--pose", va.pose, "auto|rgb|refined")->capture_default_str();
  evaluate->add_option("--tau", va.vsd.tau)->capture_default_str();
  evaluate->add_option("--delta", va.vsd.delta)->capture_default_str();
  evaluate->add_option("--threshold", va.vsd.threshold)->capture_default_str();
  evaluate->add_option("--min-visibility", va.vsd.min_visibility)->capture_default_str();
  evaluate->add_option("--km", va.k_m, "ADD/ADI threshold as a fraction of the diameter")->capture_default_str();
  evaluate->add_option("--out", va.out, "Write the JSON report here");
  handlers[evaluate] = [&] { return run_evaluate(common, va); };

  AugmentArgs aa;
  auto* aug = app.add_subcommand("augment", "Apply random augmentation to an 8-bit PNG");
  add_common(aug, common);
  aug->add_option("--image", aa.image)->required()->check(CLI::ExistingFile);
  aug->add_option("--out", aa.out)->required();
  aug->add_flag("--disabled", aa.disabled, "Identity configuration");
  handlers[aug] = [&] { return run_augment(common, aa); };

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    for (auto* sub : app.get_subcommands()) return handlers.at(sub)();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (is_numerical(e.code())) return kNumerical;
    return e.code() == ErrorCode::kConfig ? kUsage : kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
