// sagseg command-line front end.
//
// JSON results go to stdout, human-readable summaries to stderr.
// Exit codes: 0 ok, 1 usage, 2 unreadable or invalid input data,
// 3 contract or configuration violation.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sagseg/sagseg.hpp"

namespace fs = std::filesystem;
using namespace sagseg;
using nlohmann::json;

namespace {

struct ConfigArgs {
  std::string file;
  std::vector<std::string> overrides;
};

void add_config_options(CLI::App* cmd, ConfigArgs& c) {
  cmd->add_option("--config", c.file, "JSON config file");
  cmd->add_option("--set", c.overrides, "override section.key=value (repeatable)");
}

PipelineConfig build_config(const ConfigArgs& c) {
  PipelineConfig cfg;
  if (!c.file.empty()) apply_config_file(cfg, c.file);
  for (const auto& o : c.overrides) apply_override(cfg, o);
  validate(cfg);
  return cfg;
}

std::string timestamp() {
  const char* e = std::getenv("SOURCE_DATE_EPOCH");
  return e && *e ? std::string(e) : std::string("none");
}

// Finds mask_{id}.pgm or mask_{id}.png for each camera.
std::vector<InstanceMask2D> load_view_masks(const ViewSet& views, const std::string& dir) {
  std::vector<InstanceMask2D> masks;
  masks.reserve(views.size());
  for (const Camera& cam : views.cameras) {
    const fs::path pgm = fs::path(dir) / mask_filename(cam, ".pgm");
    const fs::path png = fs::path(dir) / mask_filename(cam, ".png");
    if (fs::exists(pgm)) {
      masks.push_back(load_mask(pgm.string()));
    } else if (fs::exists(png)) {
      masks.push_back(load_mask(png.string()));
    } else {
      throw IoError("missing mask for camera " + cam.id + ": " + pgm.string());
    }
  }
  return masks;
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create directory '" + p.string() + "': " + ec.message());
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write '" + p.string() + "'");
  out << text;
}

std::vector<std::string> mask_files(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: '" + dir + "'");
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".pgm" || ext == ".png")) {
      names.push_back(e.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

// Scene, cameras and masks either from disk or from a synthetic spec.
struct Inputs {
  std::string name;
  GaussianScene scene;
  ViewSet views;
  std::vector<InstanceMask2D> masks;
  std::uint64_t seed = 0;
};

struct InputArgs {
  std::string scene, cameras, masks, spec;
};

void add_input_options(CLI::App* cmd, InputArgs& a) {
  cmd->add_option("--scene", a.scene, "scene PLY");
  cmd->add_option("--cameras", a.cameras, "cameras JSON");
  cmd->add_option("--masks", a.masks, "mask directory");
  cmd->add_option("--spec", a.spec, "synthetic spec JSON (used when --scene is absent)");
}

Inputs load_inputs(const InputArgs& a, const PipelineConfig& cfg) {
  Inputs in;
  if (!a.scene.empty()) {
    if (a.cameras.empty() || a.masks.empty()) {
      throw ConfigError("--scene requires --cameras and --masks");
    }
    in.name = fs::path(a.scene).stem().string();
    in.scene = load_scene(a.scene);
    in.views = load_cameras(a.cameras);
    in.masks = load_view_masks(in.views, a.masks);
    return in;
  }
  const SynthSpec spec = a.spec.empty() ? SynthSpec{} : load_synth_spec(a.spec);
  Fixture f = make_fixture(spec, cfg.raster);
  in.name = a.spec.empty() ? "synthetic" : fs::path(a.spec).stem().string();
  in.scene = std::move(f.synth.scene);
  in.views = std::move(f.views);
  in.masks = std::move(f.masks);
  in.seed = spec.seed;
  return in;
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(tok, &used);
      if (used != tok.size() || v < 1) throw std::invalid_argument(tok);
      out.push_back(std::size_t(v));
    } catch (const std::exception&) {
      throw ConfigError("--sizes: '" + tok + "' is not a positive integer");
    }
  }
  if (out.empty()) throw ConfigError("--sizes must list at least one subset size");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Instance segmentation of Gaussian scenes from multi-view 2D masks"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: SAGSEG_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);

  // label
  auto* label = app.add_subcommand("label", "vote 2D masks onto Gaussians and save labels");
  std::string l_scene, l_cams, l_masks, l_out, l_mode, l_sidecar;
  long long l_min_votes = -1;
  ConfigArgs l_cfg;
  label->add_option("scene", l_scene, "input scene PLY")->required();
  label->add_option("cameras", l_cams, "cameras JSON")->required();
  label->add_option("masks", l_masks, "directory with mask_{id}.pgm|png")->required();
  label->add_option("out", l_out, "output labeled PLY")->required();
  label->add_option("--mode", l_mode, "render | centroid");
  label->add_option("--min-votes", l_min_votes, "votes required to keep a label");
  label->add_option("--sidecar", l_sidecar, "also write labels one per line");
  add_config_options(label, l_cfg);

  // render-mask
  auto* render = app.add_subcommand("render-mask", "render instance masks from a labeled scene");
  std::string r_scene, r_cams, r_out;
  bool r_refine = false;
  ConfigArgs r_cfg;
  render->add_option("scene", r_scene, "labeled scene PLY")->required();
  render->add_option("cameras", r_cams, "cameras JSON")->required();
  render->add_option("out", r_out, "output directory")->required();
  render->add_flag("--refine", r_refine, "also write refined masks");
  add_config_options(render, r_cfg);

  // refine
  auto* refine = app.add_subcommand("refine", "refine a single instance mask");
  std::string f_in, f_out;
  ConfigArgs f_cfg;
  refine->add_option("in", f_in, "input mask")->required();
  refine->add_option("out", f_out, "output mask")->required();
  add_config_options(refine, f_cfg);

  // eval
  auto* eval = app.add_subcommand("eval", "compare predicted masks to ground truth");
  std::string e_pred, e_gt;
  bool e_hungarian = false, e_csv = false;
  eval->add_option("pred", e_pred, "predicted mask directory")->required();
  eval->add_option("gt", e_gt, "ground-truth mask directory")->required();
  eval->add_flag("--hungarian", e_hungarian, "match IDs by maximum total IoU");
  eval->add_flag("--csv", e_csv, "CSV instead of JSON");

  // bench
  auto* bench = app.add_subcommand("bench", "time aggregation, rendering and refinement");
  InputArgs b_in;
  int b_reps = 5;
  ConfigArgs b_cfg;
  add_input_options(bench, b_in);
  bench->add_option("--reps", b_reps, "repetitions (>= 3)");
  add_config_options(bench, b_cfg);

  // robust
  auto* robust = app.add_subcommand("robust", "label agreement and time versus view count");
  InputArgs o_in;
  std::string o_sizes = "24,12,6,3,1";
  std::uint64_t o_seed = 2024;
  int o_reps = 5;
  bool o_csv = false;
  ConfigArgs o_cfg;
  add_input_options(robust, o_in);
  robust->add_option("--sizes", o_sizes, "comma-separated subset sizes");
  robust->add_option("--seed", o_seed, "subset sampling seed");
  robust->add_option("--reps", o_reps, "timing repetitions per size");
  robust->add_flag("--csv", o_csv, "CSV instead of JSON");
  add_config_options(robust, o_cfg);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic scene with ground truth");
  std::string s_spec, s_out;
  synth->add_option("--spec", s_spec, "spec JSON (defaults when omitted)");
  synth->add_option("--out", s_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  if (threads > 0) set_default_threads(threads);

  try {
    if (*label) {
      PipelineConfig cfg = build_config(l_cfg);
      if (!l_mode.empty()) cfg.aggregation.mode = parse_mode(l_mode);
      if (l_min_votes >= 0) cfg.aggregation.min_votes = std::uint64_t(l_min_votes);
      validate(cfg);
      const GaussianScene scene = load_scene(l_scene);
      const ViewSet views = load_cameras(l_cams);
      const auto masks = load_view_masks(views, l_masks);
      const auto t0 = std::chrono::steady_clock::now();
      AggregationResult r = aggregate(scene, views, masks, cfg.aggregation, cfg.raster);
      const double ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      r.labels.provenance.timestamp = timestamp();
      save_labels(r.labels, scene, l_out);
      if (!l_sidecar.empty()) save_label_sidecar(r.labels, l_sidecar);
      std::size_t labeled = 0;
      for (InstanceId id : r.labels.labels) labeled += id != 0;
      std::cout << json{{"N", scene.size()},
                        {"K", r.labels.num_instances},
                        {"labeled", labeled},
                        {"votes", r.histogram.total_votes()},
                        {"views", views.size()},
                        {"mode", r.labels.provenance.mode},
                        {"ms", ms}}
                       .dump()
                << "\n";
      std::cerr << "labeled " << labeled << "/" << scene.size() << " Gaussians into "
                << r.labels.num_instances << " instances from " << views.size() << " views\n";
    } else if (*render) {
      const PipelineConfig cfg = build_config(r_cfg);
      const LabeledScene ls = load_labeled_scene(r_scene);
      if (!ls.labels) throw ContractError(r_scene + ": scene has no instance_id property");
      const ViewSet views = load_cameras(r_cams);
      const fs::path coarse_dir = fs::path(r_out) / "coarse";
      const fs::path refined_dir = fs::path(r_out) / "refined";
      ensure_dir(coarse_dir);
      if (r_refine) ensure_dir(refined_dir);
      json frames = json::array();
      std::vector<double> totals;
      for (const Camera& cam : views.cameras) {
        InstanceMask2D coarse, refined;
        RenderOutput out;
        const double render_ms = time_ms([&] {
          out = rasterize(ls.scene, cam, cfg.raster);
          coarse = render_instance_mask(ls.scene, *ls.labels, cam, cfg.raster);
        });
        double refine_ms = 0.0;
        if (r_refine) {
          refine_ms = time_ms([&] {
            refined = refine_mask(coarse, std::span<const float>(out.alpha), cfg.refine);
          });
          save_mask(refined, (refined_dir / mask_filename(cam)).string());
        }
        save_mask(coarse, (coarse_dir / mask_filename(cam)).string());
        totals.push_back(render_ms + refine_ms);
        frames.push_back({{"camera", cam.id}, {"render_ms", render_ms}, {"refine_ms", refine_ms}});
      }
      const PhaseStats s = summarize(totals);
      std::cout << json{{"frames", frames}, {"frame_ms", to_json(s)}}.dump() << "\n";
      std::cerr << "rendered " << views.size() << " views, median " << s.median
                << " ms per frame\n";
    } else if (*refine) {
      const PipelineConfig cfg = build_config(f_cfg);
      const InstanceMask2D in = load_mask(f_in);
      InstanceMask2D out;
      const double ms = time_ms([&] { out = refine_mask(in, std::nullopt, cfg.refine); });
      save_mask(out, f_out);
      std::cout << json{{"ms", ms}, {"ids_in", in.instance_ids().size()},
                        {"ids_out", out.instance_ids().size()}}
                       .dump()
                << "\n";
    } else if (*eval) {
      const auto names = mask_files(e_gt);
      if (names.empty()) throw IoError("no masks in '" + e_gt + "'");
      const MatchMode match = e_hungarian ? MatchMode::kHungarian : MatchMode::kIdentity;
      json rows = json::array();
      std::ostringstream csv;
      csv << "mask,miou,macc,empty\n";
      double miou = 0.0, macc = 0.0;
      std::size_t nonempty = 0;
      for (const auto& name : names) {
        const fs::path pred = fs::path(e_pred) / name;
        if (!fs::exists(pred)) throw IoError("missing prediction: " + pred.string());
        const SegMetrics m =
            compute_metrics(load_mask(pred.string()), load_mask((fs::path(e_gt) / name).string()),
                            match);
        macc += m.macc;
        if (!m.empty) {
          miou += m.miou;
          ++nonempty;
        }
        json row = to_json(m);
        row["mask"] = name;
        rows.push_back(row);
        csv << name << "," << m.miou << "," << m.macc << "," << (m.empty ? 1 : 0) << "\n";
      }
      macc /= double(names.size());
      miou = nonempty ? miou / double(nonempty) : 1.0;
      if (e_csv) {
        std::cout << csv.str();
      } else {
        std::cout << json{{"miou", miou}, {"macc", macc}, {"masks", names.size()},
                          {"empty", nonempty == 0}, {"rows", rows}}
                         .dump()
                  << "\n";
      }
      std::cerr << "mIoU " << miou << "  mAcc " << macc << " over " << names.size()
                << " masks\n";
    } else if (*bench) {
      const PipelineConfig cfg = build_config(b_cfg);
      const Inputs in = load_inputs(b_in, cfg);
      const BenchReport b = bench_pipeline(in.scene, in.views, in.masks, cfg, b_reps);
      std::cout << to_json(b, in.seed, in.name).dump() << "\n";
      std::cerr << "aggregation " << b.aggregation.median << " ms, frame " << b.frame.median
                << " ms (median of " << b.reps << ")\n";
    } else if (*robust) {
      const PipelineConfig cfg = build_config(o_cfg);
      const auto sizes = parse_sizes(o_sizes);
      const Inputs in = load_inputs(o_in, cfg);
      const RobustnessReport r =
          robustness_experiment(in.scene, in.views, in.masks, sizes, o_seed, cfg, o_reps);
      if (o_csv) {
        std::cout << to_csv(r);
      } else {
        std::cout << to_json(r, in.name).dump() << "\n";
      }
      for (const auto& row : r.rows) {
        std::cerr << row.subset_size << " views: agreement " << row.agreement << ", "
                  << row.ms.median << " ms\n";
      }
    } else if (*synth) {
      const SynthSpec spec = s_spec.empty() ? SynthSpec{} : load_synth_spec(s_spec);
      const Fixture f = make_fixture(spec);
      const fs::path out(s_out);
      ensure_dir(out / "masks");
      save_scene(f.synth.scene, (out / "scene.ply").string());
      LabelAssignment gt = f.synth.ground_truth;
      gt.provenance.mode = "synthetic";
      gt.provenance.views = 0;
      save_labels(gt, f.synth.scene, (out / "gt.ply").string());
      save_cameras(f.views, (out / "cameras.json").string());
      for (std::size_t t = 0; t < f.views.size(); ++t) {
        save_mask(f.masks[t], (out / "masks" / mask_filename(f.views.cameras[t])).string());
      }
      write_text(out / "spec.json", json(spec).dump(2) + "\n");
      std::cout << json{{"N", f.synth.scene.size()}, {"K", spec.num_instances},
                        {"views", f.views.size()}, {"seed", spec.seed}}
                       .dump()
                << "\n";
      std::cerr << "wrote " << f.synth.scene.size() << " Gaussians and " << f.views.size()
                << " views to " << out.string() << "\n";
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
