// Copyright 2026 The HiCC Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// hicc: honeycomb defect toolkit command line.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.

#include <algorithm>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <pthread.h>
#include <thread>

#include "CLI11.hpp"
#include "hicc/clsmetrics.hpp"
#include "hicc/cocostore.hpp"
#include "hicc/detmetrics.hpp"
#include "hicc/error.hpp"
#include "hicc/kernels.hpp"
#include "hicc/patchgen.hpp"
#include "hicc/review_server.hpp"
#include "hicc/reviewsvc.hpp"
#include "hicc/tileinfer.hpp"

namespace fs = std::filesystem;
using namespace hicc;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

PatchStats parse_target(const std::vector<std::size_t>& v) {
  if (v.size() != 6)
    throw ValidationError("--target needs six counts: train_true,train_false,val_true,val_false,test_true,test_false");
  PatchStats t;
  t.train = {v[0], v[1]};
  t.val = {v[2], v[3]};
  t.test = {v[4], v[5]};
  return t;
}

std::vector<fs::path> expand_camt(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in))
        if (e.path().extension() == ".camt") found.push_back(e.path());
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.emplace_back(in);
    }
  }
  if (out.empty()) throw ValidationError("no .camt inputs");
  return out;
}

// ---- patchgen -------------------------------------------------------------

struct PatchgenArgs {
  std::string coco, train, val, test, images, out, origin = "hicis", category;
  int patch = 224, stride = 112;
  double area_thresh = 0.01;
  bool edge_anchored = false, no_patches = false;
  std::vector<double> fractions{0.6, 0.2, 0.2};
  std::uint64_t split_seed = 0;
  std::vector<double> sweep;
  std::vector<std::size_t> target;
};

void add_patchgen(CLI::App& app, PatchgenArgs& a, std::function<int()>& run) {
  auto* sc = app.add_subcommand("patchgen", "Slide windows over COCO images and label patches");
  auto* coco = sc->add_option("--coco", a.coco, "COCO ground truth (split with --fractions/--split-seed)")
                   ->check(CLI::ExistingFile);
  auto* tr = sc->add_option("--train", a.train, "Pre-split training COCO file")->check(CLI::ExistingFile);
  auto* va = sc->add_option("--val", a.val, "Pre-split validation COCO file")->check(CLI::ExistingFile);
  auto* te = sc->add_option("--test", a.test, "Pre-split test COCO file")->check(CLI::ExistingFile);
  coco->excludes(tr)->excludes(va)->excludes(te);
  sc->add_option("--images", a.images, "Directory holding the source images")->check(CLI::ExistingDirectory);
  sc->add_option("--out", a.out, "Output directory")->required();
  sc->add_option("--patch", a.patch, "Patch size p")->capture_default_str();
  sc->add_option("--stride", a.stride, "Stride s")->capture_default_str();
  sc->add_option("--area-thresh", a.area_thresh, "Positive when mask area >= thresh * p^2")->capture_default_str();
  sc->add_option("--origin", a.origin, "Origin tag for dataset names")->capture_default_str();
  sc->add_option("--category", a.category, "Only count masks of this category name");
  sc->add_flag("--edge-anchored", a.edge_anchored, "Add windows flush with the right/bottom edges");
  sc->add_flag("--no-patches", a.no_patches, "Write the manifest only");
  sc->add_option("--fractions", a.fractions, "train,val,test fractions for --coco")->delimiter(',')->expected(3);
  sc->add_option("--split-seed", a.split_seed, "Seed for the image-level split")->capture_default_str();
  sc->add_option("--sweep", a.sweep, "Area thresholds to sweep instead of generating, e.g. 0.0025,0.005,0.01")
      ->delimiter(',');
  sc->add_option("--target", a.target, "Counts to match in the sweep (six, train/val/test true,false)")
      ->delimiter(',');
  sc->callback([&a] {
    if (a.coco.empty() && a.train.empty() && a.val.empty() && a.test.empty())
      throw CLI::RequiredError("--coco (or --train/--val/--test)");
    if (a.images.empty() && a.sweep.empty()) throw CLI::RequiredError("--images");
  });
  run = [&a]() -> int {
    PatchConfig cfg;
    cfg.patch_size = a.patch;
    cfg.stride = a.stride;
    cfg.area_threshold = a.area_thresh;
    cfg.edge_anchored = a.edge_anchored;
    cfg.origin_tag = a.origin;
    cfg.category = a.category;
    cfg.validate();

    std::vector<SplitInput> inputs;
    if (!a.coco.empty()) {
      const CocoDataset ds = load_dataset(a.coco);
      validate(ds);
      SplitSpec spec{a.fractions.at(0), a.fractions.at(1), a.fractions.at(2), a.split_seed};
      DatasetSplit parts = split_dataset(ds, spec);
      inputs.push_back({Split::train, std::move(parts.train)});
      inputs.push_back({Split::val, std::move(parts.val)});
      inputs.push_back({Split::test, std::move(parts.test)});
    } else {
      for (auto [split, path] : {std::pair{Split::train, a.train}, {Split::val, a.val}, {Split::test, a.test}}) {
        if (path.empty()) continue;
        CocoDataset ds = load_dataset(path);
        validate(ds);
        inputs.push_back({split, std::move(ds)});
      }
    }
    if (inputs.empty()) throw ValidationError("patchgen needs --coco or at least one of --train/--val/--test");

    ojson config = cfg.to_json();
    config["coco"] = a.coco;
    config["train"] = a.train;
    config["val"] = a.val;
    config["test"] = a.test;
    config["fractions"] = a.fractions;

    if (!a.sweep.empty()) {
      std::optional<PatchStats> target;
      if (!a.target.empty()) target = parse_target(a.target);
      const SweepReport rep = threshold_sweep(inputs, cfg, a.sweep, target);
      ojson j = sweep_to_json(rep, cfg);
      j["header"] = run_header("patchgen --sweep", config, a.split_seed);
      write_text(fs::path(a.out) / "sweep.json", j.dump(2) + "\n");
      std::printf("%-10s %9s %9s %9s %9s %9s %9s %9s\n", "theta", "train_t", "train_f", "val_t", "val_f", "test_t",
                  "test_f", "L1");
      for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        const auto& r = rep.rows[i];
        std::printf("%-10g %9zu %9zu %9zu %9zu %9zu %9zu %9s%s\n", r.area_threshold, r.stats.train.positive,
                    r.stats.train.negative, r.stats.val.positive, r.stats.val.negative, r.stats.test.positive,
                    r.stats.test.negative, r.distance ? std::to_string(*r.distance).c_str() : "-",
                    rep.best && *rep.best == i ? "  <- closest" : "");
      }
      return 0;
    }

    if (a.images.empty()) throw ValidationError("patchgen needs --images unless --sweep is given");
    GenerateOptions opts;
    opts.image_dir = a.images;
    opts.out_dir = a.out;
    opts.write_patches = !a.no_patches;
    opts.seed = a.split_seed;
    fs::create_directories(opts.out_dir);
    PatchManifest m = generate(inputs, cfg, opts);
    write_manifest(opts.out_dir / "manifest.jsonl", m);
    const std::vector<std::pair<std::string, PatchManifest>> rows{{cfg.origin_tag, m}};
    const std::string table = format_stats_table(rows);
    write_text(opts.out_dir / "stats.txt", table);
    std::cout << table;
    for (const auto& s : m.skipped)
      std::fprintf(stderr, "skipped %s (%s): %s\n", s.file_name.c_str(), std::string(split_name(s.split)).c_str(),
                   s.reason.c_str());
    return 0;
  };
}

// ---- split / merge --------------------------------------------------------

struct SplitArgs {
  std::string coco, out;
  std::vector<double> fractions{0.6, 0.2, 0.2};
  std::uint64_t seed = 0;
};

void add_split(CLI::App& app, SplitArgs& a, std::function<int()>& run) {
  auto* sc = app.add_subcommand("split", "Seeded image-level train/val/test split of a COCO file");
  sc->add_option("--coco", a.coco)->required()->check(CLI::ExistingFile);
  sc->add_option("--out", a.out, "Directory for train.json, val.json, test.json")->required();
  sc->add_option("--fractions", a.fractions)->delimiter(',')->expected(3);
  sc->add_option("--seed", a.seed)->capture_default_str();
  run = [&a]() -> int {
    const CocoDataset ds = load_dataset(a.coco);
    validate(ds);
    const DatasetSplit parts = split_dataset(ds, SplitSpec{a.fractions.at(0), a.fractions.at(1), a.fractions.at(2), a.seed});
    fs::create_directories(a.out);
    save_dataset(fs::path(a.out) / "train.json", parts.train);
    save_dataset(fs::path(a.out) / "val.json", parts.val);
    save_dataset(fs::path(a.out) / "test.json", parts.test);
    std::printf("train %zu  val %zu  test %zu images (seed %llu)\n", parts.train.images.size(),
                parts.val.images.size(), parts.test.images.size(), static_cast<unsigned long long>(a.seed));
    return 0;
  };
}

struct MergeArgs {
  std::string a, b, out, origin_a = "a", origin_b = "b";
};

void add_merge(CLI::App& app, MergeArgs& a, std::function<int()>& run) {
  auto* sc = app.add_subcommand("merge", "Merge two COCO files, recording each image's origin");
  sc->add_option("--a", a.a)->required()->check(CLI::ExistingFile);
  sc->add_option("--b", a.b)->required()->check(CLI::ExistingFile);
  sc->add_option("--origin-a", a.origin_a)->capture_default_str();
  sc->add_option("--origin-b", a.origin_b)->capture_default_str();
  sc->add_option("--out", a.out)->required();
  run = [&a]() -> int {
    const CocoDataset da = load_dataset(a.a), db = load_dataset(a.b);
    validate(da);
    validate(db);
    const CocoDataset merged = merge_datasets(da, db, a.origin_a, a.origin_b);
    save_dataset(a.out, merged);
    std::printf("%zu images, %zu annotations, %zu categories\n", merged.images.size(), merged.annotations.size(),
                merged.categories.size());
    return 0;
  };
}

// ---- det-eval -------------------------------------------------------------

struct DetEvalArgs {
  std::string gt, results, out, kind = "bbox";
  double iou = 0.5;
  std::vector<double> conf{0.3, 0.5, 0.7};
};

void add_det_eval(CLI::App& app, DetEvalArgs& a, std::function<int()>& run) {
  auto* sc = app.add_subcommand("det-eval", "Evaluate detections: AP, AR, PR curves, threshold table");
  sc->add_option("--gt", a.gt, "COCO ground truth")->required()->check(CLI::ExistingFile);
  sc->add_option("--results", a.results, "COCO results array")->required()->check(CLI::ExistingFile);
  sc->add_option("--kind", a.kind, "bbox or mask")->capture_default_str();
  sc->add_option("--iou", a.iou, "IoU threshold of the confidence table")->capture_default_str();
  sc->add_option("--conf", a.conf, "Confidence thresholds")->delimiter(',');
  sc->add_option("--out", a.out, "Output directory")->required();
  run = [&a]() -> int {
    const IouKind kind = parse_iou_kind(a.kind);
    if (!(a.iou > 0.0 && a.iou <= 1.0)) throw ValidationError("--iou must lie in (0, 1]");
    const CocoDataset gt = load_dataset(a.gt);
    validate(gt);
    const DetectionSet dets = load_results(a.results, gt);
    const EvalScene scene = make_scene(gt, dets, kind);
    EvalConfig cfg;
    cfg.taus = a.conf;
    cfg.table_iou = a.iou;
    const EvalReport rep = evaluate(scene, kind, cfg);

    ojson config{{"gt", a.gt}, {"results", a.results}, {"kind", a.kind}, {"iou", a.iou}, {"conf", a.conf}};
    const ojson header = run_header("det-eval", config);
    const fs::path out(a.out);
    fs::create_directories(out);
    write_text(out / "det_report.json", report_json(rep, header).dump(2) + "\n");
    write_text(out / "thresholds.csv", thresholds_csv(rep, header));
    write_text(out / "curves.svg", curves_svg(rep, header, "Precision-recall (" + a.kind + ")"));

    std::printf("%s  AP50 %.4f  AP %.4f  AR %.4f  (gt %zu, det %zu)%s%s\n", a.kind.c_str(), rep.ap50, rep.ap_range,
                rep.ar_range, rep.gt_count, rep.det_count, rep.undefined ? "  [no ground truth]" : "",
                rep.no_detections ? "  [no detections]" : "");
    std::printf("IoU=%.2f\n%6s %10s %10s %10s %8s\n", a.iou, "tau", "precision", "recall", "f1", "support");
    for (const auto& p : rep.thresholds)
      std::printf("%6.2f %10.4f %10.4f %10.4f %8zu\n", p.tau, p.precision, p.recall, p.f1, p.support);
    return 0;
  };
}

// ---- cls-eval -------------------------------------------------------------

struct ClsEvalArgs {
  std::string manifest, out;
  std::vector<std::string> scores;
  double tau = 0.5;
  bool pr_area = false;
};

void add_cls_eval(CLI::App& app, ClsEvalArgs& a, std::function<int()>& run) {
  auto* sc = app.add_subcommand("cls-eval", "Evaluate patch scores against manifest labels");
  sc->add_option("--manifest", a.manifest)->required()->check(CLI::ExistingFile);
  sc->add_option("--scores", a.scores, "Score JSONL, optionally NAME=PATH; repeatable")->required();
  sc->add_option("--tau", a.tau, "Decision threshold")->capture_default_str();
  sc->add_flag("--pr-area", a.pr_area, "Report AP as area under the PR curve instead of the threshold average");
  sc->add_option("--out", a.out, "Output directory")->required();
  run = [&a]() -> int {
    const PatchManifest m = read_manifest(a.manifest);
    std::vector<ClsReport> rows;
    ojson inputs = ojson::array();
    for (const auto& spec : a.scores) {
      std::string name, path = spec;
      if (auto eq = spec.find('='); eq != std::string::npos) {
        name = spec.substr(0, eq);
        path = spec.substr(eq + 1);
      } else {
        name = fs::path(spec).stem().string();
      }
      if (!fs::is_regular_file(path)) throw ValidationError("--scores: no such file " + path);
      const auto scores = read_scores(path);
      const auto samples = join_scores(m, scores);
      if (samples.empty()) throw ValidationError(path + ": no scored samples");
      rows.push_back(cls_report(samples, name, a.tau, a.pr_area));
      inputs.push_back({{"name", name}, {"path", path}});
    }
    ojson config{{"manifest", a.manifest}, {"scores", inputs}, {"tau", a.tau}, {"pr_area", a.pr_area}};
    const ojson header = run_header("cls-eval", config, m.seed);
    const fs::path out(a.out);
    fs::create_directories(out);
    write_text(out / "cls_report.json", cls_reports_json(rows, header).dump(2) + "\n");
    const std::string csv = cls_reports_csv(rows, header);
    write_text(out / "cls_report.csv", csv);
    std::cout << csv.substr(csv.find('\n') + 1);
    return 0;
  };
}

// ---- tile / cam -----------------------------------------------------------

struct TileArgs {
  std::vector<std::string> images;
  std::string scorer, out;
  int patch = 224, stride = 224;
  bool edge_anchored = false;
  double tau = 0.5;
};

void add_tile(CLI::App& app, TileArgs& a, std::function<int()>& run) {
  auto* sc = app.add_subcommand("tile", "Score images patch-wise and render magenta-border overlays");
  sc->add_option("--image", a.images, "Image to score; repeatable")->required()->check(CLI::ExistingFile);
  sc->add_option("--scorer", a.scorer, "const:<v>, file:<recording.jsonl> or cmd:<command>")->required();
  sc->add_option("--patch", a.patch)->capture_default_str();
  sc->add_option("--stride", a.stride)->capture_default_str();
  sc->add_flag("--edge-anchored", a.edge_anchored);
  sc->add_option("--tau", a.tau, "Border windows with score > tau")->capture_default_str();
  sc->add_option("--out", a.out, "Output directory")->required();
  run = [&a]() -> int {
    PatchConfig cfg;
    cfg.patch_size = a.patch;
    cfg.stride = a.stride;
    cfg.edge_anchored = a.edge_anchored;
    cfg.validate();
    if (!(a.tau >= 0.0 && a.tau <= 1.0)) throw ValidationError("--tau must lie in [0, 1]");
    auto scorer = make_scorer(a.scorer);

    ojson config = cfg.to_json();
    config["scorer"] = scorer->describe();
    config["tau"] = a.tau;
    config["images"] = a.images;
    const ojson header = run_header("tile", config);
    const fs::path out(a.out);
    fs::create_directories(out);

    std::string recording = ojson{{"type", "header"}, {"header", header}}.dump() + "\n";
    for (const auto& path : a.images) {
      const Image img = read_image(path);
      const PatchScoreGrid grid = score_image(path, img.width, img.height, *scorer, cfg);
      recording += score_recording_jsonl(grid);
      const fs::path dest = out / (fs::path(path).stem().string() + "_tiles.png");
      write_png(dest, render_overlay(img, grid, a.tau), {{"hicc", header.dump()}});
      std::size_t hot = 0;
      for (const auto& w : grid.windows) hot += w.score > a.tau;
      std::printf("%s: %zu windows, %zu above %.2f -> %s\n", path.c_str(), grid.windows.size(), hot, a.tau,
                  dest.string().c_str());
    }
    write_text(out / "scores.jsonl", recording);
    return 0;
  };
}

struct CamArgs {
  std::string image, out;
  std::vector<std::string> camt;
};

void add_cam(CLI::App& app, CamArgs& a, std::function<int()>& run) {
  auto* sc = app.add_subcommand("cam", "Grad-CAM composite from exported .camt tensors");
  sc->add_option("--image", a.image)->required()->check(CLI::ExistingFile);
  sc->add_option("--camt", a.camt, ".camt file or directory of them; repeatable")->required()->check(CLI::ExistingPath);
  sc->add_option("--out", a.out, "Output PNG")->required();
  run = [&a]() -> int {
    const Image img = read_image(a.image);
    std::vector<WindowHeatmap> maps;
    std::vector<std::string> sources;
    for (const auto& p : expand_camt(a.camt)) {
      const CamTensors t = read_camt(p);
      maps.push_back({t.window, gradcam(t)});
      sources.push_back(p.string());
    }
    const CamComposite c = composite_cams(img, maps);
    const ojson header = run_header("cam", ojson{{"image", a.image}, {"camt", sources}});
    write_png(a.out, c.overlay, {{"hicc", header.dump()}});
    std::printf("%zu windows -> %s\n", maps.size(), a.out.c_str());
    return 0;
  };
}

// ---- review ---------------------------------------------------------------

struct ReviewArgs {
  std::string store = "review-store", assets = ".", spec, session, ui, host = "127.0.0.1";
  int port = 8080;
  bool json = false;
};

SessionSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open session spec " + path);
  try {
    return SessionSpec::from_json(ojson::parse(in));
  } catch (const ojson::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void print_tally(const TallyReport& t) {
  std::printf("%-24s %15s %11s %13s %9s\n", "run", "unsatisfactory", "sufficient", "satisfactory", "assessed");
  for (const auto& r : t.runs)
    std::printf("%-24s %15zu %11zu %13zu %9zu\n", r.run_id.c_str(), r.unsatisfactory, r.sufficient, r.satisfactory,
                r.assessed);
  std::printf("comparison: a_better %zu, similar %zu, b_better %zu (total %zu)\n", t.a_better, t.similar, t.b_better,
              t.comparisons);
}

void add_review(CLI::App& app, ReviewArgs& a, std::function<int()>& run) {
  auto* rv = app.add_subcommand("review", "Side-by-side expert review sessions");
  rv->require_subcommand(1);

  auto* create = rv->add_subcommand("create", "Create (or look up) a session from a spec file");
  create->add_option("--spec", a.spec)->required()->check(CLI::ExistingFile);
  create->add_option("--store", a.store)->capture_default_str();
  create->add_option("--assets", a.assets, "Asset root the spec's paths are relative to")->capture_default_str();
  create->callback([&a, &run] {
    run = [&a]() -> int {
      ReviewStore store(a.store);
      const ReviewSession s = store.create_session(load_spec(a.spec), a.assets);
      std::printf("%s\n", s.session_id.c_str());
      return 0;
    };
  });

  auto* serve = rv->add_subcommand("serve", "Serve the review API and UI");
  serve->add_option("--store", a.store)->capture_default_str();
  serve->add_option("--assets", a.assets)->capture_default_str();
  serve->add_option("--session", a.spec, "Session spec to create before serving");
  serve->add_option("--ui", a.ui, "Directory with the UI bundle")->check(CLI::ExistingDirectory);
  serve->add_option("--host", a.host)->capture_default_str();
  serve->add_option("--port", a.port)->capture_default_str()->check(CLI::Range(0, 65535));
  serve->callback([&a, &run] {
    run = [&a]() -> int {
      // Route SIGINT/SIGTERM to a waiter thread so shutdown runs outside a handler.
      sigset_t sigs;
      sigemptyset(&sigs);
      sigaddset(&sigs, SIGINT);
      sigaddset(&sigs, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &sigs, nullptr);

      ReviewStore store(a.store);
      if (!a.spec.empty()) {
        const ReviewSession s = store.create_session(load_spec(a.spec), a.assets);
        std::fprintf(stderr, "session %s (%zu images)\n", s.session_id.c_str(), s.spec.images.size());
      }
      ReviewServer server(store, ServeOptions{a.host, a.port, a.assets, a.ui});
      const int port = server.bind();
      std::fprintf(stderr, "listening on http://%s:%d\n", a.host.c_str(), port);
      std::jthread waiter([&server, sigs] {
        int sig = 0;
        sigwait(&sigs, &sig);
        server.stop();
      });
      server.run();
      // Normal stop from a signal; wake the waiter otherwise.
      pthread_kill(waiter.native_handle(), SIGTERM);
      return 0;
    };
  });

  auto* tally_cmd = rv->add_subcommand("tally", "Print the tally of a session");
  tally_cmd->add_option("--store", a.store)->capture_default_str();
  tally_cmd->add_option("--session", a.session, "Session id")->required();
  tally_cmd->add_flag("--json", a.json);
  tally_cmd->callback([&a, &run] {
    run = [&a]() -> int {
      ReviewStore store(a.store);
      if (!store.session(a.session)) throw ValidationError("unknown session " + a.session);
      const TallyReport t = store.tally(a.session);
      if (a.json) std::printf("%s\n", t.to_json().dump(2).c_str());
      else print_tally(t);
      return 0;
    };
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hicc - honeycomb defect dataset, metrics, tiling and review toolkit"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);
  std::string simd;
  app.add_option("--simd", simd, "Kernel variant: scalar, avx2 or neon (default: best available)");

  std::function<int()> run;
  PatchgenArgs pg;
  SplitArgs sp;
  MergeArgs mg;
  DetEvalArgs de;
  ClsEvalArgs ce;
  TileArgs ti;
  CamArgs ca;
  ReviewArgs rv;
  std::function<int()> r_pg, r_sp, r_mg, r_de, r_ce, r_ti, r_ca;
  add_patchgen(app, pg, r_pg);
  add_split(app, sp, r_sp);
  add_merge(app, mg, r_mg);
  add_det_eval(app, de, r_de);
  add_cls_eval(app, ce, r_ce);
  add_tile(app, ti, r_ti);
  add_cam(app, ca, r_ca);
  add_review(app, rv, run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::pair<const char*, std::function<int()>*> table[] = {
      {"patchgen", &r_pg}, {"split", &r_sp}, {"merge", &r_mg}, {"det-eval", &r_de},
      {"cls-eval", &r_ce}, {"tile", &r_ti},  {"cam", &r_ca}};
  for (const auto& [name, fn] : table)
    if (app.got_subcommand(name)) run = *fn;

  try {
    if (!simd.empty()) {
      const std::string s = simd;
      if (s == "scalar") kernels::set_active(kernels::Isa::scalar);
      else if (s == "avx2") kernels::set_active(kernels::Isa::avx2);
      else if (s == "neon") kernels::set_active(kernels::Isa::neon);
      else throw ValidationError("--simd must be scalar, avx2 or neon");
    }
    if (!run) throw ValidationError("nothing to do");
    return run();
  } catch (const std::invalid_argument& e) {  // ValidationError and friends
    std::fprintf(stderr, "hicc: error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "hicc: %s\n", e.what());
    return 1;
  }
}
