// Copyright 2026 The LightFuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <stdexcept>

#include <CLI11.hpp>

#include "lightfuse/cost_model.hpp"
#include "lightfuse/fusion.hpp"
#include "lightfuse/io.hpp"
#include "lightfuse/metrics.hpp"
#include "lightfuse/ppm.hpp"
#include "lightfuse/random.hpp"
#include "lightfuse/training.hpp"
#include "lightfuse/weights_io.hpp"

namespace fs = std::filesystem;

namespace lightfuse::cli {

namespace {

struct RunConfig {
  std::string under_path;
  std::string over_path;
  std::string out_path;
  std::string weights_path;
  std::string model = "lightfuse";
  std::string convention = "table4";
  std::string format = "text";
  std::string dims = "256x256";
  std::string dir;
  std::string loss_csv;
  int tile_size = 32;
  int repetitions = 3;
  int steps = 2000;
  int patch_size = 64;
  std::uint64_t seed = 0;
  bool perceptual = false;
};

/// Failure with a chosen exit code.
struct CommandError : std::runtime_error {
  CommandError(ExitCode c, const std::string& msg) : std::runtime_error(msg), code(c) {}
  ExitCode code;
};

FlopsConvention convention_by_name(const std::string& name) {
  if (name == "table4") return FlopsConvention::table4();
  if (name == "table2") return FlopsConvention::table2();
  return FlopsConvention::exact();
}

void require_file(const std::string& path) {
  if (!fs::is_regular_file(path)) throw CommandError(kIo, "no such file: " + path);
}

bool has_ppm_extension(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".ppm";
}

struct NamedImage {
  std::string name;
  Image8 image;
};

// PPM files of a flat directory in name order; anything else is skipped with a warning.
std::vector<NamedImage> load_scene(const fs::path& dir, std::ostream& err,
                                   const std::string& exclude = "") {
  if (!fs::is_directory(dir)) throw CommandError(kIo, "no such directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<NamedImage> images;
  for (const auto& f : files) {
    if (f.filename() == exclude) continue;
    if (!has_ppm_extension(f)) {
      err << "warning: skipping non-PPM file " << f.filename().string() << "\n";
      continue;
    }
    try {
      images.push_back({f.filename().string(), read_ppm(f)});
    } catch (const PpmError& e) {
      err << "warning: skipping " << f.filename().string() << ": " << e.what() << "\n";
    }
  }
  if (images.empty()) throw CommandError(kIo, "no PPM images in " + dir.string());
  return images;
}

std::pair<int, int> parse_dims(const std::string& s) {
  const auto x = s.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(s);
    return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
  } catch (const std::exception&) {
    throw CommandError(kUsage, "dims must look like HxW, got '" + s + "'");
  }
}

Tensor random_tensor(int h, int w, int c, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(h, w, c);
  for (float& v : t.data()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

int cmd_fuse(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.under_path);
  require_file(cfg.over_path);
  require_file(cfg.weights_path);
  const Image8 under = read_ppm(cfg.under_path);
  const Image8 over = read_ppm(cfg.over_path);
  if (under.height != over.height || under.width != over.width) {
    throw CommandError(kValidation, "exposure dims differ: " + std::to_string(under.height) +
                                        "x" + std::to_string(under.width) + " vs " +
                                        std::to_string(over.height) + "x" +
                                        std::to_string(over.width));
  }
  const ModelGraph graph = build_lightfuse();
  const WeightStore w = read_weights_file(cfg.weights_path, graph);

  const Image8 pu = pad_to_multiple(under, graph.spatial_divisor());
  const Image8 po = pad_to_multiple(over, graph.spatial_divisor());
  const TileSpec tile{std::min({cfg.tile_size, pu.height, pu.width})};
  const FusedResult r = forward_fused(graph, w, normalize(pu), normalize(po), tile);
  const Image8 fused = crop(denormalize(r.output), 0, 0, under.height, under.width);
  write_ppm(cfg.out_path, fused);

  out << "input=" << under.height << "x" << under.width << " padded=" << pu.height << "x"
      << pu.width << " tile=" << tile.size << "\n";
  out << r.traffic.to_line() << "\n";
  return kOk;
}

int cmd_analyze(const RunConfig& cfg, std::ostream& out) {
  const ModelGraph graph = cfg.model == "tcnn" ? build_tcnn() : build_lightfuse();
  const CostReport report = analyze(graph, convention_by_name(cfg.convention));
  out << (cfg.format == "kv" ? render_kv(report) : render_report(report));
  return kOk;
}

int cmd_bench(const RunConfig& cfg, std::ostream& out) {
  const auto [h, w] = parse_dims(cfg.dims);
  if (h <= 0 || w <= 0 || h % 8 != 0 || w % 8 != 0) {
    throw CommandError(kValidation, "bench dims must be positive multiples of 8");
  }
  const ModelGraph graph = build_lightfuse();
  const WeightStore weights = init_weights(graph, cfg.seed);
  const Tensor x = random_tensor(h, w, 6, cfg.seed + 1);
  const TileSpec tile{cfg.tile_size};

  using clock = std::chrono::steady_clock;
  auto time_ms = [](auto&& fn, int reps) {
    const auto t0 = clock::now();
    for (int i = 0; i < reps; ++i) fn();
    return std::chrono::duration<double, std::milli>(clock::now() - t0).count() / reps;
  };

  const FusedResult fused = run_detailnet_fused(x, weights, tile);
  const FusedResult unfused = run_detailnet_unfused(x, weights);
  out << "dims=" << h << "x" << w << " tile=" << tile.size << "\n";
  out << fused.traffic.to_line() << "\n";
  out << unfused.traffic.to_line() << "\n";
  if (fused.output != unfused.output) {
    out << "bit_exact=no\n";
    throw CommandError(kValidation, "fused and unfused outputs differ");
  }
  out << "bit_exact=yes\n";
  if (cfg.repetitions > 0) {
    const double tf = time_ms([&] { run_detailnet_fused(x, weights, tile); }, cfg.repetitions);
    const double tu = time_ms([&] { run_detailnet_unfused(x, weights); }, cfg.repetitions);
    char line[128];
    std::snprintf(line, sizeof line, "time_ms fused=%.3f unfused=%.3f repetitions=%d\n", tf, tu,
                  cfg.repetitions);
    out << line;
  }
  return kOk;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.under_path);
  require_file(cfg.over_path);
  const Image8 a = read_ppm(cfg.under_path);
  const Image8 b = read_ppm(cfg.over_path);
  out << score(a, b).to_line() << "\n";
  return kOk;
}

int cmd_pair(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto scene = load_scene(cfg.dir, err);
  std::vector<Image8> images;
  for (const auto& s : scene) images.push_back(s.image);
  if (images.size() < 2) throw CommandError(kValidation, "need at least 2 images in " + cfg.dir);
  const auto [under, over] = select_extreme_pair(images);
  out << "under=" << scene[under].name << "\n";
  out << "over=" << scene[over].name << "\n";
  return kOk;
}

// Each scene is a subdirectory holding an exposure sequence plus label.ppm.
std::vector<TrainingSample> load_training_set(const RunConfig& cfg, std::ostream& err) {
  if (!fs::is_directory(cfg.dir)) throw CommandError(kIo, "no such directory: " + cfg.dir);
  if (cfg.patch_size <= 0 || cfg.patch_size % 8 != 0) {
    throw CommandError(kValidation, "patch size must be a positive multiple of 8");
  }
  std::vector<fs::path> scenes;
  for (const auto& e : fs::directory_iterator(cfg.dir)) {
    if (e.is_directory()) scenes.push_back(e.path());
  }
  std::sort(scenes.begin(), scenes.end());
  std::vector<TrainingSample> dataset;
  for (const auto& scene : scenes) {
    if (!fs::is_regular_file(scene / "label.ppm")) {
      err << "warning: skipping " << scene.filename().string() << ": no label.ppm\n";
      continue;
    }
    const Image8 label = read_ppm(scene / "label.ppm");
    const auto exposures = load_scene(scene, err, "label.ppm");
    std::vector<Image8> images;
    for (const auto& s : exposures) images.push_back(s.image);
    if (images.size() < 2) {
      err << "warning: skipping " << scene.filename().string() << ": fewer than 2 exposures\n";
      continue;
    }
    const auto [u, o] = select_extreme_pair(images);
    const auto pu = extract_patches(images[u], cfg.patch_size, cfg.patch_size);
    const auto po = extract_patches(images[o], cfg.patch_size, cfg.patch_size);
    const auto pl = extract_patches(label, cfg.patch_size, cfg.patch_size);
    if (pl.size() != pu.size()) {
      throw CommandError(kValidation, "label dims differ from exposures in " + scene.string());
    }
    for (std::size_t i = 0; i < pu.size(); ++i) {
      dataset.push_back({normalize(pu[i]), normalize(po[i]), normalize(pl[i])});
    }
  }
  if (dataset.empty()) throw CommandError(kIo, "no usable scenes under " + cfg.dir);
  return dataset;
}

int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto dataset = load_training_set(cfg, err);
  const ModelGraph graph = build_lightfuse();
  RandomConvExtractor extractor(cfg.seed ^ 0x5eedULL);
  TrainOptions opts;
  opts.steps = cfg.steps;
  opts.seed = cfg.seed;
  opts.perceptual = cfg.perceptual ? &extractor : nullptr;
  const TrainResult r = train_toy(graph, init_weights(graph, cfg.seed), dataset, opts);
  write_weights_file(cfg.weights_path, r.weights, graph);
  const std::string csv = loss_curve_csv(r.curve);
  if (cfg.loss_csv.empty()) {
    out << csv;
  } else {
    const std::vector<std::uint8_t> bytes(csv.begin(), csv.end());
    write_bytes(cfg.loss_csv, bytes);
  }
  char line[160];
  std::snprintf(line, sizeof line, "samples=%zu steps=%d final_mse=%.6g\n", dataset.size(),
                cfg.steps, r.final_loss.l_mse);
  (cfg.loss_csv.empty() ? err : out) << line;
  return kOk;
}

ExitCode code_for(const WeightError& e) {
  switch (e.kind()) {
    case WeightError::Kind::kBadMagic:
    case WeightError::Kind::kTruncated:
    case WeightError::Kind::kTrailingData: return kIo;
    default: return kValidation;
  }
}

}  // namespace

Image8 pad_to_multiple(const Image8& img, int multiple) {
  const int h = (img.height + multiple - 1) / multiple * multiple;
  const int w = (img.width + multiple - 1) / multiple * multiple;
  if (h == img.height && w == img.width) return img;
  Image8 out(h, w);
  for (int y = 0; y < h; ++y) {
    const int sy = std::min(y, img.height - 1);
    for (int x = 0; x < w; ++x) {
      const int sx = std::min(x, img.width - 1);
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(sy, sx, c);
    }
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"LightFuse dual-exposure fusion engine", "lightfuse"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto* fuse = app.add_subcommand("fuse", "Fuse an under/over exposure pair");
  fuse->add_option("under", cfg.under_path, "Underexposed PPM")->required();
  fuse->add_option("over", cfg.over_path, "Overexposed PPM")->required();
  fuse->add_option("out", cfg.out_path, "Output PPM")->required();
  fuse->add_option("--weights", cfg.weights_path, "LFW1 weight file")->required();
  fuse->add_option("--tile-size", cfg.tile_size, "Detail-branch tile side")
      ->check(CLI::PositiveNumber);

  auto* an = app.add_subcommand("analyze", "FLOPs and parameter report");
  an->add_option("model", cfg.model, "lightfuse | tcnn")
      ->required()
      ->check(CLI::IsMember({"lightfuse", "tcnn"}));
  an->add_option("--convention", cfg.convention, "table4 | table2 | exact")
      ->check(CLI::IsMember({"table4", "table2", "exact"}));
  an->add_option("--format", cfg.format, "text | kv")->check(CLI::IsMember({"text", "kv"}));

  auto* bench = app.add_subcommand("bench", "Fused vs unfused detail branch");
  bench->add_option("--dims", cfg.dims, "HxW, multiples of 8");
  bench->add_option("--tile-size", cfg.tile_size)->check(CLI::PositiveNumber);
  bench->add_option("--repetitions", cfg.repetitions)->check(CLI::NonNegativeNumber);
  bench->add_option("--seed", cfg.seed);

  auto* train = app.add_subcommand("train", "Toy-scale training");
  train->add_option("data_dir", cfg.dir, "Directory of scene subdirectories")->required();
  train->add_option("--weights", cfg.weights_path, "Output LFW1 file")->required();
  train->add_option("--steps", cfg.steps)->check(CLI::NonNegativeNumber);
  train->add_option("--seed", cfg.seed);
  train->add_option("--loss-csv", cfg.loss_csv, "Loss curve CSV (default: stdout)");
  train->add_option("--patch-size", cfg.patch_size);
  train->add_flag("--perceptual", cfg.perceptual, "Add perceptual loss (random conv extractor)");

  auto* ev = app.add_subcommand("eval", "PSNR / SSIM of two PPMs");
  ev->add_option("a", cfg.under_path)->required();
  ev->add_option("b", cfg.over_path)->required();

  auto* pair = app.add_subcommand("pair", "Pick darkest and brightest images of a scene");
  pair->add_option("scene_dir", cfg.dir)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (*fuse) return cmd_fuse(cfg, out);
    if (*an) return cmd_analyze(cfg, out);
    if (*bench) return cmd_bench(cfg, out);
    if (*train) return cmd_train(cfg, out, err);
    if (*ev) return cmd_eval(cfg, out);
    if (*pair) return cmd_pair(cfg, out, err);
  } catch (const CommandError& e) {
    err << "error: " << e.what() << "\n";
    return e.code;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const PpmError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const WeightError& e) {
    err << "error: " << e.what() << "\n";
    return code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }
  err << app.help();
  return kUsage;
}

}  // namespace lightfuse::cli
