#include "commands.hpp"

#include <atomic>
#include <charconv>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "irpamg/errors.hpp"
#include "irpamg/experiments.hpp"
#include "irpamg/grow_api.hpp"
#include "irpamg/manifest.hpp"
#include "irpamg/service.hpp"

namespace fs = std::filesystem;

namespace irpamg::cli {

namespace {

// Usage problems detected after CLI11 parsing (bad seed syntax, mixed modes).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int emit_error(int code, std::string_view kind, std::string_view message) {
  std::cerr << nlohmann::json{{"v", 1}, {"error", {{"code", kind}, {"message", message}}}}.dump()
            << '\n';
  return code;
}

PixelCoord parse_seed(const std::string& text) {
  const auto comma = text.find(',');
  PixelCoord p;
  if (comma == std::string::npos) throw UsageError("seed must be x,y");
  const char* b = text.data();
  auto r1 = std::from_chars(b, b + comma, p.x);
  auto r2 = std::from_chars(b + comma + 1, b + text.size(), p.y);
  if (r1.ec != std::errc{} || r1.ptr != b + comma || r2.ec != std::errc{} ||
      r2.ptr != b + text.size()) {
    throw UsageError("seed must be x,y integers, got " + text);
  }
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw DataError("cannot write " + path.string());
}

struct EngineOpts {
  double r_s = 20.0;
  std::string variant = "full";
  std::string connectivity = "8";
  double epsilon = 1e-6;
  int warmup = 5;
  int ring_width = 3;
  std::size_t budget = 0;  // 0: derived from r_s

  void add_to(CLI::App* app) {
    app->add_option("--rs", r_s, "Spatial support R_s in pixels")->capture_default_str();
    app->add_option("--variant", variant, "Energy variant")
        ->check(CLI::IsMember({"full", "no_size_prior", "no_saliency", "no_homogeneity",
                               "no_geometric_prior"}))
        ->capture_default_str();
    app->add_option("--connectivity", connectivity, "Neighbourhood: 4 or 8")
        ->check(CLI::IsMember({"4", "8"}))
        ->capture_default_str();
    app->add_option("--epsilon", epsilon, "Stabilizer added to sigma_in")->capture_default_str();
    app->add_option("--warmup", warmup, "Steps recorded as sentinel energies")
        ->capture_default_str();
    app->add_option("--ring-width", ring_width, "Background ring dilation width")
        ->capture_default_str();
    app->add_option("--budget", budget, "Region size cap (0: ceil(pi R_s^2))")
        ->capture_default_str();
  }

  PamgConfig config() const {
    PamgConfig c;
    c.r_s = r_s;
    c.variant = parse_variant(variant);
    c.connectivity = parse_connectivity(connectivity);
    c.epsilon = epsilon;
    c.warmup = warmup;
    c.ring_width = ring_width;
    if (budget) c.growth_budget = budget;
    c.validate();
    return c;
  }
};

Normalization parse_normalization(const std::vector<double>& percentile) {
  if (percentile.empty()) return Normalization::minmax();
  if (percentile.size() != 2) throw UsageError("--percentile takes lo,hi");
  return Normalization::percentile(percentile[0], percentile[1]);
}

// ---- grow ---------------------------------------------------------------

struct GrowOpts {
  std::string image;
  std::string seed;
  std::optional<double> k;
  std::optional<double> radius;
  std::vector<double> percentile;
  std::string out = "mask.png";
  std::string rle;
  std::string trace;
  std::string json;
};

int cmd_grow(const GrowOpts& o, const EngineOpts& e, bool rs_given) {
  GrowRequest req;
  req.seed = parse_seed(o.seed);
  req.variant = parse_variant(e.variant);
  req.connectivity = parse_connectivity(e.connectivity);
  req.k_radius = o.k;
  req.radius = o.radius;
  if (rs_given) req.r_s = e.r_s;
  PamgConfig cfg;
  try {
    cfg = resolve_config(req, e.config());
  } catch (const std::invalid_argument& ex) {
    throw UsageError(ex.what());
  }
  const Raster img = load_raster(o.image, parse_normalization(o.percentile));
  if (!img.contains(req.seed)) throw DataError("seed lies outside the image");
  const auto result = generate_mask(img, req.seed, cfg);

  const fs::path out = o.out;
  write_bytes(out, mask_to_png(result.mask));
  fs::path rle = o.rle;
  if (rle.empty()) rle = out.parent_path() / (out.stem().string() + ".rle.json");
  write_text(rle, encode_rle(result.mask) + "\n");
  if (!o.trace.empty()) write_text(o.trace, trace_to_json(result.trace).dump() + "\n");
  const auto response = grow_response_json(result);
  if (!o.json.empty()) write_text(o.json, response.dump());
  std::cout << nlohmann::json{{"v", 1},
                              {"mask", out.string()},
                              {"rle", rle.string()},
                              {"k_star", response["k_star"]},
                              {"geometry", response["geometry"]},
                              {"inverted", response["inverted"]}}
                   .dump()
            << '\n';
  return kOk;
}

// ---- batch --------------------------------------------------------------

struct TargetOutput {
  std::size_t target = 0;
  std::optional<PixelCoord> seed;
  std::string status = "ok";
  std::optional<MaskResult> result;
};

struct ImageOutput {
  std::string id;
  std::vector<TargetOutput> targets;
  Mask pred{1, 1};
  std::optional<Mask> gt;
};

ImageOutput process_record(const ManifestRecord& rec, const PamgConfig& cfg,
                           const Normalization& norm) {
  ImageOutput out;
  out.id = image_id(rec.image);
  const Raster img = load_raster(rec.image, norm);
  out.pred = Mask(img.width(), img.height());
  for (std::size_t t = 0; t < rec.targets.size(); ++t) {
    const auto& target = rec.targets[t];
    if (target.gt) {
      const Mask gt = read_mask_png(*target.gt);
      if (gt.width() != img.width() || gt.height() != img.height()) {
        throw DataError("gt mask size does not match " + rec.image.string());
      }
      out.gt = out.gt ? mask_union(*out.gt, gt) : gt;
    }
    if (!target.point) continue;
    TargetOutput to;
    to.target = t;
    to.seed = target.point;
    if (!img.contains(*target.point)) {
      to.status = "seed_out_of_bounds";
    } else {
      try {
        to.result = generate_mask(img, *target.point, cfg);
        out.pred = mask_union(out.pred, to.result->mask);
      } catch (const NoEnergyPeak&) {
        to.status = "no_energy_peak";
      }
    }
    out.targets.push_back(std::move(to));
  }
  return out;
}

struct BatchOpts {
  std::string manifest;
  std::string out = "pseudo_labels";
  unsigned jobs = 1;
  std::vector<double> percentile;
  double match_radius = 3.0;
};

int cmd_batch(const BatchOpts& o, const EngineOpts& e, const std::string& effective_config) {
  const PamgConfig cfg = e.config();
  const auto norm = parse_normalization(o.percentile);
  const auto records = read_manifest(o.manifest);
  std::vector<std::optional<ImageOutput>> results(records.size());
  std::vector<std::exception_ptr> errors(records.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < records.size();) {
      try {
        results[i] = process_record(records[i], cfg, norm);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(o.jobs, unsigned(records.size())));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }

  // Gathered in manifest order, so the bytes below never depend on --jobs.
  const fs::path out = o.out;
  fs::create_directories(out / "masks");
  auto targets = nlohmann::json::array();
  std::vector<NamedMaskPair> pairs;
  for (const auto& r : results) {
    for (const auto& t : r->targets) {
      nlohmann::json j{{"image_id", r->id},
                       {"target", t.target},
                       {"seed", {t.seed->x, t.seed->y}},
                       {"status", t.status}};
      if (t.result) {
        const std::string stem = "masks/" + r->id + "_" + std::to_string(t.target);
        write_bytes(out / (stem + ".png"), mask_to_png(t.result->mask));
        write_text(out / (stem + ".rle.json"), encode_rle(t.result->mask) + "\n");
        j["mask"] = stem + ".png";
        j["k_star"] = *t.result->trace.k_star;
        j["inverted"] = t.result->trace.inverted;
        j["geometry"] = geometry_to_json(mask_geometry(t.result->mask));
      } else {
        j["mask"] = nullptr;
        j["k_star"] = nullptr;
        j["geometry"] = nullptr;
      }
      targets.push_back(std::move(j));
    }
    write_bytes(out / "pred" / (r->id + ".png"), mask_to_png(r->pred));
    if (r->gt) {
      write_bytes(out / "gt" / (r->id + ".png"), mask_to_png(*r->gt));
      pairs.push_back({r->id + ".png", r->pred, *r->gt});
    }
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const auto& a, const auto& b) { return a.name < b.name; });
  nlohmann::json summary{{"v", 1},
                         {"images", records.size()},
                         {"targets", std::move(targets)}};
  summary["metrics"] = pairs.empty() ? nlohmann::json(nullptr)
                                     : report_to_json(evaluate(pairs, o.match_radius));
  write_text(out / "summary.json", summary.dump(2) + "\n");
  write_text(out / "effective_config.ini", effective_config);
  std::cout << nlohmann::json{{"v", 1},
                              {"images", records.size()},
                              {"targets", summary["targets"].size()},
                              {"summary", (out / "summary.json").string()}}
                   .dump()
            << '\n';
  return kOk;
}

// ---- eval ---------------------------------------------------------------

struct EvalOpts {
  std::string pred_dir;
  std::string gt_dir;
  double match_radius = 3.0;
  std::string out;
};

int cmd_eval(const EvalOpts& o) {
  std::vector<fs::path> gts;
  for (const auto& entry : fs::directory_iterator(o.gt_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") gts.push_back(entry.path());
  }
  std::sort(gts.begin(), gts.end());
  std::vector<NamedMaskPair> pairs;
  for (const auto& g : gts) {
    const Mask gt = read_mask_png(g);
    const fs::path p = fs::path(o.pred_dir) / g.filename();
    Mask pred = fs::exists(p) ? read_mask_png(p) : Mask(gt.width(), gt.height());
    if (pred.width() != gt.width() || pred.height() != gt.height()) {
      throw DataError("size mismatch for " + g.filename().string());
    }
    pairs.push_back({g.filename().string(), std::move(pred), gt});
  }
  const auto report = evaluate(pairs, o.match_radius);
  const auto j = report_to_json(report);
  if (!o.out.empty()) {
    write_text(fs::path(o.out) / "metrics.json", j.dump(2) + "\n");
    write_text(fs::path(o.out) / "metrics.csv", report_to_csv(report));
  }
  std::cout << nlohmann::json{{"v", 1},
                              {"images", pairs.size()},
                              {"miou", report.miou},
                              {"pd", report.pd},
                              {"fa", report.fa}}
                   .dump()
            << '\n';
  return kOk;
}

// ---- experiments --------------------------------------------------------

struct SuiteOpts {
  std::string suite;
  std::size_t count = 200;
  std::uint64_t rng_seed = 3407;
  std::string out = "results";

  void add_to(CLI::App* app, std::string default_suite, std::size_t default_count) {
    suite = std::move(default_suite);
    count = default_count;
    app->add_option("--suite", suite, "Synthetic suite")
        ->check(CLI::IsMember({"default", "cluttered", "boundary"}))
        ->capture_default_str();
    app->add_option("--count", count, "Number of scenes")->capture_default_str();
    app->add_option("--rng-seed", rng_seed, "Master random seed")->capture_default_str();
    app->add_option("--out", out, "Output directory")->capture_default_str();
  }

  SuiteParams params() const {
    if (suite == "cluttered") return cluttered_suite_params();
    if (suite == "boundary") return boundary_suite_params();
    return default_suite_params();
  }

  std::vector<SceneTruth> scenes() const {
    if (count == 0) throw UsageError("--count must be positive");
    return irpamg::suite(params(), count, rng_seed);
  }
};

void write_rows(const fs::path& out, const std::string& name, const std::vector<RunSummary>& rows,
                const std::string& effective_config) {
  write_text(out / (name + ".json"), summaries_to_json(rows).dump(2) + "\n");
  const std::string csv = summaries_to_csv(rows);
  write_text(out / (name + ".csv"), csv);
  write_text(out / "effective_config.ini", effective_config);
  std::cout << csv;
}

int cmd_synth(const SuiteOpts& s) {
  const auto scenes = s.scenes();
  export_scenes(scenes, s.out);
  std::cout << nlohmann::json{{"v", 1}, {"scenes", scenes.size()}, {"dir", s.out}}.dump() << '\n';
  return kOk;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Point-prompted infrared target mask generation and evaluation"};
  app.set_config("--config", "", "INI/TOML file with option values");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  GrowOpts grow;
  EngineOpts grow_engine;
  auto* g = app.add_subcommand("grow", "Grow one mask from a seed point");
  g->add_option("image", grow.image, "Input PNG/PGM")->required()->check(CLI::ExistingFile);
  g->add_option("--seed", grow.seed, "Seed pixel x,y")->required();
  grow_engine.add_to(g);
  g->add_option("--k", grow.k, "Guided scale factor (with --radius)");
  g->add_option("--radius", grow.radius, "Known target radius for guided mode");
  g->add_option("--percentile", grow.percentile, "Percentile normalization lo,hi")
      ->delimiter(',')
      ->expected(2);
  g->add_option("--out", grow.out, "Mask PNG")->capture_default_str();
  g->add_option("--rle", grow.rle, "Mask RLE JSON (default: next to --out)");
  g->add_option("--trace", grow.trace, "Growth trace JSON");
  g->add_option("--json", grow.json, "Full response JSON, same schema as the service");

  BatchOpts batch;
  EngineOpts batch_engine;
  auto* b = app.add_subcommand("batch", "Pseudo-labels for every point in a manifest");
  b->add_option("manifest", batch.manifest, "JSONL manifest")->required()->check(CLI::ExistingFile);
  b->add_option("--out", batch.out, "Output directory")->capture_default_str();
  b->add_option("--jobs", batch.jobs, "Worker threads")->check(CLI::PositiveNumber)
      ->capture_default_str();
  b->add_option("--match-radius", batch.match_radius, "Centroid match radius")
      ->capture_default_str();
  b->add_option("--percentile", batch.percentile, "Percentile normalization lo,hi")
      ->delimiter(',')
      ->expected(2);
  batch_engine.add_to(b);

  EvalOpts eval;
  auto* e = app.add_subcommand("eval", "IoU, Pd/Fa and geometry errors of a prediction directory");
  e->add_option("pred_dir", eval.pred_dir, "Predicted mask PNGs")->required()
      ->check(CLI::ExistingDirectory);
  e->add_option("gt_dir", eval.gt_dir, "Ground-truth mask PNGs, same file names")->required()
      ->check(CLI::ExistingDirectory);
  e->add_option("--match-radius", eval.match_radius, "Centroid match radius")
      ->capture_default_str();
  e->add_option("--out", eval.out, "Directory for metrics.json and metrics.csv");

  SuiteOpts seed_suite;
  EngineOpts seed_engine;
  std::size_t seed_samples = 3;
  auto* ss = app.add_subcommand("sweep-seed", "Center, random-interior and boundary seeding");
  seed_suite.add_to(ss, "default", 200);
  seed_engine.add_to(ss);
  ss->add_option("--samples", seed_samples, "Random seeds per target")->capture_default_str();

  SuiteOpts rs_suite;
  EngineOpts rs_engine;
  std::vector<double> rs_grid{2, 4, 8, 12, 16, 20, 24, 28, 32, 40};
  std::vector<double> k_grid{2, 3, 4, 5, 6, 7, 8, 9, 10};
  auto* sr = app.add_subcommand("sweep-rs", "Fixed R_s sweep and guided k sweep");
  rs_suite.add_to(sr, "default", 200);
  rs_engine.add_to(sr);
  sr->add_option("--rs-grid", rs_grid, "R_s values")->delimiter(',')->capture_default_str();
  sr->add_option("--k-grid", k_grid, "Guided scale factors")->delimiter(',')
      ->capture_default_str();

  SuiteOpts ab_suite;
  EngineOpts ab_engine;
  auto* ab = app.add_subcommand("ablate", "Energy-term ablation");
  ab_suite.add_to(ab, "cluttered", 200);
  ab_engine.add_to(ab);

  SuiteOpts bd_suite;
  EngineOpts bd_engine;
  std::vector<double> rho_edges = kDefaultRhoEdges;
  auto* bd = app.add_subcommand("boundary", "Detectability boundary validation");
  bd_suite.add_to(bd, "boundary", 600);
  bd_engine.add_to(bd);
  bd->add_option("--rho-edges", rho_edges, "Bucket edges")->delimiter(',')->capture_default_str();

  SuiteOpts synth_suite;
  auto* sy = app.add_subcommand("synth", "Export a synthetic suite with ground truth and manifest");
  synth_suite.add_to(sy, "default", 200);

  std::string root;
  std::string log;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
  EngineOpts serve_engine;
  auto* sv = app.add_subcommand("serve", "Annotation HTTP service");
  sv->add_option("root", root, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  sv->add_option("--log", log, "Annotation log (default: <root>/annotations.log.jsonl)");
  sv->add_option("--host", host, "Bind address")->capture_default_str();
  sv->add_option("--port", port, "Port")->capture_default_str();
  sv->add_option("--static", static_dir, "Directory served at /")->check(CLI::ExistingDirectory);
  serve_engine.add_to(sv);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    return emit_error(kUsage, "usage", ex.what());
  }

  const std::string effective = app.config_to_str(true, false);
  try {
    if (*g) return cmd_grow(grow, grow_engine, g->count("--rs") > 0);
    if (*b) return cmd_batch(batch, batch_engine, effective);
    if (*e) return cmd_eval(eval);
    if (*ss) {
      const auto scenes = seed_suite.scenes();
      write_rows(seed_suite.out, "sweep_seed",
                 run_seed_sweep(scenes, seed_engine.config(), seed_suite.rng_seed, seed_samples),
                 effective);
      return kOk;
    }
    if (*sr) {
      if (rs_grid.empty() || k_grid.empty()) throw UsageError("grids must be non-empty");
      const auto scenes = rs_suite.scenes();
      const auto cfg = rs_engine.config();
      auto rows = run_rs_sweep(scenes, rs_grid, cfg);
      write_rows(rs_suite.out, "sweep_rs", rows, effective);
      write_rows(rs_suite.out, "sweep_k", run_k_sweep(scenes, k_grid, cfg), effective);
      return kOk;
    }
    if (*ab) {
      write_rows(ab_suite.out, "ablation", run_ablation(ab_suite.scenes(), ab_engine.config()),
                 effective);
      return kOk;
    }
    if (*bd) {
      const auto report = run_boundary(bd_suite.scenes(), bd_engine.config(), rho_edges);
      const fs::path out = bd_suite.out;
      write_text(out / "boundary.json", boundary_report_to_json(report).dump(2) + "\n");
      const auto csv = boundary_report_to_csv(report);
      write_text(out / "boundary.csv", csv);
      write_text(out / "boundary.svg", boundary_report_to_svg(report));
      write_text(out / "effective_config.ini", effective);
      std::cout << csv;
      return kOk;
    }
    if (*sy) return cmd_synth(synth_suite);
    if (*sv) {
      SessionStore store(root, log.empty() ? std::nullopt : std::optional<fs::path>(log));
      AnnotateService service(store, serve_engine.config());
      std::cerr << "listening on " << host << ':' << port << '\n';
      serve(service, host, port, static_dir.empty() ? std::nullopt : std::optional(static_dir));
      return kOk;
    }
  } catch (const UsageError& ex) {
    return emit_error(kUsage, "usage", ex.what());
  } catch (const NoEnergyPeak& ex) {
    return emit_error(kAlgorithmError, "no_energy_peak", ex.what());
  } catch (const DataError& ex) {
    return emit_error(kDataError, "data_error", ex.what());
  } catch (const std::invalid_argument& ex) {
    return emit_error(kUsage, "usage", ex.what());
  } catch (const std::exception& ex) {
    return emit_error(kDataError, "data_error", ex.what());
  }
  return kUsage;
}

}  // namespace irpamg::cli
