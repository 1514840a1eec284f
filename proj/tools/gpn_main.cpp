// Command-line front end for the ellipse localization toolkit: pairwise
// losses and overlaps, anchor codecs, NMS, synthetic data, FROC readouts,
// and the KL-vs-regression fitting experiment. Record formats are described
// in docs/FORMATS.md. Exit codes: 0 success, 2 invalid input, 3 numerical
// failure (degenerate geometry or a diverged fit).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <gpn/gpn.hpp>

namespace {

using nlohmann::json;

// ---------------------------------------------------------------- plumbing

/// Reads ellipse records from a path, with "-" meaning stdin.
std::vector<gpn::EllipseRecord> load_records(const std::string& path) {
    if (path == "-") {
        return gpn::read_ellipse_records(std::cin, "stdin");
    }
    std::ifstream in(path);
    if (!in) {
        throw gpn::invalid_input("cannot open '" + path + "'");
    }
    return gpn::read_ellipse_records(in, path);
}

std::vector<gpn::EncodedRecord> load_encoded(const std::string& path) {
    if (path == "-") {
        return gpn::read_encoded_records(std::cin, "stdin");
    }
    std::ifstream in(path);
    if (!in) {
        throw gpn::invalid_input("cannot open '" + path + "'");
    }
    return gpn::read_encoded_records(in, path);
}

gpn::EllipseRecord load_single_record(const std::string& path,
                                      const char* what) {
    const auto recs = load_records(path);
    if (recs.size() != 1) {
        throw gpn::invalid_input(std::string(what) + " file '" + path +
                                 "' must hold exactly one record, got " +
                                 std::to_string(recs.size()));
    }
    return recs[0];
}

/// Output stream for a path, with "-" meaning stdout.
class OutFile {
public:
    explicit OutFile(const std::string& path) {
        if (path != "-") {
            file_.open(path);
            if (!file_) {
                throw gpn::invalid_input("cannot open '" + path +
                                         "' for writing");
            }
        }
    }

    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

gpn::Anchor parse_anchor(const std::vector<double>& v) {
    if (v.size() != 4) {
        throw gpn::invalid_input("anchor needs four values: cx,cy,w,h");
    }
    return gpn::Anchor(v[0], v[1], v[2], v[3]);
}

void print_num(double v) { std::printf("%.9g\n", v); }

json ellipse_json(const gpn::Ellipse& e) {
    json j;
    j["mu_x"] = e.mu_x;
    j["mu_y"] = e.mu_y;
    j["sigma_l"] = e.sigma_l;
    j["sigma_s"] = e.sigma_s;
    j["theta_rad"] = e.theta;
    return j;
}

// ------------------------------------------------------------ subcommands

struct KlOpts {
    std::string target;
    std::string proposal;
    bool gradient = false;
    bool axis_aligned = false;
};

void run_kl(const KlOpts& o) {
    const auto targets = load_records(o.target);
    const auto proposals = load_records(o.proposal);
    if (targets.empty() || targets.size() != proposals.size()) {
        throw gpn::invalid_input(
            "target and proposal files must pair up line by line (got " +
            std::to_string(targets.size()) + " vs " +
            std::to_string(proposals.size()) + ")");
    }
    for (size_t i = 0; i < targets.size(); ++i) {
        const gpn::Ellipse& t = targets[i].ellipse;
        const gpn::Ellipse& p = proposals[i].ellipse;
        const double v = o.axis_aligned
                             ? gpn::kl_divergence_axis_aligned(t, p)
                             : gpn::kl_divergence(t, p);
        if (!o.gradient) {
            print_num(v);
            continue;
        }
        const gpn::ParamGradient g = gpn::kl_gradient(t, p);
        json j;
        j["kl"] = v;
        j["d_mu_x"] = g.d_mu_x;
        j["d_mu_y"] = g.d_mu_y;
        j["d_sigma_l"] = g.d_sigma_l;
        j["d_sigma_s"] = g.d_sigma_s;
        j["d_theta"] = g.d_theta;
        std::cout << j.dump() << '\n';
    }
}

struct IouOpts {
    std::string a;
    std::string b;
    int cells = 256;
    int mc_samples = 0;
    std::uint64_t seed = 0;
    std::string dump_masks;
};

void run_iou(const IouOpts& o) {
    const auto as = load_records(o.a);
    const auto bs = load_records(o.b);
    if (as.empty() || as.size() != bs.size()) {
        throw gpn::invalid_input(
            "the two record files must pair up line by line (got " +
            std::to_string(as.size()) + " vs " + std::to_string(bs.size()) +
            ")");
    }
    for (size_t i = 0; i < as.size(); ++i) {
        const gpn::Ellipse& ea = as[i].ellipse;
        const gpn::Ellipse& eb = bs[i].ellipse;
        json j;
        j["raster"] = gpn::ellipse_iou(ea, eb, o.cells);
        if (o.mc_samples > 0) {
            const gpn::McEstimate mc = gpn::ellipse_iou_mc(
                ea, eb, o.mc_samples, o.seed + static_cast<std::uint64_t>(i));
            j["mc"] = mc.value;
            j["mc_std_err"] = mc.std_err;
        }
        std::cout << j.dump() << '\n';
        if (!o.dump_masks.empty()) {
            const gpn::Box bounds =
                gpn::union_box(gpn::ellipse_bbox(ea), gpn::ellipse_bbox(eb));
            const gpn::RasterGrid grid =
                gpn::make_shared_grid(bounds, o.cells);
            const char* tags[2] = {"a", "b"};
            const gpn::Ellipse* es[2] = {&ea, &eb};
            for (int side = 0; side < 2; ++side) {
                char name[32];
                std::snprintf(name, sizeof(name), "_%03zu_%s.pgm", i,
                              tags[side]);
                OutFile f(o.dump_masks + name);
                gpn::write_pgm(f.stream(),
                               gpn::rasterize_ellipse(*es[side], grid));
            }
        }
    }
}

struct CodecOpts {
    std::string in;
    std::vector<double> anchor;
};

void run_encode(const CodecOpts& o) {
    const gpn::Anchor anchor = parse_anchor(o.anchor);
    for (const auto& r : load_records(o.in)) {
        gpn::EncodedRecord enc;
        enc.image_id = r.image_id;
        enc.encoded = gpn::encode(r.ellipse, anchor);
        gpn::write_encoded_record(std::cout, enc);
    }
}

void run_decode(const CodecOpts& o) {
    const gpn::Anchor anchor = parse_anchor(o.anchor);
    for (const auto& r : load_encoded(o.in)) {
        gpn::write_ellipse_record(
            std::cout,
            gpn::EllipseRecord(r.image_id, gpn::decode(r.encoded, anchor)));
    }
}

struct AnchorsOpts {
    double image_w = 0.0;
    double image_h = 0.0;
    double stride = 0.0;
    std::vector<double> scales;
    std::vector<double> ratios = {1.0};
};

void run_anchors(const AnchorsOpts& o) {
    const auto grid = gpn::generate_anchor_grid(o.image_w, o.image_h,
                                                o.stride, o.scales, o.ratios);
    for (const gpn::Anchor& a : grid) {
        json j;
        j["cx"] = a.cx;
        j["cy"] = a.cy;
        j["w"] = a.w;
        j["h"] = a.h;
        std::cout << j.dump() << '\n';
    }
}

struct NmsOpts {
    std::string in;
    double iou = 0.0;
    std::string metric = "box";
    int cells = 256;
};

void run_nms(const NmsOpts& o) {
    const auto dets = gpn::to_detections(load_records(o.in));
    const gpn::NmsMetric metric = o.metric == "ellipse"
                                      ? gpn::NmsMetric::ellipse
                                      : gpn::NmsMetric::box;
    for (const auto& r :
         gpn::from_detections(gpn::nms(dets, o.iou, metric, o.cells))) {
        gpn::write_ellipse_record(std::cout, r);
    }
}

struct SynthOpts {
    int images = 0;
    std::uint64_t seed = 0;
    double image_w = 512.0;
    double image_h = 512.0;
    int min_lesions = 1;
    int max_lesions = 3;
    double semi_major_min = 8.0;
    double semi_major_max = 64.0;
    double aspect_min = 1.0;
    double aspect_max = 3.0;
    std::string out = "-";
    std::string dets_out;
    gpn::CorruptionConfig corruption;
    std::optional<std::uint64_t> det_seed;
};

std::vector<gpn::GroundTruth> make_scenes(const SynthOpts& o) {
    gpn::SceneConfig cfg;
    cfg.image_w = o.image_w;
    cfg.image_h = o.image_h;
    cfg.min_lesions = o.min_lesions;
    cfg.max_lesions = o.max_lesions;
    cfg.semi_major =
        gpn::DistSpec::make_log_uniform(o.semi_major_min, o.semi_major_max);
    cfg.aspect = gpn::DistSpec::make_log_uniform(o.aspect_min, o.aspect_max);
    cfg.seed = o.seed;
    return gpn::generate_scenes(cfg, o.images);
}

void run_synth(const SynthOpts& o) {
    const auto gts = make_scenes(o);
    {
        OutFile f(o.out);
        for (const auto& r : gpn::from_ground_truths(gts)) {
            gpn::write_ellipse_record(f.stream(), r);
        }
    }
    if (!o.dets_out.empty()) {
        gpn::CorruptionConfig ccfg = o.corruption;
        ccfg.seed = o.det_seed.value_or(o.seed);
        OutFile f(o.dets_out);
        for (const auto& r : gpn::from_detections(gpn::corrupt(gts, ccfg))) {
            gpn::write_ellipse_record(f.stream(), r);
        }
    }
}

struct CorruptOpts {
    std::string in;
    std::string out = "-";
    gpn::CorruptionConfig corruption;
};

void run_corrupt(const CorruptOpts& o) {
    const auto gts = gpn::to_ground_truths(load_records(o.in));
    OutFile f(o.out);
    for (const auto& r :
         gpn::from_detections(gpn::corrupt(gts, o.corruption))) {
        gpn::write_ellipse_record(f.stream(), r);
    }
}

struct FitOpts {
    std::string target;
    std::string init;
    std::string loss = "kl";
    std::string space = "raw";
    std::vector<double> anchor;
    double lr = 0.1;
    int max_iters = 500;
    double eps = 1e-12;
    int trace_cells = 64;
    int final_cells = 256;
    std::string trace_out;
};

void run_fit(const FitOpts& o) {
    const gpn::Ellipse target =
        load_single_record(o.target, "target").ellipse;
    const gpn::Ellipse init = load_single_record(o.init, "init").ellipse;

    gpn::FitConfig cfg;
    cfg.learning_rate = o.lr;
    cfg.max_iters = o.max_iters;
    cfg.convergence_eps = o.eps;
    cfg.trace_iou_cells = o.trace_cells;
    cfg.final_iou_cells = o.final_cells;
    cfg.space = o.space == "encoded" ? gpn::ParamSpace::anchor_encoded
                                     : gpn::ParamSpace::raw;
    if (!o.anchor.empty()) {
        cfg.anchor = parse_anchor(o.anchor);
    }
    if (o.loss == "regression" && !cfg.anchor.has_value()) {
        throw gpn::invalid_input("--loss regression requires --anchor");
    }
    if (cfg.space == gpn::ParamSpace::anchor_encoded &&
        !cfg.anchor.has_value()) {
        throw gpn::invalid_input("--space encoded requires --anchor");
    }

    const gpn::FitTrace trace =
        o.loss == "regression"
            ? gpn::fit_regression(target, init, *cfg.anchor, cfg)
            : gpn::fit_kl(target, init, cfg);

    if (!o.trace_out.empty()) {
        OutFile f(o.trace_out);
        int k = 0;
        for (const gpn::FitStep& s : trace.steps) {
            json j;
            j["iteration"] = ++k;
            j["loss"] = s.loss;
            if (s.iou >= 0.0) j["iou"] = s.iou;
            j.update(ellipse_json(s.ellipse));
            f.stream() << j.dump() << '\n';
        }
    }

    json j;
    j["converged"] = trace.converged;
    j["iterations"] = trace.iterations;
    j["initial_loss"] = trace.initial_loss;
    j["final_loss"] = trace.final_loss;
    j["final_iou"] = trace.final_iou;
    j["final"] = ellipse_json(trace.final_ellipse);
    std::cout << j.dump() << '\n';
}

struct CompareOpts {
    int n = 0;
    std::uint64_t seed = 0;
    int threads = 1;
    double lr = 0.05;
    int max_iters = 15;
    double semi_major_min = 8.0;
    double semi_major_max = 64.0;
    double aspect_min = 1.0;
    double aspect_max = 3.0;
    std::string out;
    std::string angle_table;
};

void run_compare(const CompareOpts& o) {
    gpn::SceneConfig scenes;
    scenes.min_lesions = 1;
    scenes.max_lesions = 1;  // one target per synthetic image
    scenes.semi_major =
        gpn::DistSpec::make_log_uniform(o.semi_major_min, o.semi_major_max);
    scenes.aspect = gpn::DistSpec::make_log_uniform(o.aspect_min, o.aspect_max);
    scenes.seed = o.seed;
    const auto gts = gpn::generate_scenes(scenes, o.n);
    std::vector<gpn::Ellipse> targets;
    targets.reserve(gts.size());
    for (const auto& g : gts) targets.push_back(g.ellipse);

    gpn::CompareConfig cfg;
    cfg.fit.learning_rate = o.lr;
    cfg.fit.max_iters = o.max_iters;
    cfg.n_threads = o.threads;
    const gpn::CompareReport rep = gpn::compare(targets, cfg);

    if (!o.out.empty()) {
        OutFile f(o.out);
        gpn::write_compare_csv(f.stream(), rep);
    }
    if (!o.angle_table.empty()) {
        OutFile f(o.angle_table);
        gpn::write_angle_table_csv(f.stream(), rep.summary.angle_bins);
    }

    const gpn::CompareSummary& s = rep.summary;
    json j;
    j["n"] = s.n;
    j["n_diverged"] = s.n_diverged;
    j["kl_mean_iou"] = s.kl_mean_iou;
    j["reg_mean_iou"] = s.reg_mean_iou;
    j["kl_median_iou"] = s.kl_median_iou;
    j["reg_median_iou"] = s.reg_median_iou;
    j["iou_levels"] = gpn::kIouFractions;
    j["kl_frac_at"] = s.kl_frac_at;
    j["reg_frac_at"] = s.reg_frac_at;
    j["kl_mean_iters"] = s.kl_mean_iters;
    j["reg_mean_iters"] = s.reg_mean_iters;
    std::cout << j.dump() << '\n';
}

struct FrocOpts {
    std::string dets;
    std::string gts;
    double iou = 0.5;
    std::vector<double> fp_grid = gpn::kDefaultFpGrid;
    int cells = 256;
    std::string curve_out;
};

void run_froc(const FrocOpts& o) {
    const auto dets = gpn::to_detections(load_records(o.dets));
    const auto gts = gpn::to_ground_truths(load_records(o.gts));
    if (!o.curve_out.empty()) {
        OutFile f(o.curve_out);
        gpn::write_froc_csv(
            f.stream(),
            gpn::froc_operating_points(dets, gts, o.iou, o.cells));
    }
    const gpn::FrocCurve curve =
        gpn::froc(dets, gts, o.iou, o.fp_grid, o.cells);
    gpn::write_froc_csv(std::cout, curve.points);
}

void add_corruption_flags(CLI::App* cmd, gpn::CorruptionConfig& c) {
    cmd->add_option("--center-noise", c.center_noise_sigma,
                    "center offset sigma as a fraction of the semi-major");
    cmd->add_option("--axis-noise", c.axis_noise_sigma,
                    "log-normal sigma multiplying each semi-axis");
    cmd->add_option("--angle-noise-deg", c.angle_noise_sigma_deg,
                    "additive angle noise sigma, degrees");
    cmd->add_option("--miss-rate", c.miss_rate,
                    "probability of dropping each ground truth");
    cmd->add_option("--fp-rate", c.fp_rate,
                    "mean false positives per image (Poisson)");
    cmd->add_option("--score-separation", c.score_separation,
                    "KL scale in score = exp(-KL / separation)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Ellipse localization toolkit: Gaussian-overlap losses, anchor "
        "codecs, NMS, FROC evaluation, and synthetic-scene experiments. "
        "Record formats: docs/FORMATS.md. Paths accept '-' for stdin/stdout."};
    app.require_subcommand(1);

    KlOpts kl;
    auto* kl_cmd = app.add_subcommand(
        "kl", "KL divergence per paired line of two record files");
    kl_cmd->add_option("--target", kl.target, "ground-truth records")
        ->required();
    kl_cmd->add_option("--proposal", kl.proposal, "proposal records")
        ->required();
    kl_cmd->add_flag("--gradient", kl.gradient,
                     "emit JSON with the analytic gradient per pair");
    kl_cmd->add_flag("--axis-aligned", kl.axis_aligned,
                     "use the theta==0 fast path (rejects rotated input)");
    kl_cmd->callback([&kl] { run_kl(kl); });

    IouOpts iou;
    auto* iou_cmd = app.add_subcommand(
        "iou", "rasterized (and optional Monte Carlo) overlap per pair");
    iou_cmd->add_option("--a", iou.a, "first record file")->required();
    iou_cmd->add_option("--b", iou.b, "second record file")->required();
    iou_cmd->add_option("--cells", iou.cells,
                        "cells along the longer union-bbox side (>= 64)");
    iou_cmd->add_option("--mc-samples", iou.mc_samples,
                        "Monte Carlo samples (0 = raster only, else >= 1e4)");
    iou_cmd->add_option("--seed", iou.seed, "Monte Carlo seed");
    iou_cmd->add_option("--dump-masks", iou.dump_masks,
                        "write PREFIX_<pair>_{a,b}.pgm rasterizations");
    iou_cmd->callback([&iou] { run_iou(iou); });

    CodecOpts enc;
    auto* enc_cmd = app.add_subcommand(
        "encode", "ellipse records -> anchor-relative offsets");
    enc_cmd->add_option("--in", enc.in, "ellipse records")->required();
    enc_cmd->add_option("--anchor", enc.anchor, "anchor as cx,cy,w,h")
        ->required()
        ->delimiter(',')
        ->expected(4);
    enc_cmd->callback([&enc] { run_encode(enc); });

    CodecOpts dec;
    auto* dec_cmd = app.add_subcommand(
        "decode", "anchor-relative offsets -> ellipse records");
    dec_cmd->add_option("--in", dec.in, "encoded records")->required();
    dec_cmd->add_option("--anchor", dec.anchor, "anchor as cx,cy,w,h")
        ->required()
        ->delimiter(',')
        ->expected(4);
    dec_cmd->callback([&dec] { run_decode(dec); });

    AnchorsOpts anchors;
    auto* anchors_cmd =
        app.add_subcommand("anchors", "enumerate a sliding anchor grid");
    anchors_cmd->add_option("--image-w", anchors.image_w, "image width")
        ->required();
    anchors_cmd->add_option("--image-h", anchors.image_h, "image height")
        ->required();
    anchors_cmd->add_option("--stride", anchors.stride, "cell stride")
        ->required();
    anchors_cmd->add_option("--scales", anchors.scales, "anchor side lengths")
        ->required()
        ->delimiter(',');
    anchors_cmd
        ->add_option("--ratios", anchors.ratios,
                     "height/width shape factors (default 1)")
        ->delimiter(',');
    anchors_cmd->callback([&anchors] { run_anchors(anchors); });

    NmsOpts nms;
    auto* nms_cmd = app.add_subcommand(
        "nms", "greedy same-image suppression of scored records");
    nms_cmd->add_option("--in", nms.in, "detection records")->required();
    nms_cmd->add_option("--iou", nms.iou, "suppression threshold in (0, 1]")
        ->required();
    nms_cmd->add_option("--metric", nms.metric, "overlap metric")
        ->check(CLI::IsMember({"box", "ellipse"}));
    nms_cmd->add_option("--cells", nms.cells,
                        "raster resolution for --metric ellipse");
    nms_cmd->callback([&nms] { run_nms(nms); });

    SynthOpts synth;
    auto* synth_cmd = app.add_subcommand(
        "synth", "sample ground-truth scenes (and optional detections)");
    synth_cmd->add_option("--images", synth.images, "number of images")
        ->required();
    synth_cmd->add_option("--seed", synth.seed, "scene seed");
    synth_cmd->add_option("--image-w", synth.image_w, "image width");
    synth_cmd->add_option("--image-h", synth.image_h, "image height");
    synth_cmd->add_option("--min-lesions", synth.min_lesions,
                          "fewest lesions per image");
    synth_cmd->add_option("--max-lesions", synth.max_lesions,
                          "most lesions per image");
    synth_cmd->add_option("--semi-major-min", synth.semi_major_min,
                          "log-uniform lower bound");
    synth_cmd->add_option("--semi-major-max", synth.semi_major_max,
                          "log-uniform upper bound");
    synth_cmd->add_option("--aspect-min", synth.aspect_min,
                          "log-uniform lower bound (>= 1)");
    synth_cmd->add_option("--aspect-max", synth.aspect_max,
                          "log-uniform upper bound");
    synth_cmd->add_option("--out", synth.out,
                          "ground-truth records destination");
    synth_cmd->add_option("--dets-out", synth.dets_out,
                          "also run the simulated detector and write here");
    synth_cmd->add_option("--det-seed", synth.det_seed,
                          "detector seed (defaults to --seed)");
    add_corruption_flags(synth_cmd, synth.corruption);
    synth_cmd->callback([&synth] { run_synth(synth); });

    CorruptOpts corrupt;
    auto* corrupt_cmd = app.add_subcommand(
        "corrupt", "simulated detector over existing ground truths");
    corrupt_cmd->add_option("--in", corrupt.in, "ground-truth records")
        ->required();
    corrupt_cmd->add_option("--out", corrupt.out, "detections destination");
    corrupt_cmd->add_option("--seed", corrupt.corruption.seed,
                            "detector seed");
    add_corruption_flags(corrupt_cmd, corrupt.corruption);
    corrupt_cmd->callback([&corrupt] { run_corrupt(corrupt); });

    FitOpts fit;
    auto* fit_cmd = app.add_subcommand(
        "fit", "gradient-descend one proposal onto one target");
    fit_cmd->add_option("--target", fit.target, "single-record target file")
        ->required();
    fit_cmd->add_option("--init", fit.init, "single-record starting proposal")
        ->required();
    fit_cmd->add_option("--loss", fit.loss, "objective")
        ->check(CLI::IsMember({"kl", "regression"}));
    fit_cmd->add_option("--space", fit.space,
                        "parameter space for the KL loss")
        ->check(CLI::IsMember({"raw", "encoded"}));
    fit_cmd->add_option("--anchor", fit.anchor, "anchor as cx,cy,w,h")
        ->delimiter(',')
        ->expected(4);
    fit_cmd->add_option("--lr", fit.lr, "learning rate");
    fit_cmd->add_option("--max-iters", fit.max_iters, "iteration budget");
    fit_cmd->add_option("--eps", fit.eps, "stop when a step improves less");
    fit_cmd->add_option("--trace-cells", fit.trace_cells,
                        "per-step IoU resolution (0 disables)");
    fit_cmd->add_option("--final-cells", fit.final_cells,
                        "final IoU resolution");
    fit_cmd->add_option("--trace-out", fit.trace_out,
                        "write accepted steps as records here");
    fit_cmd->callback([&fit] { run_fit(fit); });

    CompareOpts compare;
    auto* compare_cmd = app.add_subcommand(
        "compare",
        "KL vs regression fits on synthetic targets, shared inits");
    compare_cmd->add_option("--n", compare.n, "number of targets")
        ->required();
    compare_cmd->add_option("--seed", compare.seed, "target sampling seed");
    compare_cmd->add_option("--threads", compare.threads, "worker threads");
    compare_cmd->add_option("--lr", compare.lr, "learning rate");
    compare_cmd->add_option("--max-iters", compare.max_iters,
                            "iteration budget per fit");
    compare_cmd->add_option("--semi-major-min", compare.semi_major_min,
                            "target size lower bound");
    compare_cmd->add_option("--semi-major-max", compare.semi_major_max,
                            "target size upper bound");
    compare_cmd->add_option("--aspect-min", compare.aspect_min,
                            "target aspect lower bound");
    compare_cmd->add_option("--aspect-max", compare.aspect_max,
                            "target aspect upper bound");
    compare_cmd->add_option("--out", compare.out, "per-target CSV");
    compare_cmd->add_option("--angle-table", compare.angle_table,
                            "aspect-binned angle-error CSV");
    compare_cmd->callback([&compare] { run_compare(compare); });

    FrocOpts froc;
    auto* froc_cmd = app.add_subcommand(
        "froc", "sensitivity at false-positive budgets");
    froc_cmd->add_option("--dets", froc.dets, "detection records")
        ->required();
    froc_cmd->add_option("--gts", froc.gts, "ground-truth records")
        ->required();
    froc_cmd->add_option("--iou", froc.iou, "match threshold");
    froc_cmd->add_option("--fp-grid", froc.fp_grid,
                         "ascending FP-per-image budgets")
        ->delimiter(',');
    froc_cmd->add_option("--cells", froc.cells, "raster resolution");
    froc_cmd->add_option("--curve-out", froc.curve_out,
                         "write every operating point here as CSV");
    froc_cmd->callback([&froc] { run_froc(froc); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const gpn::invalid_input& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const gpn::optimization_diverged& e) {
        std::cerr << "error: " << e.what() << " (initial loss "
                  << e.trace.initial_loss << ")\n";
        return 3;
    } catch (const gpn::error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
