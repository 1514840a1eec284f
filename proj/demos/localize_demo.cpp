// End-to-end walkthrough: sample synthetic lesion scenes, run two noisy
// detector passes, merge duplicates with ellipse NMS, score the result
// with a FROC sweep, then race the Gaussian-overlap loss against plain
// coordinate regression on a batch of rotated targets.

#include <cstdio>
#include <vector>

#include <gpn/gpn.hpp>

int main() {
    // 1. Ground truth: 24 images, one to three elongated lesions each.
    gpn::SceneConfig scene;
    scene.seed = 42;
    const auto gts = gpn::generate_scenes(scene, 24);
    std::printf("sampled %zu lesions across 24 images\n", gts.size());

    // 2. Two detector passes with independent noise: misses, jitter, and
    //    about one false alarm per image each. Their union holds near-
    //    duplicate candidates over most lesions.
    gpn::CorruptionConfig noise;
    noise.center_noise_sigma = 0.10;
    noise.axis_noise_sigma = 0.10;
    noise.angle_noise_sigma_deg = 6.0;
    noise.miss_rate = 0.10;
    noise.fp_rate = 1.0;
    noise.seed = 43;
    std::vector<gpn::Detection> raw = gpn::corrupt(gts, noise);
    noise.seed = 44;
    for (const auto& d : gpn::corrupt(gts, noise)) raw.push_back(d);

    // 3. Greedy NMS with the rasterized ellipse overlap merges them.
    const auto dets = gpn::nms(raw, 0.4, gpn::NmsMetric::ellipse, 128);
    std::printf("two passes emitted %zu candidates, %zu after NMS\n",
                raw.size(), dets.size());

    // 4. FROC readout: sensitivity at fixed false-positive budgets.
    const gpn::FrocCurve curve = gpn::froc(dets, gts, 0.3);
    std::printf("\n  fp/image   sensitivity\n");
    for (const gpn::FrocPoint& p : curve.points) {
        std::printf("  %8.2g   %.3f\n", p.avg_fp_per_image, p.sensitivity);
    }
    std::printf("  mean over budgets: %.3f\n", gpn::mean_sensitivity(curve));

    // 5. The loss experiment: both fitters refine every target from the
    //    same start (the inscribed circle of its best anchor) for the same
    //    fifteen-step budget.
    gpn::SceneConfig batch;
    batch.min_lesions = 1;
    batch.max_lesions = 1;
    batch.seed = 7;
    std::vector<gpn::Ellipse> targets;
    for (const auto& g : gpn::generate_scenes(batch, 120)) {
        targets.push_back(g.ellipse);
    }
    const gpn::CompareReport rep =
        gpn::compare(targets, gpn::CompareConfig{});
    const gpn::CompareSummary& s = rep.summary;
    const gpn::AngleErrorBin* elongated = nullptr;
    for (const auto& b : s.angle_bins) {
        if (b.aspect_lo == 2.0) elongated = &b;
    }
    std::printf("\nrefining %d rotated targets for 15 steps each:\n", s.n);
    std::printf(
        "                          mean IoU   IoU >= 0.7   angle err, "
        "aspect 2-3\n");
    std::printf("  Gaussian-overlap loss    %.3f      %2.0f%%         "
                "%4.1f deg median\n",
                s.kl_mean_iou, 100.0 * s.kl_frac_at[1],
                elongated != nullptr ? elongated->kl_median_deg : 0.0);
    std::printf("  coordinate regression    %.3f      %2.0f%%         "
                "%4.1f deg median\n",
                s.reg_mean_iou, 100.0 * s.reg_frac_at[1],
                elongated != nullptr ? elongated->reg_median_deg : 0.0);
    std::printf(
        "\nthe overlap loss couples center, axes, and rotation in one\n"
        "objective, so the same step budget lands closer on elongated\n"
        "targets and recovers their orientation more faithfully\n");
    return 0;
}
