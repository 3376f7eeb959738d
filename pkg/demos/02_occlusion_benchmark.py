"""Occlusion benchmark: part fusion vs. a whole-body detector.

Generates synthetic street scenes where obstacles hide pedestrians'
legs, runs both detector styles through the evaluator, and prints the
AP gap at a sweep of occlusion rates. The simulated whole-body detector
loses confidence (and eventually the detection) as a body disappears
behind an occluder, while heads usually stay visible -- so restoring
bodies from parts holds up much better.

Everything is seeded; rerunning prints identical numbers.

Run:  python3 demos/02_occlusion_benchmark.py
"""

from pedfuse import SceneConfig, evaluate_run, generate_scenes, run_pipeline

N_SCENES = 40
SEED = 7


def benchmark(rate):
    cfg = SceneConfig(n_pedestrians=5, occlusion_rate=rate, noise_eta=0.02,
                      seed=SEED)
    scenes = generate_scenes(cfg, N_SCENES)
    gts = [g for s in scenes for g in s.body_gts]
    part_dets = [d for s in scenes for d in s.part_dets]
    body_dets = [d for s in scenes for d in s.body_dets]

    fused = run_pipeline(part_dets)
    ffm_ap = evaluate_run(fused, gts).mean_ap
    base_ap = evaluate_run(body_dets, gts).mean_ap
    return ffm_ap, base_ap


def main():
    print(f"{N_SCENES} scenes x 5 pedestrians, seed {SEED}, conf noise 0.02\n")
    print(f"{'occl rate':>9}  {'body-only AP':>12}  {'part-fusion AP':>14}  {'gap':>7}")
    for rate in (0.0, 0.2, 0.4, 0.6, 0.8):
        ffm_ap, base_ap = benchmark(rate)
        print(f"{rate:9.1f}  {base_ap:12.4f}  {ffm_ap:14.4f}  {ffm_ap - base_ap:+7.4f}")

    print("\nAt rate 0 the two are tied (nothing is hidden, both detectors see")
    print("everything). As occluders cover more lower bodies, the body-only")
    print("detector's AP falls away while fusion keeps recovering pedestrians")
    print("from their still-visible heads.")


if __name__ == "__main__":
    main()
