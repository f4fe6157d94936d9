# Copyright 2024, The SlackBox developers.
"""
Named groups of configurations and a runner that trains and evaluates them.

Every grid is built around a base configuration and changes only the fields that
define its cells, so the cells of a grid are directly comparable.
"""
import dataclasses
from pathlib import Path

from slackbox.losses import LossMode
from slackbox.noise import perturb_dataset
from slackbox.report import write_run
from slackbox.trainer import TrainConfig, evaluate, load_dataset, train

SCALE_VALUES = (0.1, 0.2, 0.3, 0.4)
TAU_VALUES = (0.5, 0.6, 0.7, 0.8)
INTERVAL_VALUES = (2, 5, 10, 20)
NOISE_LEVELS = (0.1, 0.2, 0.3, 0.4)


def derive(base, **changes):
    """
    A copy of a configuration with some fields changed.

    :param base: the configuration to copy; None for the defaults.
    :type base: TrainConfig
    :rtype: TrainConfig
    """
    data = base.to_dict() if base is not None else TrainConfig().to_dict()
    data.update(changes)
    return TrainConfig.from_dict(data)


def component_grid(base=None):
    """
    The four combinations of the monotonicity constraint and label correction.

    :rtype: dict
    """
    return {
        "lb": derive(base, mode="LB", lc_enabled=False, use_clean_labels=False),
        "lc": derive(base, mode="LB", lc_enabled=True, use_clean_labels=False),
        "mc": derive(base, mode="MC", lc_enabled=False, use_clean_labels=False),
        "mc-lc": derive(base, mode="MC", lc_enabled=True, use_clean_labels=False),
    }


def strategy_grid(base=None):
    """
    The treatments of the unconfident region without label correction, with the
    clean-label upper bound as reference.

    :rtype: dict
    """
    grid = {"ub": derive(base, mode="LB", lc_enabled=False, use_clean_labels=True)}
    for mode in LossMode:
        grid[str(mode).lower()] = derive(
            base, mode=str(mode), lc_enabled=False, use_clean_labels=False
        )
    return grid


def hyperparameter_sweep(base=None):
    """
    One-at-a-time variations of ``lambda0``, ``tau`` and ``interval_epochs`` of the
    full method. Intervals longer than the run are left out.

    :rtype: dict
    """
    full = derive(base, mode="MC", lc_enabled=True, use_clean_labels=False)
    grid = {}
    for value in SCALE_VALUES:
        grid[f"lambda0-{value}"] = derive(full, lambda0=value)
    for value in TAU_VALUES:
        grid[f"tau-{value}"] = derive(full, tau=value)
    for value in INTERVAL_VALUES:
        if value <= full.epochs:
            grid[f"interval-{value}"] = derive(full, interval_epochs=value)
    return grid


def noise_sweep(base=None, sigmas=NOISE_LEVELS):
    """
    The lower bound and the full method at several noise levels.

    :rtype: dict
    """
    grid = {}
    for sigma in sigmas:
        grid[f"lb-sigma-{sigma}"] = derive(
            base, mode="LB", lc_enabled=False, use_clean_labels=False, sigma=sigma
        )
        grid[f"mc-lc-sigma-{sigma}"] = derive(
            base, mode="MC", lc_enabled=True, use_clean_labels=False, sigma=sigma
        )
    return grid


GRIDS = {
    "components": component_grid,
    "strategies": strategy_grid,
    "hyperparameters": hyperparameter_sweep,
    "noise": noise_sweep,
}


def relabel(samples, config, image_sizes=None):
    """
    Samples whose noisy boxes are drawn anew from their clean boxes with the noise
    settings of ``config``.

    :rtype: list
    """
    clean = [(sample.image_id, sample.clean_boxes) for sample in samples]
    if image_sizes is None:
        image_sizes = {sample.image_id: sample.image.shape for sample in samples}
    noisy = dict(perturb_dataset(clean, config.noise, image_sizes))
    return [
        dataclasses.replace(sample, noisy_boxes=noisy[sample.image_id])
        for sample in samples
    ]


def run_grid(
    configs, train_manifest, test_manifest, out_root, seeds=(0,), progress=False
):
    """
    Trains, evaluates and writes one run directory per configuration and seed.

    The noisy training boxes of every run are drawn from the clean boxes with the
    run's own noise settings, so noise levels can differ between cells.

    :param configs: ``name -> TrainConfig``.
    :type configs: dict
    :param train_manifest: the training set.
    :type train_manifest: DatasetManifest, str, os.PathLike
    :param test_manifest: the test set.
    :type test_manifest: DatasetManifest, str, os.PathLike
    :param out_root: runs go to ``out_root/name/seed-k``.
    :type out_root: str, os.PathLike
    :param seeds: the training seeds of each configuration.
    :type seeds: tuple
    :returns: the run directories, in order.
    :rtype: list
    """
    train_samples = load_dataset(train_manifest)
    test_samples = load_dataset(test_manifest)
    run_dirs = []
    for name, config in configs.items():
        samples = relabel(train_samples, config)
        for seed in seeds:
            run_config = derive(config, seed=seed)
            report = train(run_config, samples, progress=progress)
            report.eval_records = evaluate(
                report.params,
                test_samples,
                run_config.threshold,
                run_config.hd_percentile,
            )
            run_dirs.append(write_run(report, Path(out_root) / name / f"seed-{seed}"))
    return run_dirs
