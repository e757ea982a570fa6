#!/usr/bin/env python3
"""Time one training epoch and a forest fit on the default synthetic data.

Handy when judging whether the full 5-fold evaluation is worth launching on
a given machine.
"""

import argparse
import time

import numpy as np

from demandscope.data import encode, labels_array
from demandscope.forest import ForestParams, fit_forest
from demandscope.pipeline import PipelineConfig
from demandscope.preprocess import apply_standardizer, fit_standardizer
from demandscope.spacenet import TrainConfig, train
from demandscope.synth import GeneratorConfig, generate


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--epochs", type=int, default=2)
    args = parser.parse_args()

    config = PipelineConfig()
    result = generate(GeneratorConfig(seed=args.seed))
    matrix = encode(result.dataset)
    labels = labels_array(result.dataset)
    std = apply_standardizer(fit_standardizer(matrix), matrix)

    t0 = time.time()
    fit_forest(std, labels, ForestParams(n_trees=100, max_depth=5, min_samples_split=80, seed=0))
    t_forest = time.time() - t0
    print(f"selection forest (100 trees): {t_forest:.1f}s")

    model_config = config.model_config(seed=0)
    train_config = TrainConfig(epochs=args.epochs, seed=0)
    t0 = time.time()
    train(std.values, np.asarray(labels), model_config, train_config)
    per_epoch = (time.time() - t0) / args.epochs
    print(f"training: {per_epoch:.2f}s/epoch at d={model_config.d_model} on {std.values.shape}")
    print(f"projected 50-epoch run: {50 * per_epoch:.0f}s; "
          f"projected 2x5-fold evaluation: {10 * 50 * per_epoch / 60:.1f}min")


if __name__ == "__main__":
    main()
