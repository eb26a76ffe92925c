#!/usr/bin/env python3
"""Sweep hidden dimension and encoder depth on synthetic data.

Reports best validation MSE/MAE, parameter count, and mean epoch seconds
per grid point. The depth sweep typically bottoms out around two layers;
more layers overfit at this data scale.
"""

import argparse
import sys

import numpy as np

from lightweather.data import split_windows
from lightweather.model import ModelConfig, init_params, normalize_coords, parameter_count
from lightweather.synthetic import SynthConfig, generate, random_station_coords
from lightweather.training import TrainConfig, fit


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--d-list", default="16,32,64")
    parser.add_argument("--layers-list", default="1,2,3,4")
    parser.add_argument("--stations", type=int, default=10)
    parser.add_argument("--steps", type=int, default=3000)
    parser.add_argument("--epochs", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    synth = SynthConfig(
        n_stations=args.stations, n_steps=args.steps, alpha=(0.2, 0.1),
        noise_std=0.8, seed=args.seed,
    )
    _, coords = random_station_coords(args.stations, args.seed)
    obs = generate(synth, coords)
    prepared = split_windows(obs, 48, 24)
    cn = normalize_coords(obs.coords)

    print(f"{'d':>6}{'layers':>8}{'val_mse':>12}{'val_mae':>12}{'params':>10}{'s/epoch':>10}")
    for d in (int(x) for x in args.d_list.split(",")):
        for n_layers in (int(x) for x in args.layers_list.split(",")):
            cfg = ModelConfig(d=d, n_layers=n_layers, t_h=48, t_f=24, n_vars=1)
            result = fit(
                init_params(cfg, args.seed),
                prepared.train,
                prepared.val,
                cn,
                TrainConfig(max_epochs=args.epochs, patience=args.epochs, seed=args.seed),
                prepared.normalizer,
            )
            best = result.history[result.best_epoch]
            secs = float(np.mean([h["seconds"] for h in result.history]))
            print(
                f"{d:>6}{n_layers:>8}{best['val_mse']:>12.5f}{best['val_mae']:>12.5f}"
                f"{parameter_count(cfg):>10}{secs:>10.2f}"
            )
    return 0


if __name__ == "__main__":
    sys.exit(main())
