"""How much of a squeezed picture could pure noise have produced?

We fit a time-varying AR(2) model to one noise record, resample it many times,
and ask two questions of the resampled |SST| surfaces:

* where does a 95% envelope of |SST| lie (bands), and
* above which level is a cell unlikely to be noise (threshold)?

A fresh record from the same process should poke above the threshold at about
5% of cells, and fall inside the bands at about 95%.

    python3 demos/02_noise_bands.py [out_dir]
"""

import math
import sys
from pathlib import Path

import numpy as np

from sstboot.fileio import write_png
from sstboot.pipeline import PipelineConfig
from sstboot.simgen import gen_ahm, gen_null
from sstboot.tvar import fit_tvar
from sstboot.uq import apply_threshold, bootstrap_bands, default_spec, noise_threshold

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(parents=True, exist_ok=True)

n, d, reps = 2048, 256, 100
rate = math.sqrt(n)
pipe = PipelineConfig(d=d).build(rate)
spec = default_spec(n, d, n_boot=reps)

model = fit_tvar(gen_null(n, seed=1).samples, b=2, m=4)
print("fitted AR coefficients at u = 0, 0.5, 1:")
print(np.round(model.phi([0.0, 0.5, 1.0]), 3))

thr = noise_threshold(model, spec, pipe, n, rate, seed=11)
bands = bootstrap_bands(None, model, spec, pipe, n=n, rate_hz=rate, seed=12)

w = pipe.window.m
_, fresh = pipe.transform(gen_null(n, seed=2))
mag = np.abs(fresh.values)[w:n - w]
print(f"fresh noise above threshold: {np.mean(mag >= thr[w:n - w]):.1%} of cells")
inside = (mag >= bands.lower[w:n - w]) & (mag <= bands.upper[w:n - w])
print(f"fresh noise inside the 95% bands: {np.mean(inside):.1%} of cells")

# Now add an oscillation: thresholding should keep its ridge and drop most noise.
sig = gen_ahm(n, seed=4)
_, s = pipe.transform(sig.f.with_samples(sig.f.samples + gen_null(n, seed=5).samples))
kept = apply_threshold(s, thr)
alive = np.abs(kept.values) > 0
freqs = pipe.grid.freqs_hz
on_ridge = np.abs(freqs[None, :] - sig.inst_freq[:, None]) <= 0.5
print(f"cells kept near the oscillation: {alive[on_ridge].mean():.0%}; elsewhere: {alive[~on_ridge].mean():.1%}")

write_png(out / "sst_noisy.png", np.abs(s.values), "gray", "log1p")
write_png(out / "sst_kept.png", np.abs(kept.values), "gray", "log1p")
print(f"before/after pictures in {out}/")
