"""Ingest a candle CSV with gaps, repair it, and print return diagnostics."""
import tempfile
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from wflab.data.features import build_features
from wflab.data.klines import fill_gaps, load_klines, write_klines_csv
from wflab.data.stats import descriptive_stats, wasserstein_1d
from wflab.data.windows import make_windows
from wflab.intervals import MS_PER_MINUTE
from wflab.reporting import STATS_HEADER, render_table, stats_row
from wflab.synthetic import make_sine_candles

INTERVAL = 30 * MS_PER_MINUTE

# build a synthetic series, then knock two holes into it
series = make_sine_candles(3000, INTERVAL, period=48, amplitude=0.004, seed=3)
drop = np.r_[500:512, 2000:2003]
columns = {
    f.name: np.delete(getattr(series, f.name), drop)
    for f in fields(series)
    if f.name != "interval_ms"
}
damaged = replace(series, **columns)

workdir = Path(tempfile.mkdtemp(prefix="wflab_demo_"))
csv_path = workdir / "candles.csv"
write_klines_csv(damaged, csv_path)

loaded = load_klines(csv_path, INTERVAL)
dense, gaps = fill_gaps(loaded)
print(f"loaded {len(loaded.candles)} rows, repaired to {len(dense.candles)}")
for gap in gaps:
    print(f"  gap at open_time {gap.start_open_time}: {gap.missing} candles filled")

frame = build_features(dense)
print(f"\nfeature frame: {len(frame)} rows, {frame.num_real} real features")
print("features:", ", ".join(frame.real_names[:8]), "...")

windows = make_windows(
    frame, n_windows=2, in_sample_months=0.5, out_sample_months=0.25
)
rows = [stats_row("full", descriptive_stats(frame.returns))]
for w in windows:
    rows.append(
        stats_row(
            f"w{w.index}_test",
            descriptive_stats(frame.returns[w.test.start : w.test.stop]),
        )
    )
print("\n" + render_table(STATS_HEADER, rows, float_format="%.5g"))

w = windows[0]
train = frame.returns[w.train.start : w.train.stop]
test = frame.returns[w.test.start : w.test.stop]
print(f"train-vs-test Wasserstein distance: {wasserstein_1d(train, test):.3e}")
