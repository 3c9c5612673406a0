"""Build the gazeseg_py extension with cargo, import it and exercise the API.

Usage: python3 python/smoke_test.py
"""

import json
import math
import os
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
TARGET = ROOT / "target" / "python-ext"


def build() -> Path:
    env = dict(os.environ, PYO3_BUILD_EXTENSION_MODULE="1")
    subprocess.run(
        ["cargo", "build", "--release", "-p", "gazeseg-python", "--target-dir", str(TARGET)],
        cwd=ROOT,
        env=env,
        check=True,
    )
    lib = TARGET / "release" / "libgazeseg_py.so"
    if not lib.exists():
        sys.exit(f"extension not found at {lib}")
    return lib


def main() -> None:
    lib = build()
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        shutil.copy(lib, tmp / "gazeseg_py.so")
        sys.path.insert(0, str(tmp))
        import gazeseg_py as g

        # loss and gradient at f = 0
        assert g.eel_loss([0.0, 0.0], [0.5, 0.0], [False, True]) == 2.0
        grad = g.eel_gradient([0.0], [0.25], [False])
        assert math.isclose(grad[0], 0.25 - 0.75), grad

        lab = g.rgb_to_lab(255, 255, 255)
        assert math.isclose(lab[0], 100.0, abs_tol=1e-3), lab

        p = g.diffuse(3, [(0, 1, 0.8), (1, 2, 0.3)], [0.2, 0.4, 0.7], [0], alpha=0.0)
        assert p == [1.0, 0.4, 0.7], p

        m = g.evaluate_pixels([0.9, 0.8, 0.1, 0.2], [True, True, False, False])
        assert m["auc"] == 1.0, m

        cfg = g.PipelineConfig(seed=3, rounds=10, squared_affinity=False)
        assert cfg.seed == 3 and cfg.rounds == 10 and cfg.mode == "eel"
        assert g.PipelineConfig.from_text(cfg.to_text()).to_text() == cfg.to_text()
        try:
            g.PipelineConfig(alpha=1.5)
        except ValueError:
            pass
        else:
            raise AssertionError("alpha outside (0, 1) accepted")

        data = tmp / "data"
        manifest = g.synth(str(data), frames=8, width=80, height=72, radius=10.0, seed=3)
        metrics = g.segment(
            str(manifest), [str(data / "gaze_obs0.csv")], str(tmp / "out"), config=cfg, gt_dir=str(data / "gt")
        )
        assert 0.5 < metrics["auc"] <= 1.0, metrics
        written = json.loads((tmp / "out" / "metrics.json").read_text())
        assert written["auc"] == metrics["auc"]
        print(f"python smoke test ok: AUC {metrics['auc']:.4f}")


if __name__ == "__main__":
    main()
