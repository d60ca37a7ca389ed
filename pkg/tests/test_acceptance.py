"""Acceptance criteria 1-12.

Each test prints one ``[PASS]`` or ``[FAIL]`` line; the lines are repeated in
the pytest terminal summary. Run directly with ``python tests/test_acceptance.py``
for the lines alone.
"""

from __future__ import annotations

import math
import sys
import time
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import cascade_filters, naive_block_max, window_energy, wavelet_2d  # noqa: E402
from wvc import synth  # noqa: E402
from wvc.classify import nn_predict, roc_accuracy  # noqa: E402
from wvc.dynamics import (LayerSystem, OscillatorParams, PulseSchedule, count_upward_crossings,  # noqa: E402
                          fn_system, metric_bound_margin, rk4_integrate)
from wvc.feedback import feedback_classify  # noqa: E402
from wvc.ingest import Image, gaussian_downsample  # noqa: E402
from wvc.modelfile import (BadMagicError, ChecksumMismatchError, TruncatedModelError,  # noqa: E402
                           UnsupportedVersionError, dumps, loads)
from wvc.patches import Patch, PatchBank, extract_features, learn_patch_bank  # noqa: E402
from wvc.pipeline import describe, fit, image_c1, predict_images  # noqa: E402
from wvc.pooling import c1_pool  # noqa: E402
from wvc.wavelet import WaveletConfig, compute_s1, orientation_axes, swt_forward  # noqa: E402

RESULTS: dict[int, str] = {}


def _check(n: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] C{n} {title}: {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def _accuracy(model, images, labels) -> float:
    return float(np.mean([p[0] == t for p, t in zip(predict_images(model, images), labels)]))


def _unit(rng, m):
    p = rng.standard_normal((m, m, 3))
    return p / np.linalg.norm(p)


def _bank(values, seed=0):
    patches = tuple(Patch(v.shape[0], v, (0, 1, 0, 0)) for v in values)
    return PatchBank(patches, np.ones(len(patches), bool), seed)


def _wf_direct(f, level, k):
    """Definitional double sum with periodic f, one numpy sum per pixel."""
    psi = wavelet_2d(level, k)
    cy, cx = psi.shape[0] // 2, psi.shape[1] // 2
    h, w = f.shape
    out = np.empty((h, w))
    for v in range(h):
        rows = (v + np.arange(psi.shape[0]) - cy) % h
        for u in range(w):
            cols = (u + np.arange(psi.shape[1]) - cx) % w
            out[v, u] = np.sum(psi * f[np.ix_(rows, cols)])
    return out


def _c2_direct(c1_maps, patch):
    """C2 by visiting every valid placement; ties keep the first."""
    m = patch.shape[1]
    best, where = -np.inf, None
    for j, maps in enumerate(c1_maps, start=1):
        _, h, w = maps.shape
        for v in range(h - m + 1):
            for u in range(w - m + 1):
                s = float(np.sum(maps[:, v : v + m, u : u + m] * patch))
                if s > best:
                    best, where = s, (j, v, u)
    return best, where


def test_c1_s1_oracles():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    cfg = WaveletConfig(levels=3)
    wf_err = 0.0
    for _ in range(10):
        f = rng.random((16, 16))
        raw = swt_forward(Image(f), cfg)
        for j in range(1, 4):
            for k in range(3):
                wf_err = max(wf_err, np.abs(raw.details[j - 1, k] - _wf_direct(f, j, k)).max())
    s1_err = 0.0
    for _ in range(20):
        f = rng.random((32, 32))
        raw = swt_forward(Image(f), cfg)
        s1 = compute_s1(Image(f), cfg)
        for _ in range(5):
            j, k = int(rng.integers(1, 4)), int(rng.integers(3))
            v, u = (int(x) for x in rng.integers(32, size=2))
            lengths = dict(zip(("low", "high"), (len(x) for x in cascade_filters(j))))
            ay, ax = orientation_axes(k)
            e = window_energy(f, v, u, lengths[ay], lengths[ax])
            expect = abs(raw.details[j - 1, k, v, u]) / (e + cfg.epsilon)
            s1_err = max(s1_err, abs(s1.maps[j - 1, k, v, u] - expect))
    dt = time.perf_counter() - t0
    ok = wf_err <= 1e-9 and s1_err <= 1e-9 and dt < 10
    _check(1, "S1 oracles", ok, f"Wf err {wf_err:.2e}, S1 err {s1_err:.2e}, {dt:.1f} s")


def test_c2_c1_s2_oracles():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    pats = [_unit(rng, int(m)) for m in rng.choice([4, 8], 10)]
    bank = _bank(pats)
    c1_err = c2_err = 0.0
    argmax_ok = True
    for _ in range(10):
        s1 = compute_s1(Image(rng.random((64, 64))))
        c1 = c1_pool(s1)
        for j in range(1, 4):
            for k in range(3):
                c1_err = max(c1_err, np.abs(c1.maps[j - 1][k] - naive_block_max(s1.maps[j - 1, k], 2**j)).max())
        fv = extract_features(c1, bank)
        for i, p in enumerate(pats):
            best, where = _c2_direct(c1.maps, p.transpose(2, 0, 1))
            c2_err = max(c2_err, abs(fv.values[i] - best))
            argmax_ok &= (int(fv.level[i]), int(fv.v[i]), int(fv.u[i])) == where
    dt = time.perf_counter() - t0
    ok = c1_err <= 1e-12 and c2_err <= 1e-12 and argmax_ok and dt < 30
    _check(2, "C1/S2/C2 oracles", ok, f"C1 err {c1_err:.2e}, C2 err {c2_err:.2e}, argmax match {argmax_ok}, {dt:.1f} s")


def test_c3_translation():
    rng = np.random.default_rng(303)
    images = [rng.random((64, 64)) for _ in range(20)]
    c1s = [image_c1(Image(f)) for f in images]
    bank = learn_patch_bank(c1s[:5], {4: 10, 8: 10}, seed=3)
    err = 0.0
    for f, c1 in zip(images, c1s):
        a = extract_features(c1, bank, periodic=True).values
        b = extract_features(image_c1(Image(np.roll(f, (8, 8), axis=(0, 1)))), bank, periodic=True).values
        err = max(err, np.abs(a - b).max())
    _check(3, "translation invariance", err <= 1e-12, f"max C2 gap {err:.2e} over 20 images")


def test_c4_illumination():
    rng = np.random.default_rng(404)
    images = [0.1 + 0.4 * rng.random((64, 64)) for _ in range(20)]
    c1s = [image_c1(Image(f)) for f in images]
    bank = learn_patch_bank(c1s[:5], {4: 10, 8: 10}, seed=4)
    rel = 0.0
    for f, c1 in zip(images, c1s):
        a = extract_features(c1, bank).values
        for alpha in (0.5, 2.0):
            b = extract_features(image_c1(Image(alpha * f)), bank).values
            rel = max(rel, (np.abs(a - b) / np.abs(a)).max())
    _check(4, "illumination invariance", rel <= 1e-6, f"max relative C2 gap {rel:.2e}")


def test_c5_scale():
    cfg = WaveletConfig(levels=4)
    rng = np.random.default_rng(3)
    textures = [synth.smooth_texture(128, rng) for _ in range(10)]
    c1s = [image_c1(Image(t), cfg) for t in textures]
    bank = learn_patch_bank(c1s, {4: 25, 8: 25, 12: 25, 16: 25}, seed=0)
    fractions = []
    for t, c1 in zip(textures, c1s):
        a = extract_features(c1, bank).values
        b = extract_features(image_c1(Image(synth.zoom2x(t)), cfg), bank).values
        fractions.append(float(np.mean(np.abs(a - b) / np.abs(a) <= 0.2)))
    worst = min(fractions)
    _check(5, "scale quasi-invariance", worst >= 0.9,
           f"features within 0.2: worst texture {worst:.1%}, mean {np.mean(fractions):.1%}")


def test_c6_roc():
    exact = all(roc_accuracy(x, y, p) == 1 - ((1 - p) * x + p * (1 - y))
                for x in (0.0, 0.25, 0.5, 1.0) for y in (0.0, 0.5, 0.75, 1.0) for p in (0.0, 0.25, 0.5, 1.0))
    h, slope_err = 0.25, 0.0
    for x in (0.0, 0.25, 0.5):
        for y in (0.0, 0.25, 0.5):
            for p in (0.0, 0.25, 0.5, 0.75, 1.0):
                dx = (roc_accuracy(x + h, y, p) - roc_accuracy(x, y, p)) / h
                dy = (roc_accuracy(x, y + h, p) - roc_accuracy(x, y, p)) / h
                slope_err = max(slope_err, abs(dx + (1 - p)), abs(dy - p))
    ok = exact and slope_err <= np.finfo(float).eps
    _check(6, "ROC formula", ok, f"closed form exact {exact}, slope err {slope_err:.1e}")


@pytest.fixture(scope="module")
def textures():
    return synth.texture_corpus(8, seed=1), synth.texture_corpus(8, seed=2)


def test_c7_texture_classification(textures):
    t0 = time.perf_counter()
    (train, train_labels), (test, test_labels) = textures
    model, _ = fit(train, train_labels, seed=0)
    acc = _accuracy(model, test, test_labels)
    dt = time.perf_counter() - t0
    _check(7, "texture classification", acc >= 0.95 and dt < 60, f"accuracy {acc:.1%}, {dt:.1f} s")


def test_c8_selection(textures):
    (train, train_labels), (test, test_labels) = textures
    full, _ = fit(train, train_labels, select_k=None, seed=0)
    sel, _ = fit(train, train_labels, select_k=200, seed=0)
    gap = abs(_accuracy(full, test, test_labels) - _accuracy(sel, test, test_labels))
    c1s = [image_c1(img) for img in test]

    def wall(bank):
        extract_features(c1s[0], bank)
        best = math.inf
        for _ in range(3):
            t0 = time.perf_counter()
            for c1 in c1s:
                extract_features(c1, bank)
            best = min(best, time.perf_counter() - t0)
        return best

    speedup = wall(full.bank) / wall(sel.bank)
    sides = Counter(sel.bank.patches[i].side for i in sel.bank.selected)
    ok = gap <= 0.02 and speedup >= 3
    _check(8, "feature selection", ok,
           f"accuracy gap {gap * 100:.1f} points, speedup {speedup:.2f}x, kept sides {dict(sorted(sides.items()))}")


def test_c9_feedback():
    train, labels = synth.scene_corpus(8, seed=1)
    model, _ = fit(train, labels, seed=0)
    rng = np.random.default_rng(5)
    angles = [90.0 * c / 3 for c in range(4)]
    ff = fb = n = 0
    for s in range(40):
        a, b = (int(x) for x in rng.choice(4, 2, replace=False))
        scene, centres = synth.two_object_scene(synth.grating(112, angles[a], rng), synth.grating(112, angles[b], rng),
                                                256, rng)
        truth = [f"class{a}", f"class{b}"]
        fv, _ = describe(scene, model.bank, model.wavelet)
        single = nn_predict(model, fv)[0]
        ff += sum(single == t for t in truth)
        res = feedback_classify(model, fv, 2, seed=s)
        c = np.array([r.centroid for r in res])
        p = np.array(centres)
        d = ((c[:, None] - p[None]) ** 2).sum(-1)
        order = (0, 1) if d[0, 0] + d[1, 1] <= d[0, 1] + d[1, 0] else (1, 0)
        fb += sum(r.label == truth[order[i]] for i, r in enumerate(res))
        n += 2
    ff_acc, fb_acc = ff / n, fb / n
    _check(9, "feedback improvement", fb_acc > ff_acc and fb_acc >= 0.9,
           f"feedback {fb_acc:.1%} vs feedforward {ff_acc:.1%} over 40 scenes")


def test_c10_resolution(textures):
    (train, train_labels), (test, test_labels) = textures
    model, _ = fit(train, train_labels, seed=0)
    acc = _accuracy(model, [gaussian_downsample(img, 2) for img in test], test_labels)
    _check(10, "resolution transfer", acc >= 0.9, f"accuracy {acc:.1%} on 2x downsampled tiles")


def test_c11_dynamics():
    t0 = time.perf_counter()

    def decay_err(dt):
        _, x = rk4_integrate(lambda t, x: -x, [1.0], 1.0, dt)
        return abs(x[-1, 0] - math.exp(-1))

    ratio = decay_err(0.1) / decay_err(0.05)
    c, k1 = np.array([0.4, -1.1, 2.0]), 1.7
    layers = LayerSystem(c, np.zeros(1), np.zeros(1, int), PulseSchedule(()), k1=k1)
    t, x = rk4_integrate(layers.rhs, layers.initial_state(), 3.0, 1e-3)
    relax = np.abs(x[:, :3] - np.outer(1 - np.exp(-k1 * t), c)).max()
    stated = OscillatorParams(1.0, 1.0, 1.0, 1.5)
    _, xs = rk4_integrate(fn_system(stated), [0.0, 0.0], 100.0, 0.01)
    spikes = count_upward_crossings(xs[:, 0], 1.0)
    margin = metric_bound_margin(OscillatorParams(1.0, 1.0, 1.0), np.round(np.arange(-300, 301) * 0.01, 10))
    dt = time.perf_counter() - t0
    ok = 14 <= ratio <= 18 and relax <= 1e-6 and spikes >= 3 and margin <= 0 and dt < 20
    _check(11, "dynamics", ok,
           f"RK4 ratio {ratio:.2f}, relaxation err {relax:.1e}, FN spikes {spikes} (need 3), "
           f"margin {margin:.3f}, {dt:.1f} s")


def test_c12_persistence():
    images, labels = synth.texture_corpus(3, 64, seed=9)
    a, _ = fit(images, labels, counts={4: 15, 8: 15}, select_k=20, seed=11)
    b, _ = fit(images, labels, counts={4: 15, 8: 15}, select_k=20, seed=11)
    data = dumps(a)
    identical = data == dumps(b)
    again = loads(data)
    same_preds = predict_images(a, images) == predict_images(again, images)
    cases = {"truncated": (data[:-3], TruncatedModelError), "magic": (b"ABCD" + data[4:], BadMagicError),
             "version": (data[:4] + (99).to_bytes(4, "little") + data[8:], UnsupportedVersionError)}
    flipped = bytearray(data)
    flipped[len(data) // 2] ^= 0x01
    cases["checksum"] = (bytes(flipped), ChecksumMismatchError)
    typed = []
    for name, (blob, err) in cases.items():
        try:
            loads(blob)
        except err:
            typed.append(name)
        except Exception:  # noqa: BLE001
            pass
    ok = identical and same_preds and len(typed) == len(cases)
    _check(12, "determinism and persistence", ok,
           f"byte-identical {identical}, predictions preserved {same_preds}, typed errors {len(typed)}/{len(cases)}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
