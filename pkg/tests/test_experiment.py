import numpy as np
import pytest

from mammotex.descriptors import GROUPS, DescriptorVector
from mammotex.errors import IncompleteReport, TooFewSamples
from mammotex.experiment import (ARCHITECTURES, ExperimentReport, GroupResult, SplitSpec, run_study,
                                 select_best, split, split_indices)
from mammotex.glcm import GlcmConfig, compute_glcm, glcm_features
from mammotex.manifest import read_manifest
from mammotex.mlp import LayerSizes, TrainOutcome, hidden_units_rule1, hidden_units_rule2
from mammotex.pgm_io import read_pgm
from mammotex.synthetic import generate_synthetic_corpus


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    return generate_synthetic_corpus(50, 64, 7, out)


@pytest.fixture(scope="module")
def report(corpus):
    return run_study(corpus)


def labeled(n_benign, n_malignant):
    labels = ["benign"] * n_benign + ["malignant"] * n_malignant
    return [DescriptorVector(None, [float(k)], lab, f"r{k}") for k, lab in enumerate(labels)]


def test_split_fifty_rows_gives_40_10():
    rows = labeled(27, 23)
    tr, te = split(rows, SplitSpec(0.8, True, 1))
    assert (len(tr), len(te)) == (40, 10)
    ids = {r.source_id for r in tr} | {r.source_id for r in te}
    assert ids == {r.source_id for r in rows} and not {r.source_id for r in tr} & {r.source_id for r in te}
    n_mal = sum(r.label == "malignant" for r in tr)
    assert abs(n_mal - 0.8 * 23) <= 1 and abs((40 - n_mal) - 0.8 * 27) <= 1


def test_split_deterministic_and_seeded():
    labels = ["benign"] * 27 + ["malignant"] * 23
    assert split_indices(labels, SplitSpec(seed=5)) == split_indices(labels, SplitSpec(seed=5))
    assert split_indices(labels, SplitSpec(seed=5)) != split_indices(labels, SplitSpec(seed=6))


@pytest.mark.parametrize("n_b, n_m, frac", [(5, 5, 0.8), (3, 9, 0.5), (2, 2, 0.7), (13, 40, 0.9)])
def test_split_stratification(n_b, n_m, frac):
    labels = ["benign"] * n_b + ["malignant"] * n_m
    tr, te = split_indices(labels, SplitSpec(frac, True, 0))
    assert sorted(tr + te) == list(range(n_b + n_m))
    for lab, n in (("benign", n_b), ("malignant", n_m)):
        k = sum(labels[i] == lab for i in tr)
        assert abs(k - frac * n) <= 1 and 1 <= k < n


def test_split_unstratified():
    tr, te = split_indices(["benign"] * 10, SplitSpec(0.8, False, 0))
    assert len(tr) == 8 and len(te) == 2


def test_split_too_few():
    with pytest.raises(TooFewSamples):
        split_indices(["benign"] * 5 + ["malignant"], SplitSpec())


def outcome(r, epochs, converged=None):
    conv = epochs < 5000 if converged is None else converged
    return TrainOutcome(epochs, 1e-5 if conv else 1e-2, conv, r, r)


def hand_report(entries):
    """entries: {(gid, arch): (r, epochs)}; missing pairs get (0.9, 5000)."""
    results = []
    for g in GROUPS:
        for arch, rule in ARCHITECTURES.items():
            r, e = entries.get((g.id, arch), (0.9, 5000))
            sizes = LayerSizes.for_rule(g.dimension, rule)
            results.append(GroupResult(g.id, arch, sizes, outcome(r, e)))
    return ExperimentReport(results, {})


def test_select_conjunction_and_cap():
    rep = hand_report({(3, "MLP-1"): (1.0, 398), (3, "MLP-2"): (1.0, 110),
                       (2, "MLP-1"): (1.0, 300),
                       (5, "MLP-1"): (1.0, 200), (5, "MLP-2"): (1.0, 1500)})
    assert select_best(rep) == (3,)


def test_select_needs_convergence():
    rep = hand_report({})
    for r in rep.results:
        if r.group_id == 4:
            r.outcome = TrainOutcome(100, 0.5, False, 1.0, 1.0)
    assert select_best(rep) == ()


def test_select_monotone_in_cap_and_tolerance(rng):
    entries = {(g.id, a): (float(rng.choice([1.0, 0.9995, 0.998, 0.9])), int(rng.integers(1, 2000)))
               for g in GROUPS for a in ARCHITECTURES}
    rep = hand_report(entries)
    caps = [2000, 1500, 1000, 500, 100]
    tols = [1e-2, 1e-3, 1e-4]
    for tol in tols:
        prev = None
        for cap in caps:
            cur = set(select_best(rep, cap, tol))
            assert prev is None or cur <= prev
            prev = cur
    for cap in caps:
        sets = [set(select_best(rep, cap, tol)) for tol in tols]
        assert sets[2] <= sets[1] <= sets[0]


def test_select_incomplete():
    rep = hand_report({})
    rep.results = rep.results[:-1]
    with pytest.raises(IncompleteReport):
        select_best(rep)


def test_synthetic_corpus_contract(corpus, tmp_path):
    entries = read_manifest(corpus)
    assert len(entries) == 50
    assert sum(e.label == "benign" for e in entries) == 25
    for e in entries:
        img = read_pgm(e.path)
        assert (img.width, img.height) == (64, 64)
    again = generate_synthetic_corpus(50, 64, 7, tmp_path)
    for e in entries:
        assert (tmp_path / e.path.name).read_bytes() == e.path.read_bytes()
    assert again.read_bytes() == corpus.read_bytes()


def test_synthetic_stripe_contrast(corpus):
    contrast = {"benign": [], "malignant": []}
    for e in read_manifest(corpus):
        f = glcm_features(compute_glcm(read_pgm(e.path), 90, GlcmConfig()))
        contrast[e.label].append(f.contrast)
    assert np.mean(contrast["malignant"]) > np.mean(contrast["benign"])


def test_synthetic_rejects_bad_counts(tmp_path):
    with pytest.raises(ValueError):
        generate_synthetic_corpus(9, 64, 0, tmp_path)
    with pytest.raises(ValueError):
        generate_synthetic_corpus(11, 64, 0, tmp_path)


def test_report_shape(report):
    assert len(report.results) == 18
    for r in report.results:
        dim = next(g.dimension for g in GROUPS if g.id == r.group_id)
        rule = hidden_units_rule1 if r.architecture == "MLP-1" else (lambda n: hidden_units_rule2(n, 1))
        assert r.sizes == LayerSizes(dim, rule(dim), 1)
    assert set(report.selected) <= set(range(1, 10))
    assert 3 in report.selected


def test_report_deterministic(corpus, report):
    again = run_study(corpus)
    assert again.to_csv() == report.to_csv() and again.to_text() == report.to_text()


def test_report_csv_selected_column(report):
    lines = report.to_csv().splitlines()
    assert lines[0] == "group,arch,input,hidden,epochs,mse,r_train,r_test,converged,selected"
    flagged = {int(l.split(",")[0]) for l in lines[1:] if l.endswith(",true")}
    assert flagged == set(report.selected)


def test_report_text_echoes_config(report):
    text = report.to_text()
    assert '"learning_rate": 0.3' in text and '"momentum": 0.9' in text and "epochs < 1000" in text


def test_failed_extraction_is_recorded(corpus, tmp_path):
    bad = tmp_path / "manifest.csv"
    lines = corpus.read_text().splitlines()
    (tmp_path / "broken.pgm").write_bytes(b"P5\n64 64\n255\n\x00")
    bad.write_text("\n".join(lines + [f"{corpus.parent / 'missing.pgm'},benign", f"{tmp_path / 'broken.pgm'},malignant"]) + "\n")
    entries = read_manifest(bad, corpus.parent)
    # absolute paths override the image dir
    rep = run_study(entries)
    assert len(rep.results) == 18 and len(rep.failures) == 2


def test_figures_render(report, tmp_path):
    import copy
    from mammotex.plotting import render_report_figures
    report = copy.deepcopy(report)
    report.results[0].outcome = None
    report.results[0].error = "NonFiniteLoss: boom"
    paths = render_report_figures(report, tmp_path)
    assert [p.name for p in paths] == ["regression.png", "epochs.png"]
    assert all(p.read_bytes().startswith(b"\x89PNG") for p in paths)
    assert "FAILED: NonFiniteLoss" in report.to_text()
    assert ",nan,nan,nan,false," in report.to_csv()
