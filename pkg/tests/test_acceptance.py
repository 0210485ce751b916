"""Acceptance gate: one test per shipped guarantee.

Each test states its tolerance inline. These deliberately re-check ground
covered by the unit suites, end to end and in one place.
"""
import csv
import json
import os
import random
import signal
import socket
import subprocess
import sys
import time
import urllib.error
import urllib.request
from pathlib import Path

import pytest
import torch

from codemix import cli, corpus, metrics, models, preprocess, tokenizer
from codemix.models import ClassifierConfig
from helpers_oracles import (oracle_confusion, oracle_kappa, oracle_scores,
                             oracle_wordpiece)
from helpers_textgen import random_line
from test_models import numeric_grad_check

REPO_ROOT = Path(__file__).parent.parent
SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]"]

TABLE2_INPUT = (
    "@amitshah You can't change the minds of such small minded people who are "
    "stuck in the past, they just don't understand logics.#IndiaAgainstCAA \U0001F92C"
)
TABLE2_GOLDEN = (
    "you cannot change mind small minded people stuck past understand logic "
    "facewithsymbolsonmouth"
)
TABLE3_INPUT = (
    "@narendramodi मेरा देश BHAI hate ni pyar "
    "phailata ha or jo pyar se nhi manta wo use ache se samjhate hain!! "
    "\U0001F914 https://twitter.com/4948747235330"
)
TABLE3_GOLDEN = "meraa desh hate ni pyar phailata pyar nhi manta ache samjhate hain"


def test_golden_preprocessing_under_one_second():
    start = time.monotonic()
    english = preprocess.run_pipeline_english(TABLE2_INPUT)
    hinglish = preprocess.run_pipeline_hinglish(TABLE3_INPUT)
    elapsed = time.monotonic() - start
    assert english == TABLE2_GOLDEN
    assert hinglish == TABLE3_GOLDEN
    assert elapsed < 1.0, f"golden preprocessing took {elapsed:.3f}s"


def test_pipeline_idempotence_1000_lines_per_language():
    rng = random.Random(20260817)
    failures = []
    for language, run in (("english", preprocess.run_pipeline_english),
                          ("hinglish", preprocess.run_pipeline_hinglish)):
        for i in range(1000):
            line = random_line(rng, language)
            once = run(line)
            twice = run(once)
            if twice != once:
                failures.append((language, i, line, once, twice))
    assert not failures, f"{len(failures)} idempotence failures: {failures[:3]}"


def test_transliteration_totality_and_example():
    for cp in range(0x0900, 0x0980):
        out = preprocess.transliterate_devanagari(chr(cp))
        assert out.isascii(), f"U+{cp:04X} left non-ASCII output {out!r}"
    assert preprocess.transliterate_devanagari("मेरा देश") == "meraa desh"


def test_tokenizer_oracle_and_reference_segmentations(tmp_path):
    vocab_path = tmp_path / "toy-vocab.txt"
    pieces = ["ka", "##am", "##rna", "he", "kaam", "karna", "kar", "##na",
              "##m", "k", "##a", "na"]
    vocab_path.write_text("\n".join(SPECIALS + pieces) + "\n", encoding="utf-8")
    vocab = tokenizer.load_vocab(vocab_path)
    rng = random.Random(7)
    alphabet = "kamrnhe"
    for _ in range(1000):
        word = "".join(rng.choice(alphabet)
                       for _ in range(rng.randint(1, 12)))
        assert tokenizer.wordpiece_tokenize(word, vocab) == \
            oracle_wordpiece(word, SPECIALS + pieces)

    multi_path = tmp_path / "multi.txt"
    multi_path.write_text("\n".join(SPECIALS + ["kaam", "karna", "he"]) + "\n")
    multi = tokenizer.load_vocab(multi_path)
    mono_path = tmp_path / "mono.txt"
    mono_path.write_text("\n".join(SPECIALS + ["ka", "##am", "##rna", "he"]) + "\n")
    mono = tokenizer.load_vocab(mono_path)
    assert tokenizer.encode("kaam karna he", multi, max_len=75).tokens[1:4] == \
        ["kaam", "karna", "he"]
    assert tokenizer.encode("kaam karna he", mono, max_len=75).tokens[1:6] == \
        ["ka", "##am", "ka", "##rna", "he"]

    for max_len in (100, 75):
        for n_words in (0, 1, 40, 300):
            text = " ".join(rng.choice(["kaam", "karna", "he", "zzq"])
                            for _ in range(n_words))
            seq = tokenizer.encode(text, multi, max_len=max_len)
            assert len(seq.ids) == max_len
            assert len(seq.mask) == max_len


def test_metrics_against_counting_oracle():
    rng = random.Random(99)
    labels = ("hate", "not_hate")
    golds = [rng.choice(labels) for _ in range(1000)]
    preds = [rng.choice(labels) for _ in range(1000)]
    matrix = metrics.confusion(golds, preds)
    assert matrix == oracle_confusion(golds, preds, labels)
    report = metrics.scores(matrix)
    expected = oracle_scores(matrix)
    assert report.accuracy == pytest.approx(expected["accuracy"], abs=1e-9)
    assert report.weighted_recall == pytest.approx(expected["weighted_recall"],
                                                   abs=1e-9)
    assert report.weighted_f1 == pytest.approx(expected["weighted_f1"], abs=1e-9)
    for i, label in enumerate(labels):
        cls = report.per_class[label]
        ref = expected["per_class"][i]
        assert cls.precision == pytest.approx(ref["precision"], abs=1e-9)
        assert cls.recall == pytest.approx(ref["recall"], abs=1e-9)
        assert cls.f1 == pytest.approx(ref["f1"], abs=1e-9)

    # 5-item worked example: p_o = 0.8, p_e = 0.48
    a = ["hate", "hate", "hate", "not_hate", "not_hate"]
    b = ["hate", "hate", "not_hate", "not_hate", "not_hate"]
    report = metrics.cohen_kappa(a, b)
    assert report.kappa == pytest.approx(0.6153846, abs=1e-6)
    assert report.kappa == pytest.approx(oracle_kappa(a, b)[0], abs=1e-12)

    for _ in range(200):
        m = [[rng.randint(0, 40) for _ in range(2)] for _ in range(2)]
        if sum(map(sum, m)) == 0:
            continue
        r = metrics.scores(m)
        assert r.weighted_recall == pytest.approx(r.accuracy, abs=1e-12)


def test_gradient_checks_all_heads():
    dim = 6
    for head_name in ("cnn", "mlp", "bilstm"):
        cfg = ClassifierConfig(head=head_name, max_len=8,
                               cnn_filters=((2, 3), (3, 2)), mlp_hidden=(5,),
                               bilstm_hidden=4)
        head = models.build_head(cfg, dim, dtype=torch.float64)
        g = torch.Generator().manual_seed(17)
        emb = torch.rand((2, 8, dim), generator=g, dtype=torch.float64)
        mask = torch.ones(2, 8, dtype=torch.float64)
        mask[0, 5:] = 0
        mask[1, 6:] = 0
        target = torch.tensor([0, 1])
        numeric_grad_check(head, emb, mask, target, tol=1e-4)


def test_mask_invariance_bitwise():
    dim = 6
    g = torch.Generator().manual_seed(23)
    emb = torch.rand((3, 10, dim), generator=g)
    mask = torch.ones(3, 10)
    mask[0, 4:] = 0
    mask[1, 7:] = 0
    garbage = emb.clone()
    garbage[mask == 0] = 31337.0
    for head_name in ("cnn", "mlp", "bilstm"):
        cfg = ClassifierConfig(head=head_name, max_len=10,
                               cnn_filters=((2, 3), (3, 2)), mlp_hidden=(5,),
                               bilstm_hidden=4)
        head = models.build_head(cfg, dim)
        with torch.no_grad():
            clean = head(emb, mask)
            dirty = head(garbage, mask)
        assert torch.equal(clean, dirty), f"{head_name} output depends on padding"


def test_toy_training_accuracy_runtime_and_determinism(tmp_path):
    cfg = cli._effective_config(cli.resolve_config("toy"), None)
    assert cfg["embedder"]["weight_source"] == "random_tiny"
    assert cfg["classifier"]["head"] == "cnn"
    assert "cnn_filters" not in cfg["classifier"]  # default CNN config
    assert cfg["classifier"]["epochs"] <= 10

    start = time.monotonic()
    model1, _, _, _ = cli._run_training(cfg, tmp_path / "run1")
    elapsed = time.monotonic() - start
    assert elapsed < 120.0, f"toy training took {elapsed:.1f}s"
    assert max(h.dev_accuracy for h in model1.history) >= 0.95

    model2, _, _, _ = cli._run_training(cfg, tmp_path / "run2")
    assert model1.history == model2.history


def test_flair_export_bit_exact_and_parse_back(tmp_path):
    comments = [
        corpus.Comment(id="a", platform="youtube",
                       raw_text="meraa desh badal\nraha hai",
                       language="hinglish", gold_label="not_hate"),
        corpus.Comment(id="b", platform="twitter", raw_text="nafrat bhari baat",
                       language="hinglish", gold_label="hate"),
    ]
    dataset = corpus.Dataset(comments=comments, name="export-check")
    out = tmp_path / "flair.txt"
    count = corpus.export_flair(dataset, out)
    assert count == 2
    raw = out.read_bytes()
    assert raw == ("__label__not_hate meraa desh badal raha hai\n"
                   "__label__hate nafrat bhari baat\n").encode("utf-8")
    recovered = []
    for line in raw.decode("utf-8").splitlines():
        assert line.startswith("__label__")
        label, text = line[len("__label__"):].split(" ", 1)
        recovered.append((label, text))
    assert recovered == [
        (c.gold_label, c.raw_text.replace("\n", " ")) for c in comments]


def _wait_for_http(url, timeout=20.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        try:
            with urllib.request.urlopen(url, timeout=2) as resp:
                if resp.status == 200:
                    return
        except (urllib.error.URLError, ConnectionError, OSError):
            time.sleep(0.1)
    raise TimeoutError(f"server at {url} never came up")


def _post_json(url, payload):
    req = urllib.request.Request(
        url, data=json.dumps(payload).encode("utf-8"),
        headers={"Content-Type": "application/json"})
    with urllib.request.urlopen(req, timeout=5) as resp:
        return json.loads(resp.read())


def _get_json(url):
    with urllib.request.urlopen(url, timeout=5) as resp:
        return json.loads(resp.read())


def _free_port():
    s = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    return port


def _spawn_server(project_path, port):
    proc = subprocess.Popen(
        [sys.executable, "-m", "codemix.cli", "serve",
         "--project", str(project_path), "--port", str(port)],
        stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
    try:
        _wait_for_http(f"http://127.0.0.1:{port}/api/stats")
    except TimeoutError:
        proc.kill()
        raise
    return proc


def test_annotation_survives_kill_and_restart(tmp_path):
    comments_csv = tmp_path / "comments.csv"
    with open(comments_csv, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(
            f, fieldnames=["id", "platform", "text", "language", "label"])
        writer.writeheader()
        for i in range(25):
            writer.writerow({"id": f"k{i:03d}", "platform": "youtube",
                             "text": f"tippani number {i}",
                             "language": "hinglish", "label": ""})
    project_path = tmp_path / "proj.jsonl"
    assert cli.main(["serve", "--project", str(project_path),
                     "--init", str(comments_csv), "--init-only"]) == 0

    # deterministic label script with disagreements, 50 submissions total
    labels_a = ["hate" if i % 2 == 0 else "not_hate" for i in range(25)]
    labels_b = ["hate" if i % 3 != 0 else "not_hate" for i in range(25)]
    expected = metrics.cohen_kappa(labels_a, labels_b)

    port = _free_port()
    proc = _spawn_server(project_path, port)
    base = f"http://127.0.0.1:{port}"
    try:
        sent = 0
        for annotator, script in (("asha", labels_a), ("bela", labels_b)):
            for i, label in enumerate(script):
                ack = _post_json(f"{base}/api/labels", {
                    "comment_id": f"k{i:03d}", "annotator_id": annotator,
                    "label": label, "language": "hinglish"})
                assert ack["revision"] == 1
                sent += 1
        assert sent == 50
    finally:
        os.kill(proc.pid, signal.SIGKILL)
        proc.wait()

    port2 = _free_port()
    proc2 = _spawn_server(project_path, port2)
    base2 = f"http://127.0.0.1:{port2}"
    try:
        stats = _get_json(f"{base2}/api/stats")
        assert stats["annotators"] == {"asha": 25, "bela": 25}
        assert stats["labeled"] == 25
        agreement = _get_json(f"{base2}/api/agreement?a=asha&b=bela")
        assert agreement["n_items"] == 25
        assert agreement["kappa"] == pytest.approx(expected.kappa, abs=1e-9)
        assert agreement["p_o"] == pytest.approx(
            expected.observed_agreement, abs=1e-9)
    finally:
        os.kill(proc2.pid, signal.SIGKILL)
        proc2.wait()


def _davidson_assets():
    davidson = REPO_ROOT / "data" / "davidson.csv"
    weights_root = os.environ.get("CODEMIX_WEIGHTS", "")
    bertbu = Path(weights_root) / "bertbu" if weights_root else None
    ready = (davidson.is_file() and bertbu is not None
             and (bertbu / "embedder.json").is_file()
             and (bertbu / "vocab.txt").is_file())
    return davidson, ready


def test_davidson_integration_weighted_f1(tmp_path):
    davidson, ready = _davidson_assets()
    if not ready:
        pytest.skip("Davidson corpus or pretrained transformer weights "
                    "not present; integration criterion skipped")

    # collapse the 3-way public labels to binary: hate+offensive vs neither
    collapsed = tmp_path / "davidson-binary.csv"
    with open(davidson, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        rows = []
        for i, row in enumerate(reader):
            text = row.get("tweet") or row.get("text") or ""
            klass = row.get("class", row.get("label", ""))
            label = "hate" if str(klass).strip() in ("0", "1") else "not_hate"
            rows.append({"id": row.get("id", f"d{i}"), "platform": "twitter",
                         "text": text, "language": "english", "label": label})
    with open(collapsed, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(
            f, fieldnames=["id", "platform", "text", "language", "label"])
        writer.writeheader()
        writer.writerows(rows)

    cfg = cli._effective_config(cli.resolve_config("english-bertbu-cnn"), None)
    cfg["dataset"] = str(collapsed)
    model, (_, _, test_ds), _, _ = cli._run_training(cfg, tmp_path / "run")
    preds = models.predict_dataset(model, test_ds)
    golds = [c.gold_label for c in test_ds.comments]
    report = metrics.evaluate(golds, preds)
    assert abs(report.weighted_f1 - 0.93) <= 0.05
