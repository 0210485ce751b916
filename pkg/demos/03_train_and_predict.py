"""Train the shipped toy preset through the library API and poke the model.

Run:  python3 demos/03_train_and_predict.py
"""
import tempfile
from pathlib import Path

from codemix import cli, metrics, models


def main():
    cfg = cli._effective_config(cli.resolve_config("toy"), None)
    with tempfile.TemporaryDirectory() as tmp:
        model, (train_ds, dev_ds, test_ds), run_dir, _ = cli._run_training(
            cfg, Path(tmp))

        print("epoch  train_loss  dev_accuracy")
        for h in model.history:
            print(f"{h.epoch + 1:>5}  {h.train_loss:>10.4f}  {h.dev_accuracy:>12.3f}")
        print(f"best kept epoch: {model.best_epoch + 1}\n")

        preds = models.predict_dataset(model, test_ds)
        golds = [c.gold_label for c in test_ds.comments]
        print("held-out test report:")
        print(metrics.evaluate(golds, preds).render_text())

        for text in ("nafrat bakwas gussa chai", "pyar sundar mast chai"):
            label, probs = models.predict(model, text, language="hinglish")
            shown = {k: round(v, 3) for k, v in probs.items()}
            print(f"\n{text!r} -> {label}  probs={shown}")


if __name__ == "__main__":
    main()
