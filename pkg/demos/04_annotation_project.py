"""Drive an annotation project end to end without the HTTP layer.

Creates a project file, has two annotators work through the queue, then
shows agreement and the three export strategies.

Run:  python3 demos/04_annotation_project.py
"""
import tempfile
from pathlib import Path

from codemix.annotation import AnnotationProject
from codemix.corpus import Comment, Dataset

COMMENTS = [
    ("c01", "nafrat phailana band karo"),
    ("c02", "kya mast gaana he"),
    ("c03", "bakwas log bakwas baat"),
    ("c04", "aaj ka mausam sundar he"),
]


def main():
    dataset = Dataset(
        comments=[Comment(id=cid, platform="youtube", raw_text=text,
                          language="hinglish")
                  for cid, text in COMMENTS],
        name="demo")

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "demo-project.jsonl"
        project = AnnotationProject.create(path, dataset)

        # each annotator pulls tasks and labels them; the second annotator
        # disagrees on c03
        votes = {
            "asha": {"c01": "hate", "c02": "not_hate",
                     "c03": "hate", "c04": "not_hate"},
            "bela": {"c01": "hate", "c02": "not_hate",
                     "c03": "not_hate", "c04": "not_hate"},
        }
        for annotator, script in votes.items():
            while (task := project.next_task(annotator)) is not None:
                label = script[task.comment_id]
                count, revision = project.submit(
                    task.comment_id, annotator, label, "hinglish")
                print(f"{annotator} labeled {task.comment_id} as "
                      f"{label} (revision {revision})")

        print(f"\nstats: {project.stats()}")
        agreement = project.agreement("asha", "bela")
        print(f"agreement: kappa={agreement.kappa:.4f} "
              f"p_o={agreement.observed_agreement:.2f} over "
              f"{agreement.n_items} items")

        for strategy in ("unanimous", "majority", "first"):
            result = project.export_labeled(strategy)
            kept = [(c.id, c.gold_label) for c in result.dataset.comments]
            print(f"export {strategy:<10} kept={kept} "
                  f"excluded={result.excluded}")
        project.close()

        # reopening replays the journal: nothing is lost
        reopened = AnnotationProject(path)
        print(f"\nafter reopen: {reopened.stats()}")
        reopened.close()


if __name__ == "__main__":
    main()
