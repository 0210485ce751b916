"""Greedy WordPiece segmentation, and why vocabulary coverage matters.

A multilingual-style vocabulary knows the romanized Hindi words whole; a
monolingual English-style vocabulary has to shatter them into subwords.

Run:  python3 demos/02_tokenization.py
"""
import tempfile
from pathlib import Path

from codemix import tokenizer

SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]"]
PHRASE = "kaam karna he"


def vocab_from(tokens):
    with tempfile.NamedTemporaryFile("w", suffix=".txt", delete=False) as f:
        f.write("\n".join(tokens) + "\n")
    return tokenizer.load_vocab(Path(f.name))


def main():
    multilingual = vocab_from(SPECIALS + ["kaam", "karna", "he"])
    monolingual = vocab_from(SPECIALS + ["ka", "##am", "##rna", "he"])

    for name, vocab in (("multilingual", multilingual),
                        ("monolingual", monolingual)):
        pieces = [tokenizer.wordpiece_tokenize(w, vocab)
                  for w in PHRASE.split()]
        print(f"{name:<13} {PHRASE!r} -> {pieces}")

    # encode() frames with [CLS]/[SEP] and pads to a fixed length
    seq = tokenizer.encode(PHRASE, multilingual, max_len=12)
    print(f"\nencoded tokens : {seq.tokens}")
    print(f"ids            : {seq.ids}")
    print(f"attention mask : {seq.mask}")
    print(f"\nevery encode() output has exactly max_len positions; presets "
          f"are 100 (english) and 75 (hinglish)")


if __name__ == "__main__":
    main()
