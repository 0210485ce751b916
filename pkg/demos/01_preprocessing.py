"""Walk both cleaning pipelines stage by stage on real-looking comments.

Run:  python3 demos/01_preprocessing.py
"""
from codemix import preprocess

ENGLISH_COMMENT = (
    "@amitshah You can't change the minds of such small minded people who are "
    "stuck in the past, they just don't understand logics.#IndiaAgainstCAA \U0001F92C"
)
HINGLISH_COMMENT = (
    "@narendramodi मेरा देश BHAI hate ni pyar "
    "phailata ha or jo pyar se nhi manta wo use ache se samjhate hain!! "
    "\U0001F914 https://twitter.com/4948747235330"
)


def show(pipeline, text):
    print(f"pipeline: {pipeline.language}")
    print(f"  input : {text!r}")
    for stage in pipeline.stages:
        text = stage.transform(text)
        print(f"  after {stage.name:<28} {text!r}")
    print()
    return text


def main():
    show(preprocess.english_pipeline(), ENGLISH_COMMENT)
    out = show(preprocess.hinglish_pipeline(), HINGLISH_COMMENT)

    # cleaning is idempotent: a second pass changes nothing
    again = preprocess.run_pipeline_hinglish(out)
    print(f"second pass identical: {again == out}")

    # Devanagari always romanizes to ASCII
    print(f"transliteration: {'मेरा देश'!r} -> "
          f"{preprocess.transliterate_devanagari('मेरा देश')!r}")


if __name__ == "__main__":
    main()
